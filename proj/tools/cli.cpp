#include "cli.hpp"

#include "run_config.hpp"

#include "h2cgl/corpus.hpp"
#include "h2cgl/errors.hpp"
#include "h2cgl/graph.hpp"
#include "h2cgl/synth.hpp"
#include "h2cgl/train.hpp"
#include "h2cgl/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

namespace h2cgl::cli {

namespace fs = std::filesystem;

namespace {

// --config, --set and named flags for one subcommand, applied in that order over the defaults.
class Overrides {
public:
    explicit Overrides(CLI::App* sub) : sub_(sub) {
        sub->add_option("--config", config_file_, "key = value config file");
        sub->add_option("--set", sets_, "key=value override (repeatable)");
    }

    Overrides& value(const std::string& flag, const std::string& key, const std::string& help) {
        sub_->add_option_function<std::string>(flag, [this, key](const std::string& v) { flags_.emplace_back(key, v); },
                                               help);
        return *this;
    }

    Overrides& toggle(const std::string& flag, const std::string& key, const std::string& help) {
        sub_->add_flag_function(flag, [this, key](std::int64_t) { flags_.emplace_back(key, "true"); }, help);
        return *this;
    }

    template <typename Settings>
    void resolve(Settings& s) const {
        if (!config_file_.empty()) apply_entries(s, read_config_file(config_file_));
        for (const auto& kv : sets_) {
            const auto [k, v] = split_assignment(kv);
            s.set(k, v);
        }
        apply_entries(s, flags_);
    }

private:
    CLI::App* sub_;
    std::string config_file_;
    std::vector<std::string> sets_;
    Entries flags_;
};

void log_config(std::ostream& log, const std::string& command, const Entries& entries, const std::string& hash) {
    log << "[h2cgl] " << command << " config hash " << hash << '\n';
    for (const auto& [k, v] : entries) log << "  " << k << " = " << v << '\n';
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

std::string header_line(const std::string& kind, const std::string& config_hash) {
    return "# h2cgl " + kind + " version=" + std::string(kToolVersion) + " config_hash=" + config_hash;
}

std::string cache_path(const std::string& dir, const std::string& split) { return (fs::path(dir) / (split + ".cache")).string(); }

Dataset load_cache(const std::string& dir, const std::string& split, const std::string& expected_hash = "") {
    auto in = open_in(cache_path(dir, split));
    return load_dataset(in, expected_hash);
}

std::string file_digest(const std::string& path) {
    auto in = open_in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(buf.str());
    return hex.str();
}

// --- synth ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
};

int cmd_synth(const Overrides& o, const SynthArgs& a, std::ostream& log) {
    SynthConfig cfg;
    o.resolve(cfg);
    cfg.validate();
    log_config(log, "synth", cfg.entries(), cfg.hash());
    const auto records = generate(cfg);
    auto out = open_out(a.out);
    write_corpus(out, records, cfg.hash());
    if (!out.flush()) throw DataError("failed writing " + a.out);
    log << "[h2cgl] wrote " << records.size() << " records to " << a.out << '\n';
    return kOk;
}

// --- build ---------------------------------------------------------------------------

struct BuildArgs {
    std::string corpus;
    std::string out_dir;
};

int cmd_build(const Overrides& o, const BuildArgs& a, std::ostream& out, std::ostream& log) {
    BuildSettings s;
    o.resolve(s);

    ParseOptions po;
    po.strict = s.strict;
    po.min_abstract_words = s.min_abstract_words;
    ParseReport report;
    const auto net = parse_corpus_file(a.corpus, po, report);
    log << "[h2cgl] parsed " << report.kept << " of " << report.records << " records ("
        << report.total_dropped_records() << " dropped), years " << net.min_year() << "-" << net.max_year() << '\n';

    // Unset observation points default to two-year spacing ending at the last labelable year.
    if (s.test_obs == 0) s.test_obs = net.max_year() - s.delta;
    if (s.val_obs == 0) s.val_obs = s.test_obs - 2;
    if (s.train_obs == 0) s.train_obs = s.val_obs - 2;

    // The cache hash also covers the corpus bytes, so a regenerated corpus invalidates checkpoints.
    const std::string digest = file_digest(a.corpus);
    Entries hashed = s.entries();
    hashed.emplace_back("corpus_digest", digest);
    const std::string hash = hash_entries(hashed);
    log_config(log, "build", hashed, hash);

    GraphConfig gc{s.window, s.k, s.delta};
    gc.validate();
    SplitConfig sc{s.train_obs, s.val_obs, s.test_obs, s.delta, {s.min_references, s.min_citations}};
    const Splits splits = split_datasets(net, sc);
    for (const auto& w : splits.warnings) log << "[h2cgl] warning: " << w << '\n';

    fs::create_directories(a.out_dir);
    const TextFeatures features(net, HashEmbedConfig{s.dim, s.feature_seed});
    const std::pair<const char*, const std::vector<PaperIdx>*> parts[] = {
        {"train", &splits.train}, {"val", &splits.val}, {"test", &splits.test}};
    const int obs[] = {s.train_obs, s.val_obs, s.test_obs};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto [name, ids] = parts[i];
        const bool negatives = i == 0;
        Dataset d = build_dataset(net, features, *ids, obs[i], s.train_obs, gc, negatives, name, hash);
        auto f = open_out(cache_path(a.out_dir, name));
        save_dataset(f, d);
        log << "[h2cgl] " << name << ": " << d.samples.size() << " samples";
        if (negatives) log << ", " << d.negative_pool.size() << " negative graphs";
        log << '\n';
    }

    auto cfg_out = open_out((fs::path(a.out_dir) / "build.config").string());
    cfg_out << header_line("build-config", hash) << " corpus_digest=" << digest << '\n';
    write_config(cfg_out, s.entries());
    auto table = open_out((fs::path(a.out_dir) / "splits.csv").string());
    table << header_line("splits", hash) << '\n';
    splits.write_table(table);
    splits.write_table(out);
    return kOk;
}

// --- train -------------------------------------------------------------------------------

struct TrainArgs {
    std::string data_dir;
    std::string checkpoint;
    std::string history;
};

void check_feature_dim(const TrainConfig& cfg, const Dataset& d) {
    if (cfg.effective_encoder().text_features && d.features.dim() != cfg.encoder.dim) {
        throw DataError("cache features have dimension " + std::to_string(d.features.dim()) + " but dim = " +
                        std::to_string(cfg.encoder.dim) + "; rebuild the caches with --dim " +
                        std::to_string(cfg.encoder.dim));
    }
}

int cmd_train(const Overrides& o, const TrainArgs& a, std::ostream& log) {
    TrainConfig cfg;
    o.resolve(cfg);
    cfg.validate();
    log_config(log, "train", cfg.entries(), cfg.hash());

    const Dataset train_data = load_cache(a.data_dir, "train");
    const Dataset val_data = load_cache(a.data_dir, "val", train_data.config_hash);
    check_feature_dim(cfg, train_data);
    log << "[h2cgl] " << train_data.samples.size() << " training and " << val_data.samples.size()
        << " validation samples (cache " << train_data.config_hash << ")\n";

    Model model(cfg);
    const auto history = train(model, train_data, val_data, [&log](const EpochRecord& e) {
        log << "[h2cgl] epoch " << e.epoch << " loss " << e.train.total << " (mse " << e.train.mse << " ce "
            << e.train.ce << " cl " << e.train.cl << ") val MALE " << e.val.male << " LogR2 " << e.val.log_r2
            << " acc " << e.val.accuracy << " [" << std::fixed << std::setprecision(1) << e.seconds << "s]"
            << std::defaultfloat << std::setprecision(6) << '\n';
        return true;
    });
    log << "[h2cgl] best epoch " << history.best_epoch << " val MALE " << history.best_val_male << '\n';

    CheckpointMeta meta;
    meta.set("tool_version", std::string(kToolVersion));
    meta.set("data_hash", train_data.config_hash);
    meta.set("train_hash", cfg.hash());
    meta.set("best_epoch", std::to_string(history.best_epoch));
    meta.set("best_val_male", to_text(history.best_val_male));
    for (const auto& [k, v] : cfg.entries()) meta.set("train." + k, v);
    auto ck = open_out(a.checkpoint);
    save_checkpoint(ck, model.params(), meta);

    const std::string history_path = a.history.empty() ? a.checkpoint + ".history.csv" : a.history;
    auto h = open_out(history_path);
    h << header_line("history", train_data.config_hash) << " train_hash=" << cfg.hash() << '\n';
    history.write(h);
    log << "[h2cgl] wrote " << a.checkpoint << " and " << history_path << '\n';
    return kOk;
}

// --- checkpoint consumers ---------------------------------------------------------------------

struct Loaded {
    std::unique_ptr<Model> model;
    CheckpointMeta meta;
    Dataset data;
};

Loaded load_for_inference(const std::string& checkpoint, const std::string& data_dir, const std::string& split,
                          std::ostream& log) {
    CheckpointMeta meta;
    {
        auto in = open_in(checkpoint);
        meta = read_checkpoint_meta(in);
    }
    if (meta.get("tool_version") != kToolVersion) {
        throw DataError("checkpoint written by tool version " + meta.get("tool_version") + ", this is " +
                        std::string(kToolVersion));
    }
    TrainConfig cfg;
    for (const auto& [k, v] : meta.entries)
        if (k.rfind("train.", 0) == 0) cfg.set(k.substr(6), v);
    if (cfg.hash() != meta.get("train_hash")) throw DataError("checkpoint training config does not match its hash");

    Loaded l{std::make_unique<Model>(cfg), {}, {}};
    {
        auto in = open_in(checkpoint);
        l.meta = load_checkpoint(in, l.model->params());
    }
    try {
        l.data = load_cache(data_dir, split, meta.get("data_hash"));
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " (checkpoint was trained on cache " + meta.get("data_hash") + ")");
    }
    check_feature_dim(cfg, l.data);
    log << "[h2cgl] model " << meta.get("train_hash") << " on " << split << " cache " << l.data.config_hash << " ("
        << l.data.samples.size() << " samples)\n";
    return l;
}

struct InferArgs {
    std::string data_dir;
    std::string checkpoint;
    std::string split = "test";
    std::string out;
    std::vector<std::string> ids;
};

int cmd_eval(const InferArgs& a, std::ostream& out, std::ostream& log) {
    auto l = load_for_inference(a.checkpoint, a.data_dir, a.split, log);
    const auto preds = predict(*l.model, l.data);
    const auto report = evaluate(l.data, preds);
    report.write_csv(out);
    if (!a.out.empty()) {
        auto csv = open_out(a.out + ".csv");
        csv << header_line("eval", l.data.config_hash) << '\n';
        report.write_csv(csv);
        auto json = open_out(a.out + ".json");
        report.write_json(json);
        log << "[h2cgl] wrote " << a.out << ".csv and " << a.out << ".json\n";
    }
    return kOk;
}

int cmd_predict(const InferArgs& a, std::ostream& out, std::ostream& log) {
    auto l = load_for_inference(a.checkpoint, a.data_dir, a.split, log);
    const auto preds = predict(*l.model, l.data);
    std::ofstream file;
    if (!a.out.empty()) file = open_out(a.out);
    std::ostream& o = a.out.empty() ? out : file;
    o << header_line("predictions", l.data.config_hash) << " train_hash=" << l.meta.get("train_hash") << '\n';
    o << "id,log_count,count,count_rounded,interval,p_lt10,p_10to100,p_ge100\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& p = preds[i];
        o << l.data.id_of(l.data.samples[i].graph.target) << ',' << to_text(p.log_count) << ',' << to_text(p.count())
          << ',' << std::llround(p.count()) << ',' << p.interval << ',' << to_text(p.probabilities[0]) << ','
          << to_text(p.probabilities[1]) << ',' << to_text(p.probabilities[2]) << '\n';
    }
    return kOk;
}

std::string node_label(const Dataset& d, const GraphNode& n) {
    switch (n.kind) {
        case NodeKind::Paper: return d.id_of(n.key);
        case NodeKind::Author: return "author:" + std::to_string(n.key);
        case NodeKind::Venue: return "venue:" + std::to_string(n.key);
        case NodeKind::Time: return "time:" + std::to_string(n.key);
        case NodeKind::Snapshot: return "snapshot:" + std::to_string(n.key);
    }
    return {};
}

int cmd_inspect(const InferArgs& a, std::ostream& out, std::ostream& log) {
    auto l = load_for_inference(a.checkpoint, a.data_dir, a.split, log);
    std::ofstream file;
    if (!a.out.empty()) file = open_out(a.out);
    std::ostream& o = a.out.empty() ? out : file;
    o << header_line("attention", l.data.config_hash) << " train_hash=" << l.meta.get("train_hash") << '\n';
    for (const auto& id : a.ids) {
        const auto index = l.data.find_sample(id);
        if (!index) throw DataError("paper " + id + " is not a sample of the " + a.split + " split");
        const HierHetGraph& g = l.data.samples[*index].graph;
        const HierHetGraph* graphs[] = {&g};
        std::vector<AttentionRecord> records;
        ad::Tape t;
        ParamVars pv(t, l.model->params());
        l.model->encoder().forward(pv, l.model->collate(graphs, l.data.features), &records);
        for (const auto& r : records) {
            const auto& sub = g.subgraphs.at(r.edge.subgraph);
            const GraphNode& src = sub.nodes.at(r.edge.src_local);
            const GraphNode& dst = sub.nodes.at(r.edge.dst_local);
            nlohmann::ordered_json line{{"id", id},
                                        {"layer", r.layer},
                                        {"relation", std::string(to_string(r.relation))},
                                        {"src", node_label(l.data, src)},
                                        {"dst", node_label(l.data, dst)},
                                        {"alpha", r.alpha},
                                        {"role", std::string(to_string(src.role))},
                                        {"snapshot_year", sub.year},
                                        {"src_citations", src.citations}};
            o << line.dump() << '\n';
        }
        log << "[h2cgl] " << id << ": " << records.size() << " attention coefficients\n";
    }
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
    CLI::App app{"Citation-impact prediction over hierarchical heterogeneous graphs", "h2cgl"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    SynthArgs synth_args;
    synth->add_option("--out,-o", synth_args.out, "corpus file to write")->required();
    Overrides synth_o(synth);
    synth_o.value("--seed", "seed", "generator seed")
        .value("--years", "n_years", "number of years")
        .value("--start-year", "start_year", "first year")
        .value("--papers-per-year", "papers_per_year", "papers published per year")
        .value("--attachment", "attachment", "preferential|uniform");

    auto* build = app.add_subcommand("build", "build train/val/test sample caches from a corpus");
    BuildArgs build_args;
    build->add_option("--corpus", build_args.corpus, "corpus file")->required();
    build->add_option("--out-dir", build_args.out_dir, "directory for the caches")->required();
    Overrides build_o(build);
    build_o.value("--train-obs", "train_obs", "training observation year")
        .value("--val-obs", "val_obs", "validation observation year")
        .value("--test-obs", "test_obs", "test observation year")
        .value("--delta", "delta", "label horizon in years")
        .value("--window", "window", "snapshots per graph")
        .value("--k", "k", "papers kept per relation and year")
        .value("--dim", "dim", "feature dimension")
        .value("--feature-seed", "feature_seed", "hashing seed for text features")
        .toggle("--strict", "strict", "drop records with short abstracts");

    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
    TrainArgs train_args;
    train_cmd->add_option("--data-dir", train_args.data_dir, "directory with the sample caches")->required();
    train_cmd->add_option("--checkpoint", train_args.checkpoint, "checkpoint to write")->required();
    train_cmd->add_option("--history", train_args.history, "per-epoch history CSV");
    Overrides train_o(train_cmd);
    train_o.value("--lr", "lr", "Adam learning rate")
        .value("--batch", "batch", "batch size")
        .value("--epochs", "epochs", "epochs")
        .value("--alpha", "alpha", "classification loss weight")
        .value("--beta", "beta", "contrastive loss weight")
        .value("--seed", "seed", "training seed")
        .value("--dim", "dim", "embedding dimension")
        .value("--layers", "layers", "encoder layers")
        .value("--drop-rate", "drop_rate", "augmentation drop rate")
        .value("--tau", "tau", "contrastive temperature")
        .value("--hard-negatives", "hard_negatives", "hard negatives per anchor")
        .toggle("--no-text", "no_text", "random node features")
        .toggle("--no-hier", "no_hier", "snapshot self-attention instead of the temporal GIN")
        .toggle("--no-cgin-rgat", "no_cgin_rgat", "plain GIN/GAT for citation and paper-time relations")
        .toggle("--no-cl", "no_cl", "disable the contrastive term")
        .toggle("--generic-aug", "generic_aug", "edge-drop and attribute-mask views")
        .toggle("--no-hard-neg", "no_hard_neg", "in-batch negatives only");

    InferArgs infer_args;
    auto add_infer = [&infer_args](CLI::App* sub) {
        sub->add_option("--data-dir", infer_args.data_dir, "directory with the sample caches")->required();
        sub->add_option("--checkpoint", infer_args.checkpoint, "trained checkpoint")->required();
        sub->add_option("--split", infer_args.split, "train|val|test")
            ->check(CLI::IsMember({"train", "val", "test"}))
            ->capture_default_str();
    };
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    add_infer(eval);
    eval->add_option("--out", infer_args.out, "report path prefix (.csv and .json)");
    auto* predict_cmd = app.add_subcommand("predict", "per-paper predictions");
    add_infer(predict_cmd);
    predict_cmd->add_option("--out", infer_args.out, "output CSV (default stdout)");
    auto* inspect = app.add_subcommand("inspect-attention", "dump attention coefficients for given papers");
    add_infer(inspect);
    inspect->add_option("--ids", infer_args.ids, "paper ids")->required()->delimiter(',');
    inspect->add_option("--out", infer_args.out, "output JSONL (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, log);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*synth) return cmd_synth(synth_o, synth_args, log);
        if (*build) return cmd_build(build_o, build_args, out, log);
        if (*train_cmd) return cmd_train(train_o, train_args, log);
        if (*eval) return cmd_eval(infer_args, out, log);
        if (*predict_cmd) return cmd_predict(infer_args, out, log);
        if (*inspect) return cmd_inspect(infer_args, out, log);
    } catch (const NumericError& e) {
        log << "h2cgl: numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const DataError& e) {
        log << "h2cgl: data error: " << e.what() << '\n';
        return kData;
    } catch (const ShapeError& e) {
        log << "h2cgl: data error: " << e.what() << '\n';
        return kData;
    } catch (const std::invalid_argument& e) {
        log << "h2cgl: usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        log << "h2cgl: error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}

}  // namespace h2cgl::cli
