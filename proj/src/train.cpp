#include "h2cgl/train.hpp"

#include "h2cgl/errors.hpp"
#include "h2cgl/version.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace h2cgl {

// --- configuration -------------------------------------------------------------------

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (batch < 1) throw std::invalid_argument("batch size must be positive");
    if (epochs < 1) throw std::invalid_argument("epochs must be positive");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("loss weights must be nonnegative");
    effective_encoder().validate();
    augment.validate();
}

EncoderConfig TrainConfig::effective_encoder() const {
    EncoderConfig e = encoder;
    e.text_features = !ablations.no_text;
    e.hierarchical = !ablations.no_hier;
    e.citation_aware = !ablations.no_cgin_rgat;
    return e;
}

namespace {

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

std::vector<std::pair<std::string, std::string>> TrainConfig::entries() const {
    return {
        {"lr", to_text(lr)},
        {"batch", to_text(batch)},
        {"epochs", to_text(epochs)},
        {"alpha", to_text(alpha)},
        {"beta", to_text(beta)},
        {"seed", to_text(seed)},
        {"dim", to_text(encoder.dim)},
        {"layers", to_text(encoder.layers)},
        {"xi", to_text(encoder.xi)},
        {"eps", to_text(encoder.eps)},
        {"learn_xi", flag(encoder.learn_xi)},
        {"age_groups", to_text(encoder.age_groups)},
        {"age_bin_years", to_text(encoder.age_bin_years)},
        {"citation_clamp", to_text(encoder.citation_clamp)},
        {"window", to_text(encoder.window)},
        {"citation_features", flag(encoder.citation_features)},
        {"drop_rate", to_text(augment.drop_rate)},
        {"tau", to_text(augment.tau)},
        {"hard_negatives", to_text(augment.hard_negatives)},
        {"no_text", flag(ablations.no_text)},
        {"no_hier", flag(ablations.no_hier)},
        {"no_cgin_rgat", flag(ablations.no_cgin_rgat)},
        {"no_cl", flag(ablations.no_cl)},
        {"generic_aug", flag(ablations.generic_aug)},
        {"no_hard_neg", flag(ablations.no_hard_neg)},
    };
}

void TrainConfig::set(const std::string& key, const std::string& v) {
    if (key == "lr") lr = parse_setting<double>(key, v);
    else if (key == "batch") batch = parse_setting<std::size_t>(key, v);
    else if (key == "epochs") epochs = parse_setting<std::size_t>(key, v);
    else if (key == "alpha") alpha = parse_setting<double>(key, v);
    else if (key == "beta") beta = parse_setting<double>(key, v);
    else if (key == "seed") seed = parse_setting<std::uint64_t>(key, v);
    else if (key == "dim") encoder.dim = parse_setting<std::size_t>(key, v);
    else if (key == "layers") encoder.layers = parse_setting<std::size_t>(key, v);
    else if (key == "xi") encoder.xi = parse_setting<double>(key, v);
    else if (key == "eps") encoder.eps = parse_setting<double>(key, v);
    else if (key == "learn_xi") encoder.learn_xi = parse_setting<bool>(key, v);
    else if (key == "age_groups") encoder.age_groups = parse_setting<std::size_t>(key, v);
    else if (key == "age_bin_years") encoder.age_bin_years = parse_setting<int>(key, v);
    else if (key == "citation_clamp") encoder.citation_clamp = parse_setting<int>(key, v);
    else if (key == "window") encoder.window = parse_setting<int>(key, v);
    else if (key == "citation_features") encoder.citation_features = parse_setting<bool>(key, v);
    else if (key == "drop_rate") augment.drop_rate = parse_setting<double>(key, v);
    else if (key == "tau") augment.tau = parse_setting<double>(key, v);
    else if (key == "hard_negatives") augment.hard_negatives = parse_setting<std::size_t>(key, v);
    else if (key == "no_text") ablations.no_text = parse_setting<bool>(key, v);
    else if (key == "no_hier") ablations.no_hier = parse_setting<bool>(key, v);
    else if (key == "no_cgin_rgat") ablations.no_cgin_rgat = parse_setting<bool>(key, v);
    else if (key == "no_cl") ablations.no_cl = parse_setting<bool>(key, v);
    else if (key == "generic_aug") ablations.generic_aug = parse_setting<bool>(key, v);
    else if (key == "no_hard_neg") ablations.no_hard_neg = parse_setting<bool>(key, v);
    else throw std::invalid_argument("unknown training key '" + key + "'");
}

std::string TrainConfig::hash() const { return hash_entries(entries()); }

// --- model ------------------------------------------------------------------------------

Heads Heads::create(ParamSet& params, std::size_t dim, std::mt19937_64& rng) {
    return {Mlp::create(params, "head.reg", dim, dim, 1, rng), Mlp::create(params, "head.cls", dim, dim, 3, rng)};
}

namespace {

std::mt19937_64& init_stream(std::mt19937_64& rng, const TrainConfig& config) {
    config.validate();
    rng.seed(mix64(config.seed ^ 0x1111));
    return rng;
}

}  // namespace

Model::Model(const TrainConfig& config)
    : config_(config),
      init_rng_(),
      encoder_(config.effective_encoder(), params_, init_stream(init_rng_, config)),
      heads_(Heads::create(params_, config.encoder.dim, init_rng_)),
      projection_(ProjectionHead::create(params_, config.encoder.dim, init_rng_)) {}

GraphBatch Model::collate(std::span<const HierHetGraph* const> graphs, const FeatureStore& features) const {
    return h2cgl::collate(graphs, features, encoder_.config());
}

Model::Output Model::heads_forward(ParamVars& pv, ad::Var embedding) const {
    return {heads_.regression.apply(pv, embedding), heads_.classification.apply(pv, embedding)};
}

double Prediction::count() const { return std::max(0.0, std::exp(log_count) - 1.0); }

std::vector<Prediction> predict(const Model& model, const Dataset& data, std::size_t chunk,
                                std::vector<std::vector<AttentionRecord>>* attention) {
    if (attention) {
        chunk = 1;
        attention->assign(data.samples.size(), {});
    }
    chunk = std::max<std::size_t>(chunk, 1);
    std::vector<Prediction> out;
    out.reserve(data.samples.size());
    for (std::size_t start = 0; start < data.samples.size(); start += chunk) {
        const std::size_t end = std::min(data.samples.size(), start + chunk);
        std::vector<const HierHetGraph*> graphs;
        for (std::size_t i = start; i < end; ++i) graphs.push_back(&data.samples[i].graph);
        ad::Tape t;
        ParamVars pv(t, model.params());
        auto o = model.encoder().forward(pv, model.collate(graphs, data.features),
                                         attention ? &(*attention)[start] : nullptr);
        auto heads = model.heads_forward(pv, o);
        const Tensor& y = t.value(heads.log_count);
        const Tensor& logits = t.value(heads.logits);
        for (std::size_t r = 0; r < graphs.size(); ++r) {
            Prediction p;
            p.log_count = y(r, 0);
            const double m = std::max({logits(r, 0), logits(r, 1), logits(r, 2)});
            double z = 0.0;
            for (std::size_t c = 0; c < 3; ++c) z += p.probabilities[c] = std::exp(logits(r, c) - m);
            for (double& q : p.probabilities) q /= z;
            p.interval = static_cast<int>(std::max_element(p.probabilities.begin(), p.probabilities.end()) -
                                          p.probabilities.begin());
            out.push_back(p);
        }
    }
    return out;
}

// --- metrics ---------------------------------------------------------------------------

double male(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("metric inputs differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - predicted[i]);
    return s / static_cast<double>(truth.size());
}

double log_r2(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("metric inputs differ in length");
    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
    double res = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
        tot += (truth[i] - mean) * (truth[i] - mean);
    }
    if (tot == 0.0) return res == 0.0 ? 1.0 : 0.0;
    return 1.0 - res / tot;
}

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("metric inputs differ in length");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const int> truth, std::span<const int> predicted, std::size_t classes) {
    if (truth.size() != predicted.size()) throw std::invalid_argument("metric inputs differ in length");
    std::vector<std::array<std::size_t, 3>> counts(classes, {0, 0, 0});  // tp, fp, fn
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        const auto p = static_cast<std::size_t>(predicted[i]);
        if (t >= classes || p >= classes) throw std::invalid_argument("class label out of range");
        if (t == p) {
            ++counts[t][0];
        } else {
            ++counts[p][1];
            ++counts[t][2];
        }
    }
    double sum = 0.0;
    for (const auto& [tp, fp, fn] : counts) {
        if (tp == 0) continue;  // F1 is 0 with no true positives, including absent classes
        sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return sum / static_cast<double>(classes);
}

PartitionMetrics compute_metrics(std::span<const double> truth, std::span<const double> predicted,
                                 std::span<const int> truth_class, std::span<const int> predicted_class) {
    return {truth.size(), male(truth, predicted), log_r2(truth, predicted), accuracy(truth_class, predicted_class),
            macro_f1(truth_class, predicted_class)};
}

namespace {

void metrics_row(std::ostream& out, const std::string& split, const char* name, const PartitionMetrics& m) {
    out << split << ',' << name << ',' << m.count << ',' << to_text(m.male) << ',' << to_text(m.log_r2) << ','
        << to_text(m.accuracy) << ',' << to_text(m.macro_f1) << '\n';
}

nlohmann::ordered_json metrics_json(const std::optional<PartitionMetrics>& m) {
    if (!m) return nullptr;
    return {{"count", m->count}, {"male", m->male}, {"log_r2", m->log_r2}, {"accuracy", m->accuracy},
            {"macro_f1", m->macro_f1}};
}

}  // namespace

void EvalReport::write_csv(std::ostream& out) const {
    out << "split,partition,count,male,log_r2,accuracy,macro_f1\n";
    if (previous) metrics_row(out, split, "previous", *previous);
    if (fresh) metrics_row(out, split, "fresh", *fresh);
    if (total) metrics_row(out, split, "total", *total);
}

void EvalReport::write_json(std::ostream& out) const {
    nlohmann::ordered_json doc{{"tool_version", std::string(kToolVersion)},
                               {"config_hash", config_hash},
                               {"split", split},
                               {"previous", metrics_json(previous)},
                               {"fresh", metrics_json(fresh)},
                               {"total", metrics_json(total)}};
    out << doc.dump(2) << '\n';
}

EvalReport evaluate(const Dataset& data, std::span<const Prediction> predictions) {
    if (predictions.size() != data.samples.size()) {
        throw std::invalid_argument("prediction count " + std::to_string(predictions.size()) + " does not match " +
                                    std::to_string(data.samples.size()) + " samples");
    }
    struct Part {
        std::vector<double> y, yhat;
        std::vector<int> c, chat;
        void add(const Sample& s, const Prediction& p) {
            y.push_back(s.label_log);
            yhat.push_back(p.log_count);
            c.push_back(s.label_interval);
            chat.push_back(p.interval);
        }
        std::optional<PartitionMetrics> metrics() const {
            if (y.empty()) return std::nullopt;
            return compute_metrics(y, yhat, c, chat);
        }
    } previous, fresh, total;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& s = data.samples[i];
        (data.paper_years.at(s.graph.target) > data.train_obs ? fresh : previous).add(s, predictions[i]);
        total.add(s, predictions[i]);
    }
    return {data.split, data.config_hash, previous.metrics(), fresh.metrics(), total.metrics()};
}

// --- loss and training ---------------------------------------------------------------------

ad::Var total_loss(ad::Tape& t, ad::Var log_count, ad::Var logits, std::span<const double> label_log,
                   std::span<const int> label_interval, ad::Var cl, double alpha, double beta, LossParts* parts) {
    const std::size_t n = label_log.size();
    if (label_interval.size() != n || t.value(log_count).rows() != n || t.value(logits).rows() != n) {
        throw ShapeError("loss inputs disagree on the batch size");
    }
    auto diff = t.sub(log_count, t.constant(Tensor(n, 1, std::vector<double>(label_log.begin(), label_log.end()))));
    auto mse = t.mean(t.mul(diff, diff));
    Tensor onehot(n, 3);
    for (std::size_t i = 0; i < n; ++i) onehot(i, static_cast<std::size_t>(label_interval[i])) = 1.0;
    auto ce = t.scale(t.sum(t.mul(t.log_softmax_rows(logits), t.constant(std::move(onehot)))),
                      -1.0 / static_cast<double>(n));
    auto total = t.add(mse, t.scale(ce, alpha));
    if (cl.valid()) total = t.add(total, t.scale(cl, beta));
    if (parts) {
        parts->mse = t.value(mse).item();
        parts->ce = t.value(ce).item();
        parts->cl = cl.valid() ? t.value(cl).item() : 0.0;
        parts->total = t.value(total).item();
    }
    return total;
}

void History::write(std::ostream& out) const {
    out << "epoch,mse,ce,cl,total,val_male,val_log_r2,val_accuracy,val_macro_f1\n";
    for (const auto& e : epochs) {
        out << e.epoch << ',' << to_text(e.train.mse) << ',' << to_text(e.train.ce) << ',' << to_text(e.train.cl)
            << ',' << to_text(e.train.total) << ',' << to_text(e.val.male) << ',' << to_text(e.val.log_r2) << ','
            << to_text(e.val.accuracy) << ',' << to_text(e.val.macro_f1) << '\n';
    }
}

namespace {

// Graphs encoded for one anchor: the clean graph, then two views, then augmented negatives.
struct AnchorGraphs {
    std::vector<HierHetGraph> owned;
    std::vector<const HierHetGraph*> graphs;
};

HierHetGraph make_view(const HierHetGraph& g, const TrainConfig& cfg, std::mt19937_64& rng) {
    return cfg.ablations.generic_aug ? generic_augment(g, cfg.augment.drop_rate, rng)
                                     : augment(g, cfg.augment.drop_rate, rng);
}

std::vector<AnchorGraphs> plan_batch(const Model& model, const Dataset& data, std::span<const std::size_t> anchors,
                                     std::mt19937_64& rng) {
    const TrainConfig& cfg = model.config();
    const bool contrast = cfg.effective_beta() > 0.0;
    const bool hard = contrast && !cfg.ablations.no_hard_neg;
    std::vector<int> intervals;
    for (std::size_t a : anchors) intervals.push_back(data.samples.at(a).label_interval);

    std::vector<AnchorGraphs> plan(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const Sample& s = data.samples[anchors[i]];
        auto& ag = plan[i];
        if (contrast) {
            ag.owned.push_back(make_view(s.graph, cfg, rng));
            ag.owned.push_back(make_view(s.graph, cfg, rng));
        }
        if (hard) {
            for (const auto& choice : sample_hard_negatives(s.hard_negatives, cfg.augment.hard_negatives, intervals, i,
                                                            rng)) {
                const HierHetGraph* source = nullptr;
                if (choice.from_pool) {
                    auto it = data.negative_pool.find(choice.paper);
                    if (it == data.negative_pool.end()) {
                        throw DataError("negative pool lacks candidate " + data.id_of(choice.paper) +
                                        "; rebuild the training cache with negatives");
                    }
                    source = &it->second.graph;
                } else {
                    source = &data.samples[anchors[choice.batch_index]].graph;
                }
                ag.owned.push_back(make_view(*source, cfg, rng));
            }
        }
        ag.graphs.push_back(&s.graph);
        for (const auto& g : ag.owned) ag.graphs.push_back(&g);
    }
    return plan;
}

ad::Index range_index(std::uint32_t from, std::uint32_t to) {
    ad::Index ix(to - from);
    std::iota(ix.begin(), ix.end(), from);
    return ix;
}

void check_finite(const LossParts& parts, const Dataset& data, std::span<const std::size_t> anchors) {
    if (std::isfinite(parts.total)) return;
    std::string ids;
    for (std::size_t a : anchors) ids += (ids.empty() ? "" : " ") + data.id_of(data.samples[a].graph.target);
    throw NumericError("non-finite loss (mse=" + to_text(parts.mse) + " ce=" + to_text(parts.ce) +
                       " cl=" + to_text(parts.cl) + ") on batch [" + ids + "]");
}

}  // namespace

Gradients batch_gradients(const Model& model, const Dataset& data, std::span<const std::size_t> anchors,
                          std::mt19937_64& rng, LossParts* parts_out) {
    const TrainConfig& cfg = model.config();
    const double beta = cfg.effective_beta();
    const auto plan = plan_batch(model, data, anchors, rng);
    const std::size_t n = anchors.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    Gradients grads = Gradients::zeros_like(model.params());
    LossParts parts;

    if (beta == 0.0 || !cfg.ablations.no_hard_neg) {
        // The loss splits into independent per-anchor terms: one tape per anchor.
        for (std::size_t i = 0; i < n; ++i) {
            const Sample& s = data.samples[anchors[i]];
            ad::Tape t;
            ParamVars pv(t, model.params());
            auto o = model.encoder().forward(pv, model.collate(plan[i].graphs, data.features));
            auto heads = model.heads_forward(pv, t.gather_rows(o, ad::Index{0}));
            ad::Var cl;
            const auto rows = static_cast<std::uint32_t>(plan[i].graphs.size());
            if (beta > 0.0) {
                auto z = model.projection().apply(pv, t.gather_rows(o, range_index(1, rows)));
                ad::Index owner(rows - 3, 0);
                auto negs = owner.empty() ? ad::Var{} : t.gather_rows(z, range_index(2, rows - 1));
                cl = cl_loss(t, t.gather_rows(z, ad::Index{0}), t.gather_rows(z, ad::Index{1}), negs, owner,
                             cfg.augment.tau);
            }
            const double y = s.label_log;
            const int c = s.label_interval;
            LossParts p;
            auto loss = total_loss(t, heads.log_count, heads.logits, std::span<const double>(&y, 1),
                                   std::span<const int>(&c, 1), cl, cfg.alpha, beta, &p);
            check_finite(p, data, anchors.subspan(i, 1));
            t.backward(t.scale(loss, inv_n));
            grads.merge(t.parameter_gradients(model.params()));
            parts.mse += p.mse * inv_n;
            parts.ce += p.ce * inv_n;
            parts.cl += p.cl * inv_n;
            parts.total += p.total * inv_n;
        }
    } else {
        // Other anchors' second views act as negatives, coupling the batch. Encode each anchor on its
        // own tape, differentiate the head-level loss with the embeddings as leaves, then push those
        // embedding gradients back through a second encoder pass per anchor.
        const std::size_t d = model.encoder().config().dim;
        Tensor embeddings(3 * n, d);
        auto encode = [&](std::size_t i, ParamVars& pv) {
            return model.encoder().forward(pv, model.collate(plan[i].graphs, data.features));
        };
        for (std::size_t i = 0; i < n; ++i) {
            ad::Tape t;
            ParamVars pv(t, model.params());
            const Tensor& o = t.value(encode(i, pv));
            for (std::size_t v = 0; v < 3; ++v)
                std::copy(o.row(v).begin(), o.row(v).end(), embeddings.row(v * n + i).begin());
        }
        ad::Tape t;
        ParamVars pv(t, model.params());
        auto leaf = t.leaf(embeddings);
        const auto un = static_cast<std::uint32_t>(n);
        auto heads = model.heads_forward(pv, t.gather_rows(leaf, range_index(0, un)));
        auto z1 = model.projection().apply(pv, t.gather_rows(leaf, range_index(un, 2 * un)));
        auto z2 = model.projection().apply(pv, t.gather_rows(leaf, range_index(2 * un, 3 * un)));
        ad::Index neg_rows, owner;
        for (std::uint32_t i = 0; i < un; ++i)
            for (std::uint32_t j = 0; j < un; ++j)
                if (i != j) {
                    neg_rows.push_back(j);
                    owner.push_back(i);
                }
        auto negs = owner.empty() ? ad::Var{} : t.gather_rows(z2, neg_rows);
        auto cl = cl_loss(t, z1, z2, negs, owner, cfg.augment.tau);
        std::vector<double> y;
        std::vector<int> c;
        for (std::size_t a : anchors) {
            y.push_back(data.samples[a].label_log);
            c.push_back(data.samples[a].label_interval);
        }
        auto loss = total_loss(t, heads.log_count, heads.logits, y, c, cl, cfg.alpha, beta, &parts);
        check_finite(parts, data, anchors);
        t.backward(loss);
        grads.merge(t.parameter_gradients(model.params()));
        const Tensor upstream = t.grad(leaf);
        for (std::size_t i = 0; i < n; ++i) {
            ad::Tape t2;
            ParamVars pv2(t2, model.params());
            auto o = encode(i, pv2);
            Tensor g(3, d);
            for (std::size_t v = 0; v < 3; ++v)
                std::copy(upstream.row(v * n + i).begin(), upstream.row(v * n + i).end(), g.row(v).begin());
            t2.backward(t2.sum(t2.mul(o, t2.constant(std::move(g)))));
            grads.merge(t2.parameter_gradients(model.params()));
        }
    }
    if (!grads.all_finite()) throw NumericError("non-finite gradients (loss " + to_text(parts.total) + ")");
    if (parts_out) *parts_out = parts;
    return grads;
}

History train(Model& model, const Dataset& train_data, const Dataset& val_data, const EpochCallback& on_epoch) {
    const TrainConfig& cfg = model.config();
    cfg.validate();
    if (train_data.samples.empty()) throw DataError("training set is empty");
    if (val_data.samples.empty()) throw DataError("validation set is empty");
    if (cfg.effective_beta() > 0.0 && !cfg.ablations.no_hard_neg && train_data.negative_pool.empty()) {
        bool any = false;
        for (const auto& s : train_data.samples) any = any || !s.hard_negatives.empty();
        if (any) throw DataError("training cache has no negative pool; rebuild it with negatives");
    }

    ParamSet& params = model.params();
    AdamState opt = AdamState::for_params(params, cfg.lr);
    std::mt19937_64 order_rng(mix64(cfg.seed ^ 0x2222));
    std::mt19937_64 aug_rng(mix64(cfg.seed ^ 0x3333));
    std::vector<std::size_t> order(train_data.samples.size());
    std::iota(order.begin(), order.end(), 0);

    History history;
    history.best_val_male = INFINITY;
    std::vector<Tensor> best;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), order_rng);
        EpochRecord rec;
        rec.epoch = epoch;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
            const auto anchors = std::span<const std::size_t>(order).subspan(b, std::min(cfg.batch, order.size() - b));
            LossParts p;
            Gradients g;
            try {
                g = batch_gradients(model, train_data, anchors, aug_rng, &p);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
            }
            adam_step(params, g, opt);
            const double w = static_cast<double>(anchors.size()) / static_cast<double>(order.size());
            rec.train.mse += p.mse * w;
            rec.train.ce += p.ce * w;
            rec.train.cl += p.cl * w;
            rec.train.total += p.total * w;
        }
        const auto preds = predict(model, val_data);
        rec.val = *evaluate(val_data, preds).total;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!std::isfinite(rec.val.male)) {
            throw NumericError("epoch " + std::to_string(epoch) + ": validation predictions are not finite");
        }
        if (rec.val.male < history.best_val_male) {
            history.best_val_male = rec.val.male;
            history.best_epoch = epoch;
            best.clear();
            for (const auto& p : params) best.push_back(p.value);
        }
        history.epochs.push_back(rec);
        if (on_epoch && !on_epoch(rec)) break;
    }
    for (std::size_t i = 0; i < best.size(); ++i) params[i].value = best[i];
    return history;
}

}  // namespace h2cgl
