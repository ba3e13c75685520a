#include "cli.hpp"
#include "run_config.hpp"

#include "h2cgl/corpus.hpp"
#include "h2cgl/graph.hpp"
#include "h2cgl/synth.hpp"
#include "h2cgl/version.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace h2cgl;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string log;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "h2cgl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, log;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, log);
    return {code, out.str(), log.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

// Fresh scratch directory per test case.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name)
        : dir(fs::temp_directory_path() / ("h2cgl_cli_" + name + "_" + std::to_string(::getpid()))) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

Dataset read_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return load_dataset(in);
}

// Small corpus plus caches with 8-dimensional features, shared by the model-level cases.
void small_pipeline(const Scratch& s) {
    REQUIRE(run({"synth", "--out", s / "corpus.tsv", "--years", "10", "--papers-per-year", "60", "--seed", "3"}).code ==
            0);
    auto b = run({"build", "--corpus", s / "corpus.tsv", "--out-dir", s / "data", "--train-obs", "2002", "--val-obs",
                  "2003", "--test-obs", "2004", "--dim", "8", "--set", "min_citations=3"});
    INFO(b.log);
    REQUIRE(b.code == 0);
}

const std::vector<std::string> kTinyTrain = {"--dim", "8", "--layers", "1", "--epochs", "2", "--batch", "8",
                                             "--lr", "1e-2"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("config files parse, reject malformed lines and round trip") {
    std::istringstream good("# comment\nseed = 7\n\n n_years=12  # trailing\n");
    auto e = cli::parse_config(good);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == std::pair<std::string, std::string>{"seed", "7"});
    CHECK(e[1] == std::pair<std::string, std::string>{"n_years", "12"});
    std::istringstream dup("seed = 1\nseed = 2\n");
    CHECK_THROWS_AS(cli::parse_config(dup), std::invalid_argument);
    std::istringstream bare("seed\n");
    CHECK_THROWS_AS(cli::parse_config(bare), std::invalid_argument);
    CHECK_THROWS_AS(cli::split_assignment("novalue"), std::invalid_argument);

    cli::BuildSettings b;
    b.k = 12;
    b.strict = true;
    std::ostringstream written;
    cli::write_config(written, b.entries());
    std::istringstream back(written.str());
    cli::BuildSettings c;
    cli::apply_entries(c, cli::parse_config(back));
    CHECK(c.entries() == b.entries());
    CHECK_THROWS_AS(c.set("kk", "1"), std::invalid_argument);

    SynthConfig sc;
    sc.seed = 9;
    sc.attachment = Attachment::Uniform;
    SynthConfig sd;
    for (const auto& [k, v] : sc.entries()) sd.set(k, v);
    CHECK(sd.hash() == sc.hash());
    CHECK_THROWS_AS(sd.set("attachment", "random"), std::invalid_argument);
}

TEST_CASE("synth command") {
    Scratch s("synth");
    SUBCASE("default corpus parses with zero drops") {
        REQUIRE(run({"synth", "--out", s / "c.tsv"}).code == 0);
        ParseReport report;
        auto net = parse_corpus_file(s / "c.tsv", ParseOptions{}, report);
        CHECK(report.total_dropped_records() == 0);
        CHECK(net.size() == 2400);
    }
    SUBCASE("seeded runs are identical") {
        REQUIRE(run({"synth", "--out", s / "a.tsv", "--seed", "7", "--years", "3"}).code == 0);
        REQUIRE(run({"synth", "--out", s / "b.tsv", "--seed", "7", "--years", "3"}).code == 0);
        CHECK(slurp(s.dir / "a.tsv") == slurp(s.dir / "b.tsv"));
    }
    SUBCASE("record count follows years and papers per year") {
        REQUIRE(run({"synth", "--out", s / "c.tsv", "--years", "12", "--papers-per-year", "200"}).code == 0);
        std::size_t records = 0;
        for (const auto& l : lines(slurp(s.dir / "c.tsv"))) records += !l.empty() && l[0] != '#';
        CHECK(records == 2400);
    }
    SUBCASE("flags override the config file, which overrides defaults") {
        std::ofstream(s / "synth.cfg") << "seed = 3\nn_years = 4\n";
        auto r = run({"synth", "--out", s / "c.tsv", "--config", s / "synth.cfg", "--seed", "5"});
        REQUIRE(r.code == 0);
        SynthConfig expected;
        expected.seed = 5;
        expected.n_years = 4;
        CHECK(lines(slurp(s.dir / "c.tsv"))[0].find("config_hash=" + expected.hash()) != std::string::npos);
        CHECK(r.log.find(expected.hash()) != std::string::npos);
        CHECK(r.log.find("n_years = 4") != std::string::npos);
    }
    SUBCASE("usage errors exit 1") {
        std::ofstream(s / "bad.cfg") << "seeds = 3\n";
        CHECK(run({"synth", "--out", s / "c.tsv", "--config", s / "bad.cfg"}).code == 1);
        CHECK(run({"synth", "--out", s / "c.tsv", "--set", "colour=red"}).code == 1);
        CHECK(run({"synth", "--out", s / "c.tsv", "--seed", "x"}).code == 1);
        CHECK(run({"synth"}).code == 1);
        CHECK(run({"frobnicate"}).code == 1);
        CHECK(run({}).code == 1);
    }
    CHECK(run({"synth", "--out", s / "c.tsv", "--config", s / "missing.cfg"}).code == 2);
}

TEST_CASE("build command writes caches, statistics and a reusable config") {
    Scratch s("build");
    REQUIRE(run({"synth", "--out", s / "corpus.tsv", "--years", "10", "--papers-per-year", "60"}).code == 0);
    auto r = run({"build", "--corpus", s / "corpus.tsv", "--out-dir", s / "data", "--train-obs", "2002", "--val-obs",
                  "2003", "--test-obs", "2004", "--dim", "8", "--set", "min_citations=3"});
    INFO(r.log);
    REQUIRE(r.code == 0);

    auto train = read_cache(s / "data/train.cache");
    auto val = read_cache(s / "data/val.cache");
    auto test = read_cache(s / "data/test.cache");
    CHECK(train.config_hash == test.config_hash);
    CHECK(val.config_hash == test.config_hash);
    CHECK(!train.negative_pool.empty());
    CHECK(test.negative_pool.empty());
    auto ids = [](const Dataset& d) {
        std::set<std::string> out;
        for (const auto& smp : d.samples) out.insert(d.id_of(smp.graph.target));
        return out;
    };
    const auto tr = ids(train), va = ids(val), te = ids(test);
    CHECK(std::includes(va.begin(), va.end(), tr.begin(), tr.end()));
    CHECK(std::includes(te.begin(), te.end(), va.begin(), va.end()));
    CHECK(te.size() > va.size());

    // split,papers,lt10,10to100,ge100,fresh
    const auto table = lines(r.out);
    REQUIRE(table.size() == 4);
    const std::size_t sizes[] = {train.samples.size(), val.samples.size(), test.samples.size()};
    for (std::size_t i = 1; i < 4; ++i) {
        std::vector<long> cells;
        std::istringstream row(table[i]);
        std::string cell;
        std::getline(row, cell, ',');
        while (std::getline(row, cell, ',')) cells.push_back(std::stol(cell));
        CHECK(cells[0] == static_cast<long>(sizes[i - 1]));
        CHECK(cells[1] + cells[2] + cells[3] == cells[0]);
    }
    CHECK(lines(slurp(s.dir / "data/splits.csv"))[0].rfind("# h2cgl splits version=", 0) == 0);

    // Feeding the written config back reproduces the same caches.
    auto again = run({"build", "--corpus", s / "corpus.tsv", "--out-dir", s / "again", "--config",
                      s / "data/build.config"});
    REQUIRE(again.code == 0);
    CHECK(slurp(s.dir / "again/test.cache") == slurp(s.dir / "data/test.cache"));

    SUBCASE("a label horizon past the corpus end is a data error") {
        auto late = run({"build", "--corpus", s / "corpus.tsv", "--out-dir", s / "late", "--train-obs", "2002",
                         "--val-obs", "2003", "--test-obs", "2006"});
        CHECK(late.code == 2);
        CHECK(late.log.find("2011") != std::string::npos);
    }
    SUBCASE("unordered observation years") {
        CHECK(run({"build", "--corpus", s / "corpus.tsv", "--out-dir", s / "x", "--train-obs", "2003", "--val-obs",
                   "2002", "--test-obs", "2004"})
                  .code != 0);
    }
    SUBCASE("missing corpus") {
        CHECK(run({"build", "--corpus", s / "nope.tsv", "--out-dir", s / "x"}).code == 2);
    }
}

TEST_CASE("train, eval, predict and inspect-attention") {
    Scratch s("pipeline");
    small_pipeline(s);
    auto t = run(cat({"train", "--data-dir", s / "data", "--checkpoint", s / "m.ckpt"}, kTinyTrain));
    INFO(t.log);
    REQUIRE(t.code == 0);
    CHECK(t.log.find("epoch 2") != std::string::npos);
    const auto history = lines(slurp(s.dir / "m.ckpt.history.csv"));
    REQUIRE(history.size() == 4);
    CHECK(history[0].rfind("# h2cgl history version=" + std::string(kToolVersion), 0) == 0);
    CHECK(history[1] == "epoch,mse,ce,cl,total,val_male,val_log_r2,val_accuracy,val_macro_f1");

    SUBCASE("training is deterministic") {
        REQUIRE(run(cat({"train", "--data-dir", s / "data", "--checkpoint", s / "m2.ckpt"}, kTinyTrain)).code == 0);
        CHECK(slurp(s.dir / "m.ckpt") == slurp(s.dir / "m2.ckpt"));
        CHECK(slurp(s.dir / "m.ckpt.history.csv") == slurp(s.dir / "m2.ckpt.history.csv"));
    }
    SUBCASE("eval reports every partition") {
        auto e = run({"eval", "--data-dir", s / "data", "--checkpoint", s / "m.ckpt", "--out", s / "report"});
        INFO(e.log);
        REQUIRE(e.code == 0);
        auto doc = nlohmann::json::parse(slurp(s.dir / "report.json"));
        CHECK(doc["split"] == "test");
        CHECK(doc["tool_version"] == std::string(kToolVersion));
        for (const char* part : {"previous", "fresh", "total"}) CHECK(doc[part]["count"].get<int>() > 0);
        CHECK(doc["previous"]["count"].get<int>() + doc["fresh"]["count"].get<int>() ==
              doc["total"]["count"].get<int>());
        const auto csv = lines(slurp(s.dir / "report.csv"));
        REQUIRE(csv.size() == 5);
        CHECK(csv[0].rfind("# h2cgl eval", 0) == 0);
        CHECK(lines(e.out).size() == 4);
    }
    SUBCASE("predict writes one row per sample") {
        auto p = run({"predict", "--data-dir", s / "data", "--checkpoint", s / "m.ckpt", "--split", "val"});
        REQUIRE(p.code == 0);
        const auto rows = lines(p.out);
        auto val = read_cache(s / "data/val.cache");
        REQUIRE(rows.size() == val.samples.size() + 2);
        CHECK(rows[1] == "id,log_count,count,count_rounded,interval,p_lt10,p_10to100,p_ge100");
        std::istringstream row(rows[2]);
        std::vector<std::string> cells;
        for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 8);
        CHECK(cells[0] == val.id_of(val.samples[0].graph.target));
        const double log_count = std::stod(cells[1]);
        CHECK(std::stod(cells[2]) == doctest::Approx(std::max(0.0, std::exp(log_count) - 1.0)));
        CHECK(std::stod(cells[5]) + std::stod(cells[6]) + std::stod(cells[7]) == doctest::Approx(1.0));
    }
    SUBCASE("inspect-attention dumps coefficients for named papers") {
        auto test = read_cache(s / "data/test.cache");
        const std::string id = test.id_of(test.samples[3].graph.target);
        auto a = run({"inspect-attention", "--data-dir", s / "data", "--checkpoint", s / "m.ckpt", "--ids", id});
        INFO(a.log);
        REQUIRE(a.code == 0);
        const auto rows = lines(a.out);
        REQUIRE(rows.size() > 1);
        std::set<std::string> relations;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            auto j = nlohmann::json::parse(rows[i]);
            CHECK(j["id"] == id);
            for (const char* key : {"layer", "relation", "src", "dst", "alpha", "role", "snapshot_year",
                                    "src_citations"})
                CHECK(j.contains(key));
            CHECK(j["alpha"].get<double>() >= 0.0);
            CHECK(j["alpha"].get<double>() <= 1.0);
            relations.insert(j["relation"].get<std::string>());
        }
        CHECK(relations.count("is_in") == 1);
        CHECK(relations.count("is_cited_by") == 1);
        CHECK(run({"inspect-attention", "--data-dir", s / "data", "--checkpoint", s / "m.ckpt", "--ids", "nope"})
                  .code == 2);
    }
    SUBCASE("a checkpoint refuses caches built with another configuration") {
        REQUIRE(run({"build", "--corpus", s / "corpus.tsv", "--out-dir", s / "other", "--train-obs", "2002",
                     "--val-obs", "2003", "--test-obs", "2004", "--dim", "8", "--k", "5", "--set",
                     "min_citations=3"})
                    .code == 0);
        auto e = run({"eval", "--data-dir", s / "other", "--checkpoint", s / "m.ckpt"});
        CHECK(e.code == 2);
        CHECK(e.log.find("config hash") != std::string::npos);
    }
    SUBCASE("feature dimension mismatch is a data error") {
        auto w = run({"train", "--data-dir", s / "data", "--checkpoint", s / "w.ckpt", "--dim", "16", "--epochs",
                      "1"});
        CHECK(w.code == 2);
    }
    SUBCASE("diverging training exits with the numeric code") {
        auto w = run({"train", "--data-dir", s / "data", "--checkpoint", s / "w.ckpt", "--dim", "8", "--epochs", "2",
                      "--lr", "1e300"});
        CHECK(w.code == 3);
        CHECK(w.log.find("epoch") != std::string::npos);
    }
    SUBCASE("ablation flags reach the checkpoint") {
        auto w = run(cat({"train", "--data-dir", s / "data", "--checkpoint", s / "ab.ckpt", "--no-cl",
                          "--no-hier"},
                         kTinyTrain));
        REQUIRE(w.code == 0);
        CHECK(w.log.find("no_cl = true") != std::string::npos);
        CHECK(run({"eval", "--data-dir", s / "data", "--checkpoint", s / "ab.ckpt"}).code == 0);
    }
}
