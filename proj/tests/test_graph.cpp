#include "fixtures.hpp"
#include "graph_invariants.hpp"

#include "h2cgl/errors.hpp"
#include "h2cgl/graph.hpp"
#include "h2cgl/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

using namespace h2cgl;
using namespace h2cgl::testing;

namespace {

std::vector<std::string> ids_with_role(const CitationNetwork& net, const HeteroSubgraph& g, PaperRole role) {
    std::vector<std::string> out;
    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::Paper && n.role == role) out.push_back(net.paper(n.key).id);
    std::sort(out.begin(), out.end());
    return out;
}

// n citer records of `target` in `year`, named prefix0..prefix{n-1}.
void add_citers(std::vector<PaperRecord>& recs, const std::string& target, const std::string& prefix, int n,
                int year) {
    for (int i = 0; i < n; ++i) recs.push_back(paper(prefix + std::to_string(i), year, {target}));
}

CitationNetwork synthetic(int n_years = 14, int per_year = 150) {
    SynthConfig cfg;
    cfg.n_years = n_years;
    cfg.papers_per_year = per_year;
    std::ostringstream out;
    write_corpus(out, generate(cfg), cfg.hash());
    std::istringstream in(out.str());
    ParseReport rep;
    return parse_corpus(in, {}, rep);
}

}  // namespace

TEST_CASE("under-K target keeps every reference and no citation role") {
    auto net = network({paper("r1", 2000), paper("r2", 2000), paper("r3", 2001),
                        paper("T", 2002, {"r1", "r2", "r3"})});
    auto g = build_subgraph(net, net.index_of("T"), 2005, 20);
    CHECK(g.count(NodeKind::Paper) == 4);
    CHECK(ids_with_role(net, g, PaperRole::Reference).size() == 3);
    CHECK(ids_with_role(net, g, PaperRole::Target) == std::vector<std::string>{"T"});
    CHECK(ids_with_role(net, g, PaperRole::Citation).empty());
    CHECK(graph_violation(HierHetGraph{net.index_of("T"), 2002, 2005, {g}, {}, {}}, 20).empty());
}

TEST_CASE("top-K keeps the best ranked citations") {
    // 8 citers of T with varied citation counts and years; K = 3.
    std::vector<PaperRecord> recs{paper("T", 2000)};
    const std::vector<std::tuple<std::string, int, int>> citers{
        {"c0", 2001, 2}, {"c1", 2002, 2}, {"c2", 2001, 0}, {"c3", 2003, 5},
        {"c4", 2002, 1}, {"c5", 2002, 2}, {"c6", 2001, 5}, {"c7", 2003, 0}};
    for (const auto& [id, year, n] : citers) {
        recs.push_back(paper(id, year, {"T"}));
        for (int i = 0; i < n; ++i) recs.push_back(paper(id + "_x" + std::to_string(i), 2004, {id}));
    }
    auto net = network(recs);
    const int year = 2004;
    auto g = build_subgraph(net, net.index_of("T"), year, 3);

    // Brute-force oracle: count citers by scanning every record's reference list.
    std::vector<std::tuple<int, int, std::string>> keyed;
    for (const auto& [id, y, n] : citers) {
        int count = 0;
        for (const auto& r : recs)
            if (r.year <= year && std::count(r.references.begin(), r.references.end(), id)) ++count;
        keyed.emplace_back(-count, -y, id);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::string> expected;
    for (int i = 0; i < 3; ++i) expected.push_back(std::get<2>(keyed[i]));
    std::sort(expected.begin(), expected.end());
    CHECK(ids_with_role(net, g, PaperRole::Citation) == expected);
    CHECK(expected == std::vector<std::string>{"c1", "c3", "c6"});
}

TEST_CASE("citation links between retained papers appear inside the subgraph") {
    auto net = network({paper("R", 2000), paper("T", 2001, {"R"}), paper("C", 2002, {"T", "R"})});
    auto g = build_subgraph(net, net.index_of("T"), 2002, 20);
    const auto r = *g.find_paper(net.index_of("R"));
    const auto c = *g.find_paper(net.index_of("C"));
    bool cites = false, cited_by = false;
    for (const auto& e : g.edges) {
        cites |= e.kind == EdgeKind::Cites && e.src == r && e.dst == c;
        cited_by |= e.kind == EdgeKind::IsCitedBy && e.src == c && e.dst == r;
    }
    CHECK(cites);
    CHECK(cited_by);
}

TEST_CASE("metadata nodes attach to retained papers and the subgraph is rejected before publication") {
    auto net = network({paper("R", 2000, {}, "V1", {"a", "b"}), paper("T", 2001, {"R"}, "V1", {"b"})});
    auto g = build_subgraph(net, net.index_of("T"), 2001, 20);
    CHECK(g.count(NodeKind::Author) == 2);
    CHECK(g.count(NodeKind::Venue) == 1);
    CHECK(g.count(NodeKind::Time) == 2);
    CHECK(g.count(NodeKind::Snapshot) == 1);
    CHECK_THROWS_AS(build_subgraph(net, net.index_of("T"), 2000, 20), DataError);
    CHECK_THROWS_AS(build_hier_graph(net, net.index_of("T"), 2000, 5, 20), DataError);
}

TEST_CASE("a target published at the observation year has one snapshot and no links") {
    auto net = network({paper("R", 2000), paper("T", 2003, {"R"})});
    auto g = build_hier_graph(net, net.index_of("T"), 2003, 5, 20);
    CHECK(g.subgraphs.size() == 1);
    CHECK(g.snap_edges.empty());
}

TEST_CASE("window limits the number of snapshots") {
    auto net = network({paper("T", 2000), paper("Z", 2012)});
    auto g = build_hier_graph(net, net.index_of("T"), 2010, 5, 20);
    CHECK(g.subgraphs.size() == 5);
    CHECK(g.subgraphs.front().year == 2006);
    CHECK(g.subgraphs.back().year == 2010);
}

TEST_CASE("snapshot links follow citations between associated papers") {
    // b (2001) cites T; a (2002) cites T and b; no citations of T in 2003.
    auto net = network({paper("T", 2000), paper("b", 2001, {"T"}), paper("a", 2002, {"T", "b"}), paper("z", 2003)});
    auto g = build_hier_graph(net, net.index_of("T"), 2003, 5, 20);
    REQUIRE(g.subgraphs.size() == 4);
    auto intensity = [&](std::uint32_t x, std::uint32_t y) {
        for (const auto& e : g.snap_edges)
            if (e.a == std::min(x, y) && e.b == std::max(x, y)) return e.intensity;
        return 0;
    };
    CHECK(intensity(1, 2) == 1);  // a cites b
    CHECK(intensity(0, 1) == 1);  // b cites T
    CHECK(intensity(0, 2) == 1);  // a cites T
    // 2003: no new citations, so nothing touches that snapshot.
    for (const auto& e : g.snap_edges) CHECK(e.b != 3);
    CHECK(graph_violation(g, 20).empty());

    // Removing b drops both of its links.
    std::vector<PaperIdx> removed{net.index_of("b")};
    recompute_snap_edges(g, removed);
    CHECK(g.snap_edges.size() == 1);
    CHECK(intensity(0, 2) == 1);
}

TEST_CASE("labels and intervals") {
    CHECK(interval_of(0) == 0);
    CHECK(interval_of(9) == 0);
    CHECK(interval_of(10) == 1);
    CHECK(interval_of(99) == 1);
    CHECK(interval_of(100) == 2);
    for (int c = 0; c < 300; ++c) CHECK(interval_of(c) == (c < 10 ? 0 : c < 100 ? 1 : 2));

    std::vector<PaperRecord> recs{paper("A", 2000), paper("B", 2000), paper("C", 2000), paper("end", 2010)};
    add_citers(recs, "A", "a", 9, 2003);
    add_citers(recs, "B", "b", 10, 2004);
    add_citers(recs, "C", "c", 100, 2005);
    add_citers(recs, "C", "early", 3, 2001);
    auto net = network(recs);
    auto la = label(net, net.index_of("A"), 2002, 5);
    CHECK(la.count == 9);
    CHECK(la.interval == 0);
    CHECK(la.log == std::log(10.0));
    CHECK(label(net, net.index_of("B"), 2002, 5).interval == 1);
    auto lc = label(net, net.index_of("C"), 2002, 5);
    CHECK(lc.count == 100);
    CHECK(lc.interval == 2);
    auto none = label(net, net.index_of("end"), 2003, 5);
    CHECK(none.count == 0);
    CHECK(none.log == 0.0);
    CHECK_THROWS_AS(label(net, net.index_of("A"), 2006, 5), DataError);
}

TEST_CASE("hard negatives share a reference or a citer and differ in interval") {
    // T and S both cite R; S gains 10 citations after the observation year.
    std::vector<PaperRecord> recs{paper("R", 2000), paper("T", 2001, {"R"}), paper("S", 2001, {"R"}),
                                  paper("U", 2001), paper("end", 2008)};
    add_citers(recs, "S", "s", 10, 2004);
    auto net = network(recs);
    const auto T = net.index_of("T");
    const auto S = net.index_of("S");
    auto negs = mine_hard_negatives(net, T, 2002, 5);
    CHECK(negs == std::vector<PaperIdx>{S});

    // Brute force: scan all pairs for shared references.
    std::vector<PaperIdx> oracle;
    for (PaperIdx p = 0; p < net.size(); ++p) {
        if (p == T || net.paper(p).year > 2002) continue;
        bool share = false;
        for (PaperIdx a : net.cites(p))
            for (PaperIdx b : net.cites(T)) share |= a == b;
        if (share && label(net, p, 2002, 5).interval != label(net, T, 2002, 5).interval) oracle.push_back(p);
    }
    CHECK(negs == oracle);

    // Same interval: give T ten citations too.
    add_citers(recs, "T", "t", 10, 2004);
    auto net2 = network(recs);
    auto negs2 = mine_hard_negatives(net2, net2.index_of("T"), 2002, 5);
    CHECK(std::find(negs2.begin(), negs2.end(), net2.index_of("S")) == negs2.end());

    // Unique references and no citers.
    CHECK(mine_hard_negatives(net, net.index_of("U"), 2002, 5).empty());
}

TEST_CASE("co-cited papers are candidates") {
    std::vector<PaperRecord> recs{paper("T", 2000), paper("Q", 2000), paper("c", 2001, {"T", "Q"}),
                                  paper("end", 2008)};
    add_citers(recs, "Q", "q", 12, 2003);
    auto net = network(recs);
    CHECK(mine_hard_negatives(net, net.index_of("T"), 2002, 5) == std::vector<PaperIdx>{net.index_of("Q")});
}

TEST_CASE("split filters and subset chain") {
    std::vector<PaperRecord> recs;
    for (int i = 0; i < 8; ++i) recs.push_back(paper("r" + std::to_string(i), 1999));
    auto refs = [](int n) {
        std::vector<std::string> out;
        for (int i = 0; i < n; ++i) out.push_back("r" + std::to_string(i));
        return out;
    };
    recs.push_back(paper("five_refs", 2000, refs(5)));
    recs.push_back(paper("old", 2000, refs(6)));
    recs.push_back(paper("ten_cites", 2000, refs(6)));
    recs.push_back(paper("mid", 2003, refs(6)));
    recs.push_back(paper("fresh", 2005, refs(6)));
    recs.push_back(paper("end", 2012));
    add_citers(recs, "five_refs", "f", 20, 2006);
    add_citers(recs, "old", "o", 11, 2006);
    add_citers(recs, "ten_cites", "x", 10, 2006);
    add_citers(recs, "mid", "m", 11, 2006);
    add_citers(recs, "fresh", "n", 11, 2006);
    auto net = network(recs);
    SplitConfig cfg{2001, 2003, 2005, 5, {}};
    auto s = split_datasets(net, cfg);
    auto names = [&](const std::vector<PaperIdx>& v) {
        std::vector<std::string> out;
        for (auto p : v) out.push_back(net.paper(p).id);
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(names(s.train) == std::vector<std::string>{"old"});
    CHECK(names(s.val) == std::vector<std::string>{"mid", "old"});
    CHECK(names(s.test) == std::vector<std::string>{"fresh", "mid", "old"});
    CHECK(s.test_stats.total() == s.test.size());
    CHECK(s.test_stats.fresh == 2);
    std::ostringstream table;
    s.write_table(table);
    CHECK(table.str().find("test,3,") != std::string::npos);

    SplitConfig late{2001, 2003, 2008, 5, {}};
    CHECK_THROWS_AS(split_datasets(net, late), DataError);
    SplitConfig unordered{2003, 2001, 2005, 5, {}};
    CHECK_THROWS(split_datasets(net, unordered));
}

TEST_CASE("synthetic corpus: every sample satisfies the graph invariants") {
    auto net = synthetic();
    GraphConfig gc;
    SplitConfig sc{2006, 2007, 2008, 5, {}};
    auto splits = split_datasets(net, sc);
    REQUIRE(splits.test.size() > 50);
    for (std::size_t i = 0; i < splits.train.size(); ++i) {
        CHECK(std::binary_search(splits.val.begin(), splits.val.end(), splits.train[i]));
    }
    for (PaperIdx p : splits.val) CHECK(std::binary_search(splits.test.begin(), splits.test.end(), p));
    std::size_t isolated_checked = 0;
    for (PaperIdx p : splits.test) {
        auto s = build_sample(net, p, sc.test_obs, gc);
        CHECK(s.label_interval == interval_of(s.label_count));
        CHECK(s.label_log == std::log(s.label_count + 1.0));
        CHECK(graph_violation(s.graph, gc.k) == "");
        CHECK(growth_violation(s.graph, gc.k) == "");
        for (std::size_t t = 1; t < s.graph.subgraphs.size(); ++t) {
            const int y = s.graph.subgraphs[t].year;
            if (net.citations_between(p, y - 1, y) != 0) continue;
            ++isolated_checked;
            for (const auto& e : s.graph.snap_edges) CHECK((e.a != t && e.b != t));
        }
    }
    CHECK(isolated_checked > 0);
}

TEST_CASE("sample cache round-trips and rejects a hash mismatch") {
    auto net = synthetic(12, 60);
    TextFeatures feats(net, HashEmbedConfig{16, 3});
    SplitConfig sc{2004, 2005, 2006, 5, {}};
    auto splits = split_datasets(net, sc);
    REQUIRE(!splits.train.empty());
    auto d = build_dataset(net, feats, splits.train, sc.train_obs, sc.train_obs, GraphConfig{}, true, "train",
                           "hash123");
    CHECK(!d.negative_pool.empty());
    for (const auto& s : d.samples)
        for (const auto& sub : s.graph.subgraphs)
            for (const auto& n : sub.nodes) CHECK(d.features.contains(feature_key(n, sub.year)));

    std::stringstream buf;
    save_dataset(buf, d);
    std::stringstream in(buf.str());
    auto back = load_dataset(in, "hash123");
    CHECK(back.samples.size() == d.samples.size());
    CHECK(back.negative_pool.size() == d.negative_pool.size());
    CHECK(back.features.size() == d.features.size());
    std::stringstream again;
    save_dataset(again, back);
    CHECK(again.str() == buf.str());

    std::stringstream in2(buf.str());
    CHECK_THROWS_AS(load_dataset(in2, "other"), DataError);
    std::stringstream junk("garbage");
    CHECK_THROWS_AS(load_dataset(junk), DataError);

    const auto& n0 = d.samples[0].graph.subgraphs[0].nodes[0];
    auto v = d.features.get(feature_key(n0, d.samples[0].graph.subgraphs[0].year));
    auto expect = feats.paper(n0.key);
    CHECK(std::equal(v.begin(), v.end(), expect.begin()));
}
