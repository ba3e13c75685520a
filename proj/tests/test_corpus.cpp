#include "fixtures.hpp"

#include "h2cgl/corpus.hpp"
#include "h2cgl/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace h2cgl;
using namespace h2cgl::testing;

namespace {

void check_transpose(const CitationNetwork& net) {
    std::size_t forward = 0, backward = 0;
    for (PaperIdx p = 0; p < net.size(); ++p) {
        for (PaperIdx q : net.cites(p)) {
            ++forward;
            bool found = false;
            for (const auto& c : net.cited_by(q)) found |= c.paper == p && c.year == net.paper(p).year;
            CHECK(found);
        }
        for (const auto& c : net.cited_by(p)) {
            ++backward;
            CHECK(net.has_citation(c.paper, p));
        }
        int total = 0;
        for (const auto& [y, n] : net.yearly_citations(p)) total += n;
        CHECK(total == static_cast<int>(net.cited_by(p).size()));
    }
    CHECK(forward == backward);
    CHECK(forward == net.edge_count());
}

}  // namespace

TEST_CASE("a three-paper chain yields two edges and a consistent transpose") {
    auto net = network({paper("C", 2000), paper("B", 2001, {"C"}), paper("A", 2002, {"B"})});
    CHECK(net.size() == 3);
    CHECK(net.edge_count() == 2);
    check_transpose(net);
}

TEST_CASE("self references are removed and the paper is kept") {
    ParseReport rep;
    auto net = network({paper("B", 2000), paper("A", 2001, {"A", "B"})}, &rep);
    CHECK(net.size() == 2);
    CHECK(net.edge_count() == 1);
    CHECK(rep.dropped_edges["self_reference"] == 1);
}

TEST_CASE("citing a later paper drops the edge and counts the violation") {
    ParseReport rep;
    auto net = network({paper("Old", 2000, {"New"}), paper("New", 2005)}, &rep);
    CHECK(net.edge_count() == 0);
    CHECK(rep.dropped_edges["forward_in_time"] == 1);
    CHECK(rep.total_dropped_records() == 0);
}

TEST_CASE("dangling references are pruned and counted") {
    ParseReport rep;
    auto net = network({paper("A", 2001, {"ghost", "B"}), paper("B", 2000)}, &rep);
    CHECK(net.edge_count() == 1);
    CHECK(rep.dropped_edges["dangling_reference"] == 1);
}

TEST_CASE("malformed lines report their line number") {
    std::istringstream in("# header\n" + corpus_line(paper("A", 2000)) + "\n{not json\n");
    ParseReport rep;
    try {
        parse_corpus(in, {}, rep);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::istringstream no_year(R"({"id":"x","title":"t"})" "\n");
    CHECK_THROWS_AS(parse_corpus(no_year, {}, rep), ParseError);
}

TEST_CASE("duplicate ids are fatal") {
    std::istringstream in(corpus_text({paper("A", 2000), paper("A", 2001)}));
    ParseReport rep;
    CHECK_THROWS_AS(parse_corpus(in, {}, rep), DataError);
}

TEST_CASE("unknown keys are ignored and validity filters drop records") {
    std::istringstream in(
        R"({"id":"a","year":2000,"venue":"v","title":"t","abstract":"one two","extra":[1,2]})" "\n"
        R"({"id":"b","year":2000,"title":"t","abstract":"x"})" "\n");
    ParseReport rep;
    auto net = parse_corpus(in, {}, rep);
    CHECK(net.size() == 1);
    CHECK(rep.dropped_records["missing_venue"] == 1);

    std::istringstream again(R"({"id":"a","year":2000,"venue":"v","title":"t","abstract":"one two"})" "\n");
    ParseOptions strict;
    strict.strict = true;
    ParseReport rep2;
    CHECK(parse_corpus(again, strict, rep2).size() == 0);
    CHECK(rep2.dropped_records["short_abstract"] == 1);
}

TEST_CASE("parse report is written as key = value lines") {
    ParseReport rep;
    network({paper("A", 2001, {"A"})}, &rep);
    std::ostringstream out;
    rep.write(out);
    CHECK(out.str().find("self_reference = 1") != std::string::npos);
}

TEST_CASE("citations_up_to counts citers by year") {
    auto net = network({paper("B", 2005), paper("A", 2010, {"B"}), paper("C", 2012, {"B"}), paper("D", 2013)});
    const auto b = net.index_of("B");
    CHECK(net.citations_up_to(net.index_of("D"), 2020) == 0);
    CHECK(net.citations_up_to(b, 2011) == 1);
    CHECK(net.citations_up_to(b, 2012) == 2);
    CHECK(net.citations_between(b, 2010, 2013) == 1);
    CHECK_THROWS_AS(net.index_of("nope"), DataError);
}

TEST_CASE("citations_up_to is monotone in year on a random network") {
    std::mt19937_64 rng(9);
    std::vector<PaperRecord> recs;
    for (int i = 0; i < 60; ++i) {
        std::vector<std::string> refs;
        for (int j = 0; j < i; ++j)
            if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.1) refs.push_back("p" + std::to_string(j));
        recs.push_back(paper("p" + std::to_string(i), 2000 + i / 6, refs));
    }
    auto net = network(recs);
    check_transpose(net);
    for (PaperIdx p = 0; p < net.size(); ++p)
        for (int y = 1999; y < 2012; ++y) CHECK(net.citations_up_to(p, y + 1) >= net.citations_up_to(p, y));
}

TEST_CASE("text_embed is deterministic, unit norm, and zero for empty text") {
    HashEmbedConfig cfg;
    auto a = text_embed("Graph networks", "for citation prediction", cfg);
    auto b = text_embed("Graph networks", "for citation prediction", cfg);
    CHECK(a == b);
    double n2 = 0;
    for (double v : a) n2 += v * v;
    CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-12);
    auto z = text_embed("", "", cfg);
    CHECK(z.size() == cfg.dim);
    for (double v : z) CHECK(v == 0.0);
    HashEmbedConfig other = cfg;
    other.seed = 77;
    CHECK(text_embed("Graph networks", "", other) != text_embed("Graph networks", "", cfg));
    CHECK(tokenize("Hello, WORLD-42!") == std::vector<std::string>{"hello", "world", "42"});
    HashEmbedConfig tiny;
    tiny.dim = 4;
    CHECK_THROWS(tiny.validate());
}

TEST_CASE("metadata embeddings average strictly past papers") {
    auto net = network({paper("a", 2000, {}, "V1", {"alice"}, "alpha beta"),
                        paper("b", 2001, {}, "V2", {"alice"}, "gamma delta"),
                        paper("c", 2003, {}, "V2", {"bob"}, "epsilon"),
                        paper("d", 2003, {}, "V3", {"carol"}, "zeta")});
    TextFeatures feats(net, HashEmbedConfig{});
    const auto ea = text_embed("alpha beta", "abstract words for a", feats.config());
    const auto eb = text_embed("gamma delta", "abstract words for b", feats.config());
    const auto ec = text_embed("epsilon", "abstract words for c", feats.config());
    const auto ed = text_embed("zeta", "abstract words for d", feats.config());

    auto v = metadata_embedding(net, {MetaKind::Venue, "V1"}, 2001, feats);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == doctest::Approx(ea[i]).epsilon(1e-15));

    auto au = metadata_embedding(net, {MetaKind::Author, "alice"}, 2005, feats);
    for (std::size_t i = 0; i < au.size(); ++i) CHECK(au[i] == doctest::Approx((ea[i] + eb[i]) / 2).epsilon(1e-14));

    auto fut = metadata_embedding(net, {MetaKind::Author, "bob"}, 2003, feats);
    for (double x : fut) CHECK(x == 0.0);

    auto t = metadata_embedding(net, {MetaKind::Time, ""}, 2003, feats);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == doctest::Approx((ec[i] + ed[i]) / 2).epsilon(1e-14));

    CHECK_THROWS_AS(metadata_embedding(net, {MetaKind::Author, "nobody"}, 2003, feats), DataError);
}

TEST_CASE("re-parsing the same corpus yields an identical network") {
    std::vector<PaperRecord> recs{paper("x", 2000), paper("y", 2001, {"x"}), paper("z", 2002, {"x", "y"})};
    auto a = network(recs);
    auto b = network(recs);
    CHECK(a.size() == b.size());
    for (PaperIdx p = 0; p < a.size(); ++p) {
        CHECK(a.paper(p).id == b.paper(p).id);
        CHECK(std::vector<PaperIdx>(a.cites(p).begin(), a.cites(p).end()) ==
              std::vector<PaperIdx>(b.cites(p).begin(), b.cites(p).end()));
    }
}
