#include "h2cgl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

namespace h2cgl {

void AugmentConfig::validate() const {
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw std::invalid_argument("drop rate must be in [0, 1)");
    if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
    if (hard_negatives < 1) throw std::invalid_argument("need at least one hard negative");
}

std::vector<double> drop_probabilities(std::span<const double> counts, double drop_rate) {
    if (counts.empty()) return {};
    const double lo = *std::min_element(counts.begin(), counts.end());
    std::vector<double> w(counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) total += w[i] = std::exp(lo - counts[i]);
    const double scale = drop_rate * static_cast<double>(counts.size()) / total;
    for (double& v : w) v = std::clamp(v * scale, 0.0, 1.0);
    return w;
}

std::vector<DropCandidate> drop_candidates(const HierHetGraph& graph) {
    std::map<PaperIdx, int> latest;
    for (const auto& sub : graph.subgraphs)
        for (const auto& n : sub.nodes) {
            if (n.kind != NodeKind::Paper || n.key == graph.target) continue;
            auto [it, fresh] = latest.emplace(n.key, n.citations);
            if (!fresh) it->second = std::max(it->second, n.citations);
        }
    std::vector<DropCandidate> out;
    out.reserve(latest.size());
    for (const auto& [p, c] : latest) out.push_back({p, c});
    return out;
}

HierHetGraph remove_papers(const HierHetGraph& graph, std::span<const PaperIdx> removed) {
    auto gone = [&](PaperIdx p) { return p != graph.target && std::binary_search(removed.begin(), removed.end(), p); };
    HierHetGraph out;
    out.target = graph.target;
    out.target_pub_year = graph.target_pub_year;
    out.observation_year = graph.observation_year;
    for (const auto& sub : graph.subgraphs) {
        std::vector<bool> keep(sub.nodes.size(), true);
        for (std::size_t i = 0; i < sub.nodes.size(); ++i)
            if (sub.nodes[i].kind == NodeKind::Paper && gone(sub.nodes[i].key)) keep[i] = false;
        std::vector<GraphEdge> edges;
        std::vector<std::size_t> degree(sub.nodes.size(), 0);
        for (const auto& e : sub.edges) {
            if (!keep[e.src] || !keep[e.dst]) continue;
            edges.push_back(e);
            ++degree[e.src];
            ++degree[e.dst];
        }
        for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
            const NodeKind k = sub.nodes[i].kind;
            if ((k == NodeKind::Author || k == NodeKind::Venue || k == NodeKind::Time) && degree[i] == 0) keep[i] = false;
        }
        HeteroSubgraph s;
        s.year = sub.year;
        std::vector<std::uint32_t> remap(sub.nodes.size(), 0);
        for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
            if (!keep[i]) continue;
            remap[i] = static_cast<std::uint32_t>(s.nodes.size());
            s.nodes.push_back(sub.nodes[i]);
        }
        for (auto e : edges) {
            e.src = remap[e.src];
            e.dst = remap[e.dst];
            s.edges.push_back(e);
        }
        s.snapshot = remap[sub.snapshot];
        s.target = remap[sub.target];
        out.subgraphs.push_back(std::move(s));
    }
    for (const auto& l : graph.assoc_links)
        if (!gone(l.x) && !gone(l.y)) out.assoc_links.push_back(l);
    recompute_snap_edges(out);
    return out;
}

HierHetGraph augment(const HierHetGraph& graph, double drop_rate, std::mt19937_64& rng) {
    const auto cands = drop_candidates(graph);
    std::vector<double> counts;
    counts.reserve(cands.size());
    for (const auto& c : cands) counts.push_back(c.citations);
    const auto probs = drop_probabilities(counts, drop_rate);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<PaperIdx> removed;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (unit(rng) < probs[i]) removed.push_back(cands[i].paper);
    return remove_papers(graph, removed);
}

namespace {

// Reverse relation of each paired edge kind; IsIn/Has are never dropped.
std::optional<EdgeKind> forward_of(EdgeKind k) {
    switch (k) {
        case EdgeKind::Cites:
        case EdgeKind::Writes:
        case EdgeKind::Publishes:
        case EdgeKind::PublishedAt:
            return k;
        case EdgeKind::IsCitedBy: return EdgeKind::Cites;
        case EdgeKind::IsWrittenBy: return EdgeKind::Writes;
        case EdgeKind::IsPublishedBy: return EdgeKind::Publishes;
        case EdgeKind::HasPaperAt: return EdgeKind::PublishedAt;
        default: return std::nullopt;
    }
}

}  // namespace

HierHetGraph generic_augment(const HierHetGraph& graph, double rate, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    HierHetGraph out = graph;
    for (auto& sub : out.subgraphs) {
        std::set<std::tuple<EdgeKind, std::uint32_t, std::uint32_t>> dropped;
        for (const auto& e : sub.edges)
            if (forward_of(e.kind) == e.kind && unit(rng) < rate) dropped.insert({e.kind, e.src, e.dst});
        std::erase_if(sub.edges, [&](const GraphEdge& e) {
            const auto f = forward_of(e.kind);
            if (!f) return false;
            return *f == e.kind ? dropped.contains({e.kind, e.src, e.dst}) : dropped.contains({*f, e.dst, e.src});
        });
        for (auto& n : sub.nodes)
            if (n.kind != NodeKind::Snapshot && unit(rng) < rate) n.masked = true;
    }
    return out;
}

std::vector<NegativeChoice> sample_hard_negatives(std::span<const PaperIdx> candidates, std::size_t count,
                                                  std::span<const int> batch_intervals, std::size_t anchor,
                                                  std::mt19937_64& rng) {
    std::vector<NegativeChoice> out;
    std::vector<PaperIdx> pool(candidates.begin(), candidates.end());
    const std::size_t take = std::min(count, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        out.push_back({true, pool[i], 0});
    }
    if (out.size() == count) return out;

    std::vector<std::size_t> other_label, same_label;
    for (std::size_t j = 0; j < batch_intervals.size(); ++j) {
        if (j == anchor) continue;
        (batch_intervals[j] != batch_intervals[anchor] ? other_label : same_label).push_back(j);
    }
    for (auto* group : {&other_label, &same_label}) {
        std::shuffle(group->begin(), group->end(), rng);
        for (std::size_t j : *group) {
            if (out.size() == count) return out;
            out.push_back({false, 0, j});
        }
    }
    return out;
}

ProjectionHead ProjectionHead::create(ParamSet& params, std::size_t dim, std::mt19937_64& rng) {
    return {Mlp::create(params, "cl.proj", dim, dim, dim, rng)};
}

ad::Var ProjectionHead::apply(ParamVars& pv, ad::Var o) const {
    return pv.tape().l2_normalize_rows(mlp.apply(pv, o));
}

ad::Var cl_loss(ad::Tape& t, ad::Var view1, ad::Var view2, ad::Var negatives, const ad::Index& owner, double tau) {
    const std::size_t n = t.value(view1).rows();
    auto scores = t.scale(t.sum_cols(t.mul(view1, view2)), 1.0 / tau);
    ad::Index segment(n);
    std::iota(segment.begin(), segment.end(), 0u);
    if (!owner.empty()) {
        auto neg = t.scale(t.sum_cols(t.mul(t.gather_rows(view1, owner), negatives)), 1.0 / tau);
        const ad::Var parts[] = {scores, neg};
        scores = t.concat_rows(parts);
        segment.insert(segment.end(), owner.begin(), owner.end());
    }
    auto alpha = t.segment_softmax(scores, std::move(segment), n);
    ad::Index positives(n);
    std::iota(positives.begin(), positives.end(), 0u);
    return t.scale(t.mean(t.log(t.gather_rows(alpha, std::move(positives)))), -1.0);
}

}  // namespace h2cgl
