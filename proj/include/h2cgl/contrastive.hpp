#pragma once

#include "h2cgl/autodiff.hpp"
#include "h2cgl/graph.hpp"
#include "h2cgl/nn.hpp"

#include <random>
#include <span>
#include <vector>

namespace h2cgl {

struct AugmentConfig {
    double drop_rate = 0.1;  // p^d
    double tau = 0.5;
    std::size_t hard_negatives = 2;

    void validate() const;
};

// p_i = drop_rate * n * softmax(-counts)_i, clamped into [0, 1]. Highly cited papers survive.
std::vector<double> drop_probabilities(std::span<const double> counts, double drop_rate);

// Every non-target paper of the graph with its latest visible citation count, sorted by PaperIdx.
struct DropCandidate {
    PaperIdx paper;
    int citations;
};
std::vector<DropCandidate> drop_candidates(const HierHetGraph& graph);

// Removes the papers from every subgraph, then any metadata node left without edges, then
// recomputes the snap links. The target and snapshot nodes are never removed. `removed` must be sorted.
HierHetGraph remove_papers(const HierHetGraph& graph, std::span<const PaperIdx> removed);

// One view: each candidate paper is dropped with its own probability, once for all snapshots.
HierHetGraph augment(const HierHetGraph& graph, double drop_rate, std::mt19937_64& rng);

// Generic view for the ablation: each citation/metadata edge pair dropped with probability `rate`,
// each non-snapshot node's features masked with probability `rate`.
HierHetGraph generic_augment(const HierHetGraph& graph, double rate, std::mt19937_64& rng);

// A negative for one anchor: a mined candidate from the pool, or another member of the batch.
struct NegativeChoice {
    bool from_pool = true;
    PaperIdx paper = 0;            // when from_pool
    std::size_t batch_index = 0;   // otherwise
};

// Draws `count` distinct candidates uniformly; when there are too few, fills from other batch members
// with a different interval label (then any other member). May return fewer when the batch is exhausted.
std::vector<NegativeChoice> sample_hard_negatives(std::span<const PaperIdx> candidates, std::size_t count,
                                                  std::span<const int> batch_intervals, std::size_t anchor,
                                                  std::mt19937_64& rng);

// z -> l2_normalize(W2 relu(W1 z + b1) + b2)
struct ProjectionHead {
    Mlp mlp;

    static ProjectionHead create(ParamSet& params, std::size_t dim, std::mt19937_64& rng);
    ad::Var apply(ParamVars& pv, ad::Var o) const;
};

// Mean over anchors of -log(exp(s_ii / tau) / (exp(s_ii / tau) + sum_j exp(s_ij / tau))), with
// s = dot product of unit rows. Negative row m belongs to anchor owner[m].
ad::Var cl_loss(ad::Tape& tape, ad::Var view1, ad::Var view2, ad::Var negatives, const ad::Index& owner,
                double tau);

}  // namespace h2cgl
