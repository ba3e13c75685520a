#pragma once

#include "h2cgl/autodiff.hpp"
#include "h2cgl/graph.hpp"
#include "h2cgl/nn.hpp"
#include "h2cgl/params.hpp"

#include <array>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace h2cgl {

struct EncoderConfig {
    std::size_t dim = 32;
    std::size_t layers = 4;
    // GIN self weights (1 + xi) in the structural layers and (1 + eps) in the temporal layer.
    double xi = 0.0;
    double eps = 0.0;
    bool learn_xi = false;
    std::size_t age_groups = 3;
    int age_bin_years = 5;
    int citation_clamp = 1024;
    // Rows of the time-context table per node kind (offsets from the observation year).
    int window = 5;
    // Adds log(1 + citations at the subgraph year) times a learned row to every paper state.
    bool citation_features = true;
    // Ablation switches.
    bool text_features = true;    // false: seeded random node features
    bool hierarchical = true;     // false: snapshot self-attention instead of weighted GIN
    bool citation_aware = true;   // false: plain GIN on is_cited_by, plain GATv2 on is_in

    void validate() const;
    std::vector<std::pair<std::string, std::string>> entries() const;
};

// Sinusoidal encoding of min(count, clamp), width dim.
std::vector<double> citation_encoding(int count, std::size_t dim, int clamp);
// Snapshot type from the target's age at the snapshot year: [0,5) -> 0, [5,10) -> 1, ...
std::uint32_t age_group(int age, const EncoderConfig& config);

using IndexPtr = std::shared_ptr<const ad::Index>;

// Several hierarchical graphs flattened into per-kind node tables and per-relation edge lists.
struct GraphBatch {
    struct EdgeRef {
        std::uint32_t graph;
        std::uint32_t subgraph;
        std::uint32_t src_local;
        std::uint32_t dst_local;
    };

    std::size_t graph_count = 0;
    std::array<std::size_t, kNodeKindCount> node_count{};
    std::array<Tensor, kNodeKindCount> features;
    std::array<IndexPtr, kNodeKindCount> ste_row;
    Tensor paper_citations;  // n_paper x 1, log(1 + citations); zero for masked papers
    std::array<IndexPtr, kIntraRelationCount> src;
    std::array<IndexPtr, kIntraRelationCount> dst;

    // Per is_cited_by edge: encoding of the citing paper's global citations.
    Tensor citer_encoding;
    std::vector<int> citer_citations;
    // Per is_in edge.
    IndexPtr snapshot_group;
    IndexPtr paper_role;

    // Snapshot level. Snapshot i of the batch belongs to graph snapshot_graph[i].
    IndexPtr snapshot_graph;
    std::vector<int> snapshot_year;
    // Normalised snap links, both directions.
    IndexPtr link_src;
    IndexPtr link_dst;
    Tensor link_weight;
    // All ordered snapshot pairs of a graph (self-attention ablation).
    IndexPtr pair_src;
    IndexPtr pair_dst;

    std::vector<EdgeRef> cgin_refs;
    std::vector<EdgeRef> rgat_refs;
};

GraphBatch collate(std::span<const HierHetGraph* const> graphs, const FeatureStore& features,
                   const EncoderConfig& config);

// D^-1/2 A D^-1/2 over a symmetric intensity matrix given as undirected edges (a < b).
// Returns directed (src, dst, weight) triples in both directions; isolated nodes get none.
struct WeightedLink {
    std::uint32_t src;
    std::uint32_t dst;
    double weight;
};
std::vector<WeightedLink> normalize_snap_edges(std::span<const SnapEdge> edges, std::size_t snapshot_count);

struct AttentionRecord {
    std::size_t layer;
    EdgeKind relation;
    GraphBatch::EdgeRef edge;
    double alpha;
};

// Parameters of one C-GIN relation.
struct CginParams {
    Linear src;
    Linear dst;
    std::size_t attn = 0;  // d x 1
    Mlp update;
};

// Parameters of one R-GAT relation. Type tables are absent in the plain GATv2 ablation.
struct RgatParams {
    std::size_t left = 0;   // d x d
    std::size_t right = 0;  // d x d
    std::size_t attn = 0;   // d x 1
    std::size_t snapshot_types = 0;
    std::size_t paper_types = 0;
    bool typed = true;
};

// Self weight (1 + w) of a GIN update; w is either fixed or a learnable 1 x 1 parameter.
struct SelfWeight {
    static constexpr std::size_t kFixed = static_cast<std::size_t>(-1);
    double fixed = 0.0;
    std::size_t param = kFixed;

    // (1 + w) * z
    ad::Var apply(ParamVars& pv, ad::Var z) const;
};

// --- single relation modules (building blocks of one layer) ----------------

// f((1 + xi) z_dst + sum_{src -> dst} z_src) for every destination row.
ad::Var gin_relation(ParamVars& pv, const Mlp& mlp, ad::Var z_src, ad::Var z_dst, const IndexPtr& src,
                     const IndexPtr& dst, const SelfWeight& self);

// Citation-aware attention over citing papers; alpha_out receives the per-edge weights.
ad::Var cgin_relation(ParamVars& pv, const CginParams& p, ad::Var z_paper, const IndexPtr& src, const IndexPtr& dst,
                      const Tensor& citer_encoding, const SelfWeight& self, ad::Var* alpha_out = nullptr);

// Snapshot attention over its papers; type tables are skipped when p.typed is false.
ad::Var rgat_relation(ParamVars& pv, const RgatParams& p, ad::Var z_paper, ad::Var z_snapshot, const IndexPtr& src,
                      const IndexPtr& dst, const IndexPtr& snapshot_group, const IndexPtr& paper_role,
                      ad::Var* alpha_out = nullptr);

// f((1 + eps) z_i + sum_j w_ji z_j) over weighted snapshot links.
ad::Var weighted_gin(ParamVars& pv, const Mlp& mlp, ad::Var z_snapshot, const IndexPtr& src, const IndexPtr& dst,
                     const Tensor& weight, const SelfWeight& self);

class Encoder {
public:
    Encoder(const EncoderConfig& config, ParamSet& params, std::mt19937_64& rng);

    const EncoderConfig& config() const { return config_; }

    // z0 = features + time-context rows, one tensor per node kind.
    std::array<ad::Var, kNodeKindCount> initial_states(ParamVars& pv, const GraphBatch& batch) const;
    // Every intra relation for every destination kind, summed per kind, then relu.
    std::array<ad::Var, kNodeKindCount> structural_layer(ParamVars& pv, const GraphBatch& batch,
                                                         const std::array<ad::Var, kNodeKindCount>& z,
                                                         std::size_t layer,
                                                         std::vector<AttentionRecord>* attention = nullptr) const;
    // Snapshot-level update (relu applied).
    ad::Var temporal_layer(ParamVars& pv, const GraphBatch& batch, ad::Var z_snapshot, std::size_t layer) const;
    // One row per graph.
    ad::Var forward(ParamVars& pv, const GraphBatch& batch, std::vector<AttentionRecord>* attention = nullptr) const;

private:
    struct Layer {
        std::array<Mlp, kIntraRelationCount> gin;  // unused slots for the attention relations
        CginParams cgin;
        RgatParams rgat;
        Mlp temporal;
        std::size_t projection = 0;
        SelfWeight xi;
        SelfWeight eps;
    };

    EncoderConfig config_;
    std::size_t ste_table_ = 0;
    std::size_t citation_row_ = 0;
    std::vector<Layer> layers_;
};

}  // namespace h2cgl
