#pragma once

#include "h2cgl/corpus.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace h2cgl {

enum class NodeKind : std::uint8_t { Paper, Author, Venue, Time, Snapshot };
inline constexpr std::size_t kNodeKindCount = 5;

enum class PaperRole : std::uint8_t { Reference, Target, Citation, None };
inline constexpr std::size_t kPaperRoleCount = 3;

// Messages always flow src -> dst.
enum class EdgeKind : std::uint8_t {
    Cites,          // cited paper -> citing paper
    IsCitedBy,      // citing paper -> cited paper
    Writes,         // author -> paper
    IsWrittenBy,    // paper -> author
    Publishes,      // venue -> paper
    IsPublishedBy,  // paper -> venue
    PublishedAt,    // paper -> time
    HasPaperAt,     // time -> paper
    IsIn,           // paper -> snapshot
    Has,            // snapshot -> paper
    SnapLink,       // snapshot <-> snapshot, across subgraphs
};
inline constexpr std::size_t kEdgeKindCount = 11;
// Relations that live inside a single subgraph.
inline constexpr std::size_t kIntraRelationCount = 10;

struct EdgeSignature {
    NodeKind src;
    NodeKind dst;
};

EdgeSignature signature(EdgeKind kind);
std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeKind kind);
std::string_view to_string(PaperRole role);

struct GraphNode {
    NodeKind kind = NodeKind::Paper;
    // PaperIdx, AuthorIdx or VenueIdx; the year for Time and Snapshot nodes.
    std::uint32_t key = 0;
    PaperRole role = PaperRole::None;
    // Papers only: global citations received up to the subgraph year.
    std::int32_t citations = 0;
    // Papers: publication year. Time/Snapshot: their year.
    std::int32_t year = 0;
    // Attribute-mask augmentation zeroes the initial features of masked nodes.
    bool masked = false;
};

struct GraphEdge {
    EdgeKind kind;
    std::uint32_t src;
    std::uint32_t dst;
};

struct HeteroSubgraph {
    int year = 0;
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    std::uint32_t snapshot = 0;
    std::uint32_t target = 0;

    std::optional<std::uint32_t> find_paper(PaperIdx p) const;
    std::size_t count(NodeKind kind) const;
};

// Undirected snapshot link, a < b index subgraphs.
struct SnapEdge {
    std::uint32_t a;
    std::uint32_t b;
    std::int32_t intensity;
};

// One global citation link between the associated papers of two snapshots.
// Kept so that intensities can be recomputed after papers are dropped.
struct AssocLink {
    std::uint32_t a;
    std::uint32_t b;
    PaperIdx x;
    PaperIdx y;
};

struct HierHetGraph {
    PaperIdx target = 0;
    int target_pub_year = 0;
    int observation_year = 0;
    std::vector<HeteroSubgraph> subgraphs;
    std::vector<SnapEdge> snap_edges;
    std::vector<AssocLink> assoc_links;
};

struct GraphConfig {
    int window = 5;
    std::size_t k = 20;
    int delta = 5;

    void validate() const;
};

struct Sample {
    HierHetGraph graph;
    int label_count = 0;
    double label_log = 0.0;
    int label_interval = 0;
    std::vector<PaperIdx> hard_negatives;
};

struct Label {
    int count = 0;
    double log = 0.0;
    int interval = 0;
};

// [0,10) -> 0, [10,100) -> 1, [100,inf) -> 2
int interval_of(int count);

// Ranking used for top-K selection: citations up to `year` desc, publication year desc, id asc.
std::vector<PaperIdx> rank_papers(const CitationNetwork& net, std::vector<PaperIdx> papers, int year);

HeteroSubgraph build_subgraph(const CitationNetwork& net, PaperIdx target, int year, std::size_t k);
HierHetGraph build_hier_graph(const CitationNetwork& net, PaperIdx target, int obs_year, int window,
                              std::size_t k);
// Rebuilds snap_edges from assoc_links, ignoring links that touch a removed paper.
// `removed` must be sorted.
void recompute_snap_edges(HierHetGraph& graph, std::span<const PaperIdx> removed = {});
// Associated papers of each snapshot: Citation-role papers published in that year; the
// earliest snapshot also holds the target, its references and any older citations.
std::vector<std::vector<PaperIdx>> associated_papers(const HierHetGraph& graph);

Label label(const CitationNetwork& net, PaperIdx target, int obs_year, int delta);
std::vector<PaperIdx> mine_hard_negatives(const CitationNetwork& net, PaperIdx target, int obs_year,
                                          int delta);
Sample build_sample(const CitationNetwork& net, PaperIdx target, int obs_year, const GraphConfig& config);

// --- splits --------------------------------------------------------------

struct SplitFilters {
    // Papers need strictly more references / total citations than these.
    int min_references = 5;
    int min_total_citations = 10;
};

struct SplitConfig {
    int train_obs = 0;
    int val_obs = 0;
    int test_obs = 0;
    int delta = 5;
    SplitFilters filters;

    void validate(const CitationNetwork& net) const;
};

struct SplitStats {
    std::array<std::size_t, 3> by_interval{};
    std::size_t fresh = 0;
    std::size_t total() const { return by_interval[0] + by_interval[1] + by_interval[2]; }
};

struct Splits {
    std::vector<PaperIdx> train;
    std::vector<PaperIdx> val;
    std::vector<PaperIdx> test;
    SplitStats train_stats;
    SplitStats val_stats;
    SplitStats test_stats;
    std::vector<std::string> warnings;

    // Table 2 style summary, one row per split.
    void write_table(std::ostream& out) const;
};

Splits split_datasets(const CitationNetwork& net, const SplitConfig& config);

// --- features ------------------------------------------------------------

// Initial node features keyed by (kind, key, year).
struct FeatureKey {
    NodeKind kind;
    std::uint32_t key;
    std::int32_t year;

    std::uint64_t packed() const;
};

// Author and venue features depend on the subgraph year; paper and time features do not.
// Snapshots reuse the time feature of their year.
FeatureKey feature_key(const GraphNode& node, int subgraph_year);

class FeatureStore {
public:
    FeatureStore() = default;
    explicit FeatureStore(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return index_.size(); }
    bool contains(const FeatureKey& key) const { return index_.contains(key.packed()); }
    // Throws DataError when missing.
    std::span<const double> get(const FeatureKey& key) const;
    void put(const FeatureKey& key, std::span<const double> values);
    // Computes and stores every feature the graph needs.
    void add_graph(const HierHetGraph& graph, const TextFeatures& features);

    void write(std::ostream& out) const;
    static FeatureStore read(std::istream& in);

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::uint64_t, std::uint32_t> index_;
    std::vector<std::uint64_t> keys_;
    std::vector<double> table_;
};

// --- sample caches ---------------------------------------------------------

struct NegativeGraph {
    HierHetGraph graph;
    int label_interval = 0;
};

struct Dataset {
    std::string split;
    int observation_year = 0;
    int train_obs = 0;
    GraphConfig graph;
    std::string config_hash;
    std::vector<std::string> paper_ids;
    std::vector<int> paper_years;
    FeatureStore features;
    std::vector<Sample> samples;
    std::map<PaperIdx, NegativeGraph> negative_pool;

    const std::string& id_of(PaperIdx p) const { return paper_ids.at(p); }
    std::optional<std::size_t> find_sample(std::string_view id) const;
};

// Builds samples for `targets` at `obs_year`; with_negatives also materialises the graphs of
// every mined hard-negative candidate.
Dataset build_dataset(const CitationNetwork& net, const TextFeatures& features,
                      const std::vector<PaperIdx>& targets, int obs_year, int train_obs,
                      const GraphConfig& config, bool with_negatives, std::string split,
                      std::string config_hash);

void save_dataset(std::ostream& out, const Dataset& data);
// expected_hash empty skips the check; otherwise a mismatch throws DataError.
Dataset load_dataset(std::istream& in, const std::string& expected_hash = "");

}  // namespace h2cgl
