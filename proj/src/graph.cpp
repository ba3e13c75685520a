#include "h2cgl/graph.hpp"

#include "h2cgl/binary_io.hpp"
#include "h2cgl/errors.hpp"
#include "h2cgl/version.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

namespace h2cgl {

EdgeSignature signature(EdgeKind kind) {
    using N = NodeKind;
    switch (kind) {
        case EdgeKind::Cites: return {N::Paper, N::Paper};
        case EdgeKind::IsCitedBy: return {N::Paper, N::Paper};
        case EdgeKind::Writes: return {N::Author, N::Paper};
        case EdgeKind::IsWrittenBy: return {N::Paper, N::Author};
        case EdgeKind::Publishes: return {N::Venue, N::Paper};
        case EdgeKind::IsPublishedBy: return {N::Paper, N::Venue};
        case EdgeKind::PublishedAt: return {N::Paper, N::Time};
        case EdgeKind::HasPaperAt: return {N::Time, N::Paper};
        case EdgeKind::IsIn: return {N::Paper, N::Snapshot};
        case EdgeKind::Has: return {N::Snapshot, N::Paper};
        case EdgeKind::SnapLink: return {N::Snapshot, N::Snapshot};
    }
    throw std::invalid_argument("unknown edge kind");
}

std::string_view to_string(NodeKind kind) {
    static constexpr std::string_view names[] = {"paper", "author", "venue", "time", "snapshot"};
    return names[static_cast<std::size_t>(kind)];
}

std::string_view to_string(EdgeKind kind) {
    static constexpr std::string_view names[] = {
        "cites",         "is_cited_by",  "writes",      "is_written_by", "publishes", "is_published_by",
        "published_at", "has_paper_at", "is_in",       "has",           "snap_link"};
    return names[static_cast<std::size_t>(kind)];
}

std::string_view to_string(PaperRole role) {
    static constexpr std::string_view names[] = {"reference", "target", "citation", "none"};
    return names[static_cast<std::size_t>(role)];
}

std::optional<std::uint32_t> HeteroSubgraph::find_paper(PaperIdx p) const {
    for (std::uint32_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].kind == NodeKind::Paper && nodes[i].key == p) return i;
    return std::nullopt;
}

std::size_t HeteroSubgraph::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [kind](const GraphNode& n) { return n.kind == kind; }));
}

void GraphConfig::validate() const {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (delta < 1) throw std::invalid_argument("delta must be >= 1");
}

int interval_of(int count) {
    if (count < 10) return 0;
    if (count < 100) return 1;
    return 2;
}

std::vector<PaperIdx> rank_papers(const CitationNetwork& net, std::vector<PaperIdx> papers, int year) {
    std::vector<std::pair<int, PaperIdx>> keyed;
    keyed.reserve(papers.size());
    for (PaperIdx p : papers) keyed.emplace_back(net.citations_up_to(p, year), p);
    std::sort(keyed.begin(), keyed.end(), [&net](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        const int ya = net.paper(a.second).year, yb = net.paper(b.second).year;
        if (ya != yb) return ya > yb;
        return net.paper(a.second).id < net.paper(b.second).id;
    });
    for (std::size_t i = 0; i < keyed.size(); ++i) papers[i] = keyed[i].second;
    return papers;
}

HeteroSubgraph build_subgraph(const CitationNetwork& net, PaperIdx target, int year, std::size_t k) {
    if (target >= net.size()) throw DataError("unknown target paper index");
    const auto& rec = net.paper(target);
    if (year < rec.year) {
        throw DataError("subgraph year " + std::to_string(year) + " precedes publication of " + rec.id);
    }

    auto refs_all = net.cites(target);
    std::vector<PaperIdx> refs = rank_papers(net, {refs_all.begin(), refs_all.end()}, year);
    if (refs.size() > k) refs.resize(k);

    std::vector<PaperIdx> citers_all;
    for (const auto& c : net.cited_by(target)) {
        if (c.year > year) break;
        // A same-year mutual citation already placed the paper on the reference side.
        if (std::find(refs_all.begin(), refs_all.end(), c.paper) == refs_all.end()) citers_all.push_back(c.paper);
    }
    std::vector<PaperIdx> citers = rank_papers(net, std::move(citers_all), year);
    if (citers.size() > k) citers.resize(k);

    HeteroSubgraph g;
    g.year = year;
    std::unordered_map<PaperIdx, std::uint32_t> local;
    auto add_paper = [&](PaperIdx p, PaperRole role) {
        local.emplace(p, static_cast<std::uint32_t>(g.nodes.size()));
        GraphNode n;
        n.kind = NodeKind::Paper;
        n.key = p;
        n.role = role;
        n.citations = net.citations_up_to(p, year);
        n.year = net.paper(p).year;
        g.nodes.push_back(n);
    };
    add_paper(target, PaperRole::Target);
    g.target = 0;
    for (PaperIdx p : refs) add_paper(p, PaperRole::Reference);
    for (PaperIdx p : citers) add_paper(p, PaperRole::Citation);
    const std::size_t n_papers = g.nodes.size();

    for (std::uint32_t i = 0; i < n_papers; ++i) {
        for (PaperIdx q : net.cites(g.nodes[i].key)) {
            auto it = local.find(q);
            if (it == local.end()) continue;
            g.edges.push_back({EdgeKind::Cites, it->second, i});
            g.edges.push_back({EdgeKind::IsCitedBy, i, it->second});
        }
    }

    std::map<std::pair<NodeKind, std::uint32_t>, std::uint32_t> meta;
    auto meta_node = [&](NodeKind kind, std::uint32_t key, int node_year) {
        auto [it, inserted] = meta.try_emplace({kind, key}, static_cast<std::uint32_t>(g.nodes.size()));
        if (inserted) {
            GraphNode n;
            n.kind = kind;
            n.key = key;
            n.year = node_year;
            g.nodes.push_back(n);
        }
        return it->second;
    };
    for (std::uint32_t i = 0; i < n_papers; ++i) {
        const PaperIdx p = g.nodes[i].key;
        for (AuthorIdx a : net.authors_of(p)) {
            const auto m = meta_node(NodeKind::Author, a, year);
            g.edges.push_back({EdgeKind::Writes, m, i});
            g.edges.push_back({EdgeKind::IsWrittenBy, i, m});
        }
        if (const VenueIdx v = net.venue_of(p); v != kNoVenue) {
            const auto m = meta_node(NodeKind::Venue, v, year);
            g.edges.push_back({EdgeKind::Publishes, m, i});
            g.edges.push_back({EdgeKind::IsPublishedBy, i, m});
        }
        const int py = net.paper(p).year;
        const auto m = meta_node(NodeKind::Time, static_cast<std::uint32_t>(py), py);
        g.edges.push_back({EdgeKind::PublishedAt, i, m});
        g.edges.push_back({EdgeKind::HasPaperAt, m, i});
    }

    g.snapshot = static_cast<std::uint32_t>(g.nodes.size());
    GraphNode snap;
    snap.kind = NodeKind::Snapshot;
    snap.key = static_cast<std::uint32_t>(year);
    snap.year = year;
    g.nodes.push_back(snap);
    for (std::uint32_t i = 0; i < n_papers; ++i) {
        g.edges.push_back({EdgeKind::IsIn, i, g.snapshot});
        g.edges.push_back({EdgeKind::Has, g.snapshot, i});
    }
    return g;
}

std::vector<std::vector<PaperIdx>> associated_papers(const HierHetGraph& graph) {
    std::vector<std::vector<PaperIdx>> out(graph.subgraphs.size());
    for (std::size_t s = 0; s < graph.subgraphs.size(); ++s) {
        const auto& sub = graph.subgraphs[s];
        for (const auto& n : sub.nodes) {
            if (n.kind != NodeKind::Paper) continue;
            const bool first = s == 0;
            if (n.role == PaperRole::Citation ? (first ? n.year <= sub.year : n.year == sub.year) : first) {
                out[s].push_back(n.key);
            }
        }
    }
    return out;
}

void recompute_snap_edges(HierHetGraph& graph, std::span<const PaperIdx> removed) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::int32_t> counts;
    for (const auto& l : graph.assoc_links) {
        if (std::binary_search(removed.begin(), removed.end(), l.x) ||
            std::binary_search(removed.begin(), removed.end(), l.y)) {
            continue;
        }
        ++counts[{l.a, l.b}];
    }
    graph.snap_edges.clear();
    for (const auto& [ab, n] : counts) graph.snap_edges.push_back({ab.first, ab.second, n});
}

HierHetGraph build_hier_graph(const CitationNetwork& net, PaperIdx target, int obs_year, int window,
                              std::size_t k) {
    if (target >= net.size()) throw DataError("unknown target paper index");
    const int pub = net.paper(target).year;
    if (obs_year < pub) {
        throw DataError("observation year " + std::to_string(obs_year) + " precedes publication of " +
                        net.paper(target).id);
    }
    HierHetGraph g;
    g.target = target;
    g.target_pub_year = pub;
    g.observation_year = obs_year;
    for (int y = std::max(pub, obs_year - window + 1); y <= obs_year; ++y) {
        g.subgraphs.push_back(build_subgraph(net, target, y, k));
    }

    const auto assoc = associated_papers(g);
    for (std::uint32_t a = 0; a < assoc.size(); ++a) {
        for (std::uint32_t b = a + 1; b < assoc.size(); ++b) {
            for (PaperIdx x : assoc[a]) {
                for (PaperIdx y : assoc[b]) {
                    if (net.has_citation(x, y)) g.assoc_links.push_back({a, b, x, y});
                    if (net.has_citation(y, x)) g.assoc_links.push_back({a, b, y, x});
                }
            }
        }
    }
    recompute_snap_edges(g);
    return g;
}

Label label(const CitationNetwork& net, PaperIdx target, int obs_year, int delta) {
    if (obs_year + delta > net.max_year()) {
        throw DataError("label horizon " + std::to_string(obs_year + delta) + " exceeds corpus range (last year " +
                        std::to_string(net.max_year()) + ")");
    }
    Label l;
    l.count = net.citations_between(target, obs_year, obs_year + delta);
    l.log = std::log(static_cast<double>(l.count) + 1.0);
    l.interval = interval_of(l.count);
    return l;
}

std::vector<PaperIdx> mine_hard_negatives(const CitationNetwork& net, PaperIdx target, int obs_year, int delta) {
    std::set<PaperIdx> cands;
    for (PaperIdx r : net.cites(target)) {
        for (const auto& c : net.cited_by(r)) {
            if (c.year > obs_year) break;
            if (c.paper != target) cands.insert(c.paper);
        }
    }
    for (const auto& c : net.cited_by(target)) {
        if (c.year > obs_year) break;
        for (PaperIdx q : net.cites(c.paper))
            if (q != target) cands.insert(q);
    }
    const int own = label(net, target, obs_year, delta).interval;
    std::vector<PaperIdx> out;
    for (PaperIdx p : cands) {
        if (net.paper(p).year > obs_year) continue;
        if (label(net, p, obs_year, delta).interval != own) out.push_back(p);
    }
    return out;
}

Sample build_sample(const CitationNetwork& net, PaperIdx target, int obs_year, const GraphConfig& config) {
    config.validate();
    Sample s;
    const Label l = label(net, target, obs_year, config.delta);
    s.label_count = l.count;
    s.label_log = l.log;
    s.label_interval = l.interval;
    s.graph = build_hier_graph(net, target, obs_year, config.window, config.k);
    s.hard_negatives = mine_hard_negatives(net, target, obs_year, config.delta);
    return s;
}

// --- splits ------------------------------------------------------------------

void SplitConfig::validate(const CitationNetwork& net) const {
    if (!(train_obs < val_obs && val_obs < test_obs)) {
        throw std::invalid_argument("observation years must satisfy train < val < test");
    }
    if (delta < 1) throw std::invalid_argument("delta must be >= 1");
    if (train_obs < net.min_year() || test_obs > net.max_year()) {
        throw DataError("observation years outside corpus range [" + std::to_string(net.min_year()) + ", " +
                        std::to_string(net.max_year()) + "]");
    }
    if (test_obs + delta > net.max_year()) {
        throw DataError("label horizon " + std::to_string(test_obs + delta) + " exceeds corpus range (last year " +
                        std::to_string(net.max_year()) + ")");
    }
}

void Splits::write_table(std::ostream& out) const {
    out << "split,papers,lt10,10to100,ge100,fresh\n";
    auto row = [&out](const char* name, const std::vector<PaperIdx>& ids, const SplitStats& st) {
        out << name << ',' << ids.size() << ',' << st.by_interval[0] << ',' << st.by_interval[1] << ','
            << st.by_interval[2] << ',' << st.fresh << '\n';
    };
    row("train", train, train_stats);
    row("val", val, val_stats);
    row("test", test, test_stats);
}

Splits split_datasets(const CitationNetwork& net, const SplitConfig& config) {
    config.validate(net);
    Splits s;
    for (PaperIdx p = 0; p < net.size(); ++p) {
        const int year = net.paper(p).year;
        if (year > config.test_obs) continue;
        if (static_cast<int>(net.cites(p).size()) <= config.filters.min_references) continue;
        if (net.citations_up_to(p, config.test_obs + config.delta) <= config.filters.min_total_citations) continue;
        s.test.push_back(p);
        if (year <= config.val_obs) s.val.push_back(p);
        if (year <= config.train_obs) s.train.push_back(p);
    }
    auto stats = [&](const std::vector<PaperIdx>& ids, int obs) {
        SplitStats st;
        for (PaperIdx p : ids) {
            ++st.by_interval[static_cast<std::size_t>(label(net, p, obs, config.delta).interval)];
            if (net.paper(p).year > config.train_obs) ++st.fresh;
        }
        return st;
    };
    s.train_stats = stats(s.train, config.train_obs);
    s.val_stats = stats(s.val, config.val_obs);
    s.test_stats = stats(s.test, config.test_obs);
    if (s.train.empty()) s.warnings.push_back("train split is empty");
    if (s.val.empty()) s.warnings.push_back("val split is empty");
    if (s.test.empty()) s.warnings.push_back("test split is empty");
    return s;
}

// --- features ------------------------------------------------------------------

std::uint64_t FeatureKey::packed() const {
    return (static_cast<std::uint64_t>(kind) << 56) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(year) & 0xffffffu) << 32) | key;
}

FeatureKey feature_key(const GraphNode& node, int subgraph_year) {
    switch (node.kind) {
        case NodeKind::Paper: return {NodeKind::Paper, node.key, 0};
        case NodeKind::Author: return {NodeKind::Author, node.key, subgraph_year};
        case NodeKind::Venue: return {NodeKind::Venue, node.key, subgraph_year};
        case NodeKind::Time:
        case NodeKind::Snapshot: return {NodeKind::Time, static_cast<std::uint32_t>(node.year), 0};
    }
    throw std::invalid_argument("unknown node kind");
}

std::span<const double> FeatureStore::get(const FeatureKey& key) const {
    auto it = index_.find(key.packed());
    if (it == index_.end()) {
        throw DataError("missing feature vector for " + std::string(to_string(key.kind)) + " " +
                        std::to_string(key.key) + " @" + std::to_string(key.year));
    }
    return {table_.data() + static_cast<std::size_t>(it->second) * dim_, dim_};
}

void FeatureStore::put(const FeatureKey& key, std::span<const double> values) {
    if (values.size() != dim_) throw ShapeError("feature width mismatch");
    const auto packed = key.packed();
    auto [it, inserted] = index_.try_emplace(packed, static_cast<std::uint32_t>(keys_.size()));
    if (inserted) {
        keys_.push_back(packed);
        table_.insert(table_.end(), values.begin(), values.end());
    } else {
        std::copy(values.begin(), values.end(), table_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    }
}

void FeatureStore::add_graph(const HierHetGraph& graph, const TextFeatures& features) {
    if (dim_ == 0) dim_ = features.config().dim;
    for (const auto& sub : graph.subgraphs) {
        for (const auto& n : sub.nodes) {
            const FeatureKey k = feature_key(n, sub.year);
            if (contains(k)) continue;
            switch (k.kind) {
                case NodeKind::Paper: put(k, features.paper(k.key)); break;
                case NodeKind::Author: put(k, features.author(k.key, k.year)); break;
                case NodeKind::Venue: put(k, features.venue(k.key, k.year)); break;
                default: put(k, features.time(static_cast<int>(k.key))); break;
            }
        }
    }
}

void FeatureStore::write(std::ostream& out) const {
    io::BinaryWriter w(out);
    w.pod<std::uint64_t>(dim_);
    w.pod_vector<std::uint64_t>(keys_);
    w.pod_vector<double>(table_);
}

FeatureStore FeatureStore::read(std::istream& in) {
    io::BinaryReader r(in);
    FeatureStore fs(r.pod<std::uint64_t>());
    fs.keys_ = r.pod_vector<std::uint64_t>();
    fs.table_ = r.pod_vector<double>();
    if (fs.table_.size() != fs.keys_.size() * fs.dim_) throw DataError("corrupt feature table");
    for (std::uint32_t i = 0; i < fs.keys_.size(); ++i) fs.index_.emplace(fs.keys_[i], i);
    return fs;
}

// --- caches --------------------------------------------------------------------

namespace {

constexpr char kDatasetMagic[8] = {'H', '2', 'C', 'G', 'L', 'S', 'M', 'P'};
constexpr std::uint32_t kDatasetVersion = 1;

void write_graph(io::BinaryWriter& w, const HierHetGraph& g) {
    w.pod<std::uint32_t>(g.target);
    w.pod<std::int32_t>(g.target_pub_year);
    w.pod<std::int32_t>(g.observation_year);
    w.pod<std::uint64_t>(g.subgraphs.size());
    for (const auto& s : g.subgraphs) {
        w.pod<std::int32_t>(s.year);
        w.pod<std::uint32_t>(s.snapshot);
        w.pod<std::uint32_t>(s.target);
        w.pod<std::uint64_t>(s.nodes.size());
        for (const auto& n : s.nodes) {
            w.pod<std::uint8_t>(static_cast<std::uint8_t>(n.kind));
            w.pod<std::uint8_t>(static_cast<std::uint8_t>(n.role));
            w.pod<std::uint8_t>(n.masked ? 1 : 0);
            w.pod<std::uint32_t>(n.key);
            w.pod<std::int32_t>(n.citations);
            w.pod<std::int32_t>(n.year);
        }
        w.pod<std::uint64_t>(s.edges.size());
        for (const auto& e : s.edges) {
            w.pod<std::uint8_t>(static_cast<std::uint8_t>(e.kind));
            w.pod<std::uint32_t>(e.src);
            w.pod<std::uint32_t>(e.dst);
        }
    }
    w.pod<std::uint64_t>(g.snap_edges.size());
    for (const auto& e : g.snap_edges) {
        w.pod<std::uint32_t>(e.a);
        w.pod<std::uint32_t>(e.b);
        w.pod<std::int32_t>(e.intensity);
    }
    w.pod<std::uint64_t>(g.assoc_links.size());
    for (const auto& l : g.assoc_links) {
        w.pod<std::uint32_t>(l.a);
        w.pod<std::uint32_t>(l.b);
        w.pod<std::uint32_t>(l.x);
        w.pod<std::uint32_t>(l.y);
    }
}

template <typename E>
E read_enum(io::BinaryReader& r, std::size_t limit) {
    const auto v = r.pod<std::uint8_t>();
    if (v >= limit) throw DataError("corrupt cache: enum value out of range");
    return static_cast<E>(v);
}

HierHetGraph read_graph(io::BinaryReader& r) {
    constexpr std::uint64_t kMaxCount = 1u << 26;
    auto count = [&r, kMaxCount] {
        const auto n = r.pod<std::uint64_t>();
        if (n > kMaxCount) throw DataError("corrupt cache: implausible element count");
        return static_cast<std::size_t>(n);
    };
    HierHetGraph g;
    g.target = r.pod<std::uint32_t>();
    g.target_pub_year = r.pod<std::int32_t>();
    g.observation_year = r.pod<std::int32_t>();
    g.subgraphs.resize(count());
    for (auto& s : g.subgraphs) {
        s.year = r.pod<std::int32_t>();
        s.snapshot = r.pod<std::uint32_t>();
        s.target = r.pod<std::uint32_t>();
        s.nodes.resize(count());
        for (auto& n : s.nodes) {
            n.kind = read_enum<NodeKind>(r, kNodeKindCount);
            n.role = read_enum<PaperRole>(r, kPaperRoleCount + 1);
            n.masked = r.pod<std::uint8_t>() != 0;
            n.key = r.pod<std::uint32_t>();
            n.citations = r.pod<std::int32_t>();
            n.year = r.pod<std::int32_t>();
        }
        s.edges.resize(count());
        for (auto& e : s.edges) {
            e.kind = read_enum<EdgeKind>(r, kEdgeKindCount);
            e.src = r.pod<std::uint32_t>();
            e.dst = r.pod<std::uint32_t>();
            if (e.src >= s.nodes.size() || e.dst >= s.nodes.size()) throw DataError("corrupt cache: edge endpoint");
        }
    }
    g.snap_edges.resize(count());
    for (auto& e : g.snap_edges) {
        e.a = r.pod<std::uint32_t>();
        e.b = r.pod<std::uint32_t>();
        e.intensity = r.pod<std::int32_t>();
    }
    g.assoc_links.resize(count());
    for (auto& l : g.assoc_links) {
        l.a = r.pod<std::uint32_t>();
        l.b = r.pod<std::uint32_t>();
        l.x = r.pod<std::uint32_t>();
        l.y = r.pod<std::uint32_t>();
    }
    return g;
}

}  // namespace

std::optional<std::size_t> Dataset::find_sample(std::string_view id) const {
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (paper_ids.at(samples[i].graph.target) == id) return i;
    return std::nullopt;
}

Dataset build_dataset(const CitationNetwork& net, const TextFeatures& features, const std::vector<PaperIdx>& targets,
                      int obs_year, int train_obs, const GraphConfig& config, bool with_negatives, std::string split,
                      std::string config_hash) {
    config.validate();
    Dataset d;
    d.split = std::move(split);
    d.observation_year = obs_year;
    d.train_obs = train_obs;
    d.graph = config;
    d.config_hash = std::move(config_hash);
    d.features = FeatureStore(features.config().dim);
    for (PaperIdx p = 0; p < net.size(); ++p) {
        d.paper_ids.push_back(net.paper(p).id);
        d.paper_years.push_back(net.paper(p).year);
    }
    for (PaperIdx t : targets) {
        d.samples.push_back(build_sample(net, t, obs_year, config));
        d.features.add_graph(d.samples.back().graph, features);
    }
    if (with_negatives) {
        std::set<PaperIdx> pool;
        for (const auto& s : d.samples) pool.insert(s.hard_negatives.begin(), s.hard_negatives.end());
        for (PaperIdx p : pool) {
            NegativeGraph ng;
            ng.graph = build_hier_graph(net, p, obs_year, config.window, config.k);
            ng.label_interval = label(net, p, obs_year, config.delta).interval;
            d.features.add_graph(ng.graph, features);
            d.negative_pool.emplace(p, std::move(ng));
        }
    }
    return d;
}

void save_dataset(std::ostream& out, const Dataset& d) {
    io::BinaryWriter w(out);
    out.write(kDatasetMagic, sizeof(kDatasetMagic));
    w.pod(kDatasetVersion);
    w.string(std::string(kToolVersion));
    w.string(d.config_hash);
    w.pod<std::uint64_t>(d.samples.size());
    w.string(d.split);
    w.pod<std::int32_t>(d.observation_year);
    w.pod<std::int32_t>(d.train_obs);
    w.pod<std::int32_t>(d.graph.window);
    w.pod<std::uint64_t>(d.graph.k);
    w.pod<std::int32_t>(d.graph.delta);
    w.pod<std::uint64_t>(d.paper_ids.size());
    for (const auto& id : d.paper_ids) w.string(id);
    w.pod_vector<int>(d.paper_years);
    d.features.write(out);
    for (const auto& s : d.samples) {
        write_graph(w, s.graph);
        w.pod<std::int32_t>(s.label_count);
        w.pod<double>(s.label_log);
        w.pod<std::int32_t>(s.label_interval);
        w.pod_vector<PaperIdx>(s.hard_negatives);
    }
    w.pod<std::uint64_t>(d.negative_pool.size());
    for (const auto& [p, ng] : d.negative_pool) {
        w.pod<std::uint32_t>(p);
        w.pod<std::int32_t>(ng.label_interval);
        write_graph(w, ng.graph);
    }
    if (!w.good()) throw DataError("failed to write sample cache");
}

Dataset load_dataset(std::istream& in, const std::string& expected_hash) {
    char magic[sizeof(kDatasetMagic)];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kDatasetMagic))) {
        throw DataError("not a sample cache (bad magic)");
    }
    io::BinaryReader r(in);
    const auto version = r.pod<std::uint32_t>();
    if (version != kDatasetVersion) throw DataError("unsupported sample cache version " + std::to_string(version));
    Dataset d;
    const std::string tool = r.string();
    if (tool != kToolVersion) {
        throw DataError("sample cache written by tool version " + tool + ", this is " + std::string(kToolVersion));
    }
    d.config_hash = r.string();
    if (!expected_hash.empty() && d.config_hash != expected_hash) {
        throw DataError("sample cache config hash " + d.config_hash + " does not match expected " + expected_hash);
    }
    const auto n_samples = r.pod<std::uint64_t>();
    d.split = r.string();
    d.observation_year = r.pod<std::int32_t>();
    d.train_obs = r.pod<std::int32_t>();
    d.graph.window = r.pod<std::int32_t>();
    d.graph.k = r.pod<std::uint64_t>();
    d.graph.delta = r.pod<std::int32_t>();
    const auto n_ids = r.pod<std::uint64_t>();
    if (n_ids > (1u << 28)) throw DataError("corrupt cache: implausible paper count");
    d.paper_ids.reserve(n_ids);
    for (std::uint64_t i = 0; i < n_ids; ++i) d.paper_ids.push_back(r.string());
    d.paper_years = r.pod_vector<int>();
    d.features = FeatureStore::read(in);
    d.samples.resize(n_samples);
    for (auto& s : d.samples) {
        s.graph = read_graph(r);
        s.label_count = r.pod<std::int32_t>();
        s.label_log = r.pod<double>();
        s.label_interval = r.pod<std::int32_t>();
        s.hard_negatives = r.pod_vector<PaperIdx>();
    }
    const auto n_neg = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < n_neg; ++i) {
        const auto p = r.pod<std::uint32_t>();
        NegativeGraph ng;
        ng.label_interval = r.pod<std::int32_t>();
        ng.graph = read_graph(r);
        d.negative_pool.emplace(p, std::move(ng));
    }
    return d;
}

}  // namespace h2cgl
