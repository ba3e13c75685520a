#include "h2cgl/encoder.hpp"

#include "h2cgl/errors.hpp"
#include "h2cgl/version.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace h2cgl {

void EncoderConfig::validate() const {
    if (dim < 8) throw std::invalid_argument("encoder dim must be >= 8");
    if (layers < 1) throw std::invalid_argument("encoder needs at least one layer");
    if (age_groups < 1 || age_bin_years < 1) throw std::invalid_argument("bad snapshot age grouping");
    if (citation_clamp < 1) throw std::invalid_argument("citation clamp must be positive");
    if (window < 1) throw std::invalid_argument("window must be >= 1");
}

std::vector<std::pair<std::string, std::string>> EncoderConfig::entries() const {
    return {
        {"dim", to_text(dim)},
        {"layers", to_text(layers)},
        {"xi", to_text(xi)},
        {"eps", to_text(eps)},
        {"learn_xi", learn_xi ? "true" : "false"},
        {"age_groups", to_text(age_groups)},
        {"age_bin_years", to_text(age_bin_years)},
        {"citation_clamp", to_text(citation_clamp)},
        {"window", to_text(window)},
        {"citation_features", citation_features ? "true" : "false"},
        {"text_features", text_features ? "true" : "false"},
        {"hierarchical", hierarchical ? "true" : "false"},
        {"citation_aware", citation_aware ? "true" : "false"},
    };
}

std::vector<double> citation_encoding(int count, std::size_t dim, int clamp) {
    const double pos = static_cast<double>(std::clamp(count, 0, clamp));
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(dim));
        v[i] = i % 2 == 0 ? std::sin(pos * rate) : std::cos(pos * rate);
    }
    return v;
}

std::uint32_t age_group(int age, const EncoderConfig& config) {
    const int g = std::max(age, 0) / config.age_bin_years;
    return static_cast<std::uint32_t>(std::min<int>(g, static_cast<int>(config.age_groups) - 1));
}

std::vector<WeightedLink> normalize_snap_edges(std::span<const SnapEdge> edges, std::size_t snapshot_count) {
    std::vector<double> degree(snapshot_count, 0.0);
    for (const auto& e : edges) {
        if (e.a >= snapshot_count || e.b >= snapshot_count || e.a == e.b) {
            throw ShapeError("snap edge endpoints out of range or self loop");
        }
        degree[e.a] += e.intensity;
        degree[e.b] += e.intensity;
    }
    std::vector<WeightedLink> out;
    for (const auto& e : edges) {
        if (e.intensity <= 0) continue;
        const double w = e.intensity / std::sqrt(degree[e.a] * degree[e.b]);
        out.push_back({e.a, e.b, w});
        out.push_back({e.b, e.a, w});
    }
    return out;
}

GraphBatch collate(std::span<const HierHetGraph* const> graphs, const FeatureStore& features,
                   const EncoderConfig& config) {
    config.validate();
    if (features.dim() != config.dim) {
        throw DataError("feature width " + std::to_string(features.dim()) + " does not match encoder dim " +
                        std::to_string(config.dim));
    }
    const std::size_t d = config.dim;
    GraphBatch b;
    b.graph_count = graphs.size();

    std::array<std::vector<double>, kNodeKindCount> feats;
    std::array<ad::Index, kNodeKindCount> ste;
    std::array<ad::Index, kIntraRelationCount> src, dst;
    ad::Index groups, roles, snap_graph, link_src, link_dst, pair_src, pair_dst;
    std::vector<double> link_w, citer_enc, paper_cites;
    HashEmbedConfig random_cfg{d, 0x7e57ULL};

    std::uint32_t snapshot_base = 0;
    for (std::uint32_t gi = 0; gi < graphs.size(); ++gi) {
        const HierHetGraph& g = *graphs[gi];
        for (std::uint32_t si = 0; si < g.subgraphs.size(); ++si) {
            const auto& sub = g.subgraphs[si];
            std::vector<std::uint32_t> global(sub.nodes.size());
            const std::uint32_t offset =
                static_cast<std::uint32_t>(std::clamp(g.observation_year - sub.year, 0, config.window - 1));
            for (std::uint32_t i = 0; i < sub.nodes.size(); ++i) {
                const auto& n = sub.nodes[i];
                const auto k = static_cast<std::size_t>(n.kind);
                global[i] = static_cast<std::uint32_t>(b.node_count[k]++);
                const FeatureKey key = feature_key(n, sub.year);
                if (n.masked) {
                    feats[k].insert(feats[k].end(), d, 0.0);
                } else if (!config.text_features) {
                    auto v = random_embed(key.packed(), random_cfg);
                    feats[k].insert(feats[k].end(), v.begin(), v.end());
                } else {
                    auto v = features.get(key);
                    feats[k].insert(feats[k].end(), v.begin(), v.end());
                }
                ste[k].push_back(static_cast<std::uint32_t>(k * static_cast<std::size_t>(config.window)) + offset);
                if (n.kind == NodeKind::Paper) paper_cites.push_back(n.masked ? 0.0 : std::log1p(std::max(n.citations, 0)));
            }
            if (global[sub.snapshot] != snapshot_base + si) throw ShapeError("snapshot numbering out of step");
            snap_graph.push_back(gi);
            b.snapshot_year.push_back(sub.year);
            const std::uint32_t group = age_group(sub.year - g.target_pub_year, config);
            for (const auto& e : sub.edges) {
                const auto r = static_cast<std::size_t>(e.kind);
                if (r >= kIntraRelationCount) throw ShapeError("snap link inside a subgraph");
                src[r].push_back(global[e.src]);
                dst[r].push_back(global[e.dst]);
                if (e.kind == EdgeKind::IsCitedBy) {
                    const int c = sub.nodes[e.src].citations;
                    b.citer_citations.push_back(c);
                    auto enc = citation_encoding(c, d, config.citation_clamp);
                    citer_enc.insert(citer_enc.end(), enc.begin(), enc.end());
                    b.cgin_refs.push_back({gi, si, e.src, e.dst});
                } else if (e.kind == EdgeKind::IsIn) {
                    groups.push_back(group);
                    const PaperRole role = sub.nodes[e.src].role;
                    roles.push_back(role == PaperRole::None ? 0u : static_cast<std::uint32_t>(role));
                    b.rgat_refs.push_back({gi, si, e.src, e.dst});
                }
            }
        }
        const auto t = static_cast<std::uint32_t>(g.subgraphs.size());
        for (const auto& l : normalize_snap_edges(g.snap_edges, t)) {
            link_src.push_back(snapshot_base + l.src);
            link_dst.push_back(snapshot_base + l.dst);
            link_w.push_back(l.weight);
        }
        for (std::uint32_t a = 0; a < t; ++a)
            for (std::uint32_t c = 0; c < t; ++c)
                if (a != c) {
                    pair_src.push_back(snapshot_base + a);
                    pair_dst.push_back(snapshot_base + c);
                }
        snapshot_base += t;
    }

    for (std::size_t k = 0; k < kNodeKindCount; ++k) {
        b.features[k] = Tensor(b.node_count[k], d, std::move(feats[k]));
        b.ste_row[k] = std::make_shared<const ad::Index>(std::move(ste[k]));
    }
    for (std::size_t r = 0; r < kIntraRelationCount; ++r) {
        b.src[r] = std::make_shared<const ad::Index>(std::move(src[r]));
        b.dst[r] = std::make_shared<const ad::Index>(std::move(dst[r]));
    }
    const std::size_t n_papers = paper_cites.size();
    b.paper_citations = Tensor(n_papers, 1, std::move(paper_cites));
    b.citer_encoding = Tensor(b.citer_citations.size(), d, std::move(citer_enc));
    b.snapshot_group = std::make_shared<const ad::Index>(std::move(groups));
    b.paper_role = std::make_shared<const ad::Index>(std::move(roles));
    b.snapshot_graph = std::make_shared<const ad::Index>(std::move(snap_graph));
    const std::size_t n_links = link_w.size();
    b.link_weight = Tensor(n_links, 1, std::move(link_w));
    b.link_src = std::make_shared<const ad::Index>(std::move(link_src));
    b.link_dst = std::make_shared<const ad::Index>(std::move(link_dst));
    b.pair_src = std::make_shared<const ad::Index>(std::move(pair_src));
    b.pair_dst = std::make_shared<const ad::Index>(std::move(pair_dst));
    return b;
}

// --- relation modules ----------------------------------------------------------

ad::Var SelfWeight::apply(ParamVars& pv, ad::Var z) const {
    ad::Tape& t = pv.tape();
    if (param == kFixed) return fixed == 0.0 ? z : t.scale(z, 1.0 + fixed);
    const std::size_t n = t.value(z).rows();
    auto w = t.gather_rows(t.add_scalar(pv(param), 1.0), ad::Index(n, 0));
    return t.mul_rows(z, w);
}

ad::Var gin_relation(ParamVars& pv, const Mlp& mlp, ad::Var z_src, ad::Var z_dst, const IndexPtr& src,
                     const IndexPtr& dst, const SelfWeight& self) {
    ad::Tape& t = pv.tape();
    const std::size_t n_dst = t.value(z_dst).rows();
    auto agg = t.segment_sum(t.gather_rows(z_src, src), dst, n_dst);
    return mlp.apply(pv, t.add(self.apply(pv, z_dst), agg));
}

ad::Var cgin_relation(ParamVars& pv, const CginParams& p, ad::Var z_paper, const IndexPtr& src, const IndexPtr& dst,
                      const Tensor& citer_encoding, const SelfWeight& self, ad::Var* alpha_out) {
    ad::Tape& t = pv.tape();
    const std::size_t n = t.value(z_paper).rows();
    auto hs = t.gather_rows(p.src.apply(pv, z_paper), src);
    auto hd = t.gather_rows(p.dst.apply(pv, z_paper), dst);
    auto e = t.add(t.add(hs, hd), t.constant(citer_encoding));
    auto scores = t.matmul(t.leaky_relu(e, 0.2), pv(p.attn));
    auto alpha = t.segment_softmax(scores, dst, n);
    if (alpha_out) *alpha_out = alpha;
    auto agg = t.segment_sum(t.mul_rows(t.gather_rows(z_paper, src), alpha), dst, n);
    return p.update.apply(pv, t.add(self.apply(pv, z_paper), agg));
}

ad::Var rgat_relation(ParamVars& pv, const RgatParams& p, ad::Var z_paper, ad::Var z_snapshot, const IndexPtr& src,
                      const IndexPtr& dst, const IndexPtr& snapshot_group, const IndexPtr& paper_role,
                      ad::Var* alpha_out) {
    ad::Tape& t = pv.tape();
    const std::size_t n = t.value(z_snapshot).rows();
    auto right = t.matmul(z_paper, pv(p.right));
    auto left = t.matmul(z_snapshot, pv(p.left));
    auto right_e = t.gather_rows(right, src);
    auto e = t.add(t.gather_rows(left, dst), right_e);
    if (p.typed) {
        e = t.add(e, t.gather_rows(pv(p.snapshot_types), snapshot_group));
        e = t.add(e, t.gather_rows(pv(p.paper_types), paper_role));
    }
    auto scores = t.matmul(t.leaky_relu(e, 0.2), pv(p.attn));
    auto alpha = t.segment_softmax(scores, dst, n);
    if (alpha_out) *alpha_out = alpha;
    return t.segment_sum(t.mul_rows(right_e, alpha), dst, n);
}

ad::Var weighted_gin(ParamVars& pv, const Mlp& mlp, ad::Var z_snapshot, const IndexPtr& src, const IndexPtr& dst,
                     const Tensor& weight, const SelfWeight& self) {
    ad::Tape& t = pv.tape();
    const std::size_t n = t.value(z_snapshot).rows();
    auto msg = t.mul_rows(t.gather_rows(z_snapshot, src), t.constant(weight));
    auto agg = t.segment_sum(msg, dst, n);
    return mlp.apply(pv, t.add(self.apply(pv, z_snapshot), agg));
}

namespace {

// Scaled dot-product attention among the snapshots of each graph (hierarchy ablation).
ad::Var snapshot_self_attention(ParamVars& pv, const Mlp& mlp, ad::Var z, const IndexPtr& src, const IndexPtr& dst,
                                const SelfWeight& self) {
    ad::Tape& t = pv.tape();
    const Tensor& zv = t.value(z);
    auto zs = t.gather_rows(z, src);
    auto scores = t.scale(t.sum_cols(t.mul(zs, t.gather_rows(z, dst))), 1.0 / std::sqrt(static_cast<double>(zv.cols())));
    auto alpha = t.segment_softmax(scores, dst, zv.rows());
    auto agg = t.segment_sum(t.mul_rows(zs, alpha), dst, zv.rows());
    return mlp.apply(pv, t.add(self.apply(pv, z), agg));
}

void record_attention(const ad::Tape& t, ad::Var alpha, std::size_t layer, EdgeKind kind,
                      const std::vector<GraphBatch::EdgeRef>& refs, std::vector<AttentionRecord>& out) {
    const Tensor& a = t.value(alpha);
    for (std::size_t i = 0; i < refs.size(); ++i) out.push_back({layer, kind, refs[i], a(i, 0)});
}

}  // namespace

// --- encoder -------------------------------------------------------------------------

Encoder::Encoder(const EncoderConfig& config, ParamSet& params, std::mt19937_64& rng) : config_(config) {
    config_.validate();
    const std::size_t d = config_.dim;
    ste_table_ = params.add("enc.ste", init::normal(kNodeKindCount * static_cast<std::size_t>(config_.window), d,
                                                    0.02, rng));
    if (config_.citation_features) citation_row_ = params.add("enc.citation_row", init::xavier_uniform(1, d, rng));
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const std::string pre = "enc.l" + std::to_string(l) + ".";
        Layer layer;
        for (std::size_t r = 0; r < kIntraRelationCount; ++r) {
            const auto kind = static_cast<EdgeKind>(r);
            const std::string rel = pre + std::string(to_string(kind));
            if (kind == EdgeKind::IsIn) {
                layer.rgat.left = params.add(rel + ".left", init::xavier_uniform(d, d, rng));
                layer.rgat.right = params.add(rel + ".right", init::xavier_uniform(d, d, rng));
                layer.rgat.attn = params.add(rel + ".attn", init::xavier_uniform(d, 1, rng));
                layer.rgat.typed = config_.citation_aware;
                if (config_.citation_aware) {
                    layer.rgat.snapshot_types =
                        params.add(rel + ".snapshot_type", init::normal(config_.age_groups, d, 0.02, rng));
                    layer.rgat.paper_types = params.add(rel + ".paper_type", init::normal(kPaperRoleCount, d, 0.02, rng));
                }
            } else if (kind == EdgeKind::IsCitedBy && config_.citation_aware) {
                layer.cgin.src = Linear::create(params, rel + ".src", d, d, rng);
                layer.cgin.dst = Linear::create(params, rel + ".dst", d, d, rng);
                layer.cgin.attn = params.add(rel + ".attn", init::xavier_uniform(d, 1, rng));
                layer.cgin.update = Mlp::create(params, rel + ".mlp", d, d, d, rng);
            } else {
                layer.gin[r] = Mlp::create(params, rel + ".mlp", d, d, d, rng);
            }
        }
        layer.temporal = Mlp::create(params, pre + "temporal.mlp", d, d, d, rng);
        layer.projection = params.add(pre + "proj", init::xavier_uniform(d, d, rng));
        layer.xi.fixed = config_.xi;
        layer.eps.fixed = config_.eps;
        if (config_.learn_xi) {
            layer.xi.param = params.add(pre + "xi", Tensor::scalar(config_.xi));
            layer.eps.param = params.add(pre + "eps", Tensor::scalar(config_.eps));
        }
        layers_.push_back(layer);
    }
}

std::array<ad::Var, kNodeKindCount> Encoder::initial_states(ParamVars& pv, const GraphBatch& batch) const {
    ad::Tape& t = pv.tape();
    std::array<ad::Var, kNodeKindCount> z;
    for (std::size_t k = 0; k < kNodeKindCount; ++k) {
        z[k] = t.add(t.constant(batch.features[k]), t.gather_rows(pv(ste_table_), batch.ste_row[k]));
    }
    if (config_.citation_features) {
        const auto p = static_cast<std::size_t>(NodeKind::Paper);
        z[p] = t.add(z[p], t.matmul(t.constant(batch.paper_citations), pv(citation_row_)));
    }
    return z;
}

std::array<ad::Var, kNodeKindCount> Encoder::structural_layer(ParamVars& pv, const GraphBatch& batch,
                                                             const std::array<ad::Var, kNodeKindCount>& z,
                                                             std::size_t l,
                                                             std::vector<AttentionRecord>* attention) const {
    ad::Tape& t = pv.tape();
    const Layer& layer = layers_.at(l);
    std::array<ad::Var, kNodeKindCount> acc;
    for (std::size_t r = 0; r < kIntraRelationCount; ++r) {
        const auto kind = static_cast<EdgeKind>(r);
        const auto sig = signature(kind);
        const auto s = static_cast<std::size_t>(sig.src);
        const auto d = static_cast<std::size_t>(sig.dst);
        ad::Var out;
        if (kind == EdgeKind::IsIn) {
            ad::Var alpha;
            out = rgat_relation(pv, layer.rgat, z[s], z[d], batch.src[r], batch.dst[r], batch.snapshot_group,
                                batch.paper_role, &alpha);
            if (attention) record_attention(t, alpha, l, kind, batch.rgat_refs, *attention);
        } else if (kind == EdgeKind::IsCitedBy && config_.citation_aware) {
            ad::Var alpha;
            out = cgin_relation(pv, layer.cgin, z[s], batch.src[r], batch.dst[r], batch.citer_encoding, layer.xi,
                                &alpha);
            if (attention) record_attention(t, alpha, l, kind, batch.cgin_refs, *attention);
        } else {
            out = gin_relation(pv, layer.gin[r], z[s], z[d], batch.src[r], batch.dst[r], layer.xi);
        }
        acc[d] = acc[d].valid() ? t.add(acc[d], out) : out;
    }
    for (auto& a : acc) a = t.relu(a);
    return acc;
}

ad::Var Encoder::temporal_layer(ParamVars& pv, const GraphBatch& batch, ad::Var z_snapshot, std::size_t l) const {
    const Layer& layer = layers_.at(l);
    ad::Var out = config_.hierarchical
                      ? weighted_gin(pv, layer.temporal, z_snapshot, batch.link_src, batch.link_dst,
                                     batch.link_weight, layer.eps)
                      : snapshot_self_attention(pv, layer.temporal, z_snapshot, batch.pair_src, batch.pair_dst,
                                                layer.eps);
    return pv.tape().relu(out);
}

ad::Var Encoder::forward(ParamVars& pv, const GraphBatch& batch, std::vector<AttentionRecord>* attention) const {
    ad::Tape& t = pv.tape();
    auto z = initial_states(pv, batch);
    const auto snap = static_cast<std::size_t>(NodeKind::Snapshot);
    ad::Var readout;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        z = structural_layer(pv, batch, z, l, attention);
        z[snap] = temporal_layer(pv, batch, z[snap], l);
        auto projected = t.matmul(z[snap], pv(layers_[l].projection));
        readout = readout.valid() ? t.add(readout, projected) : projected;
    }
    readout = t.scale(readout, 1.0 / static_cast<double>(layers_.size()));
    return t.segment_sum(readout, batch.snapshot_graph, batch.graph_count);
}

}  // namespace h2cgl
