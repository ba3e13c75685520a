#include "h2cgl/autodiff.hpp"

#include "h2cgl/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace h2cgl::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const Tensor& t) {
    return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
}

MutMap view(Tensor& t) {
    return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                     b.shape_string());
}

constexpr double kNormFloor = 1e-12;

}  // namespace

void Tape::check(Var v) const {
    if (!v.valid() || v.id >= nodes_.size()) throw ShapeError("Var does not belong to this tape");
}

const Tensor& Tape::val(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.owned;
}

const Tensor& Tape::value(Var v) const {
    check(v);
    return val(v.id);
}

Tensor& Tape::grad_ref(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty() && !val(id).empty()) {
        const Tensor& v = val(id);
        n.grad = Tensor(v.rows(), v.cols());
    }
    return n.grad;
}

Tensor Tape::grad(Var v) const {
    check(v);
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) return Tensor(val(v.id).rows(), val(v.id).cols());
    return n.grad;
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, {}); }

Var Tape::leaf(Tensor value) { return push(std::move(value), true, {}); }

Var Tape::parameter(const ParamSet& params, std::size_t index) {
    Node n;
    n.external = &params[index].value;
    n.requires_grad = true;
    n.param_index = static_cast<std::int64_t>(index);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
    check(loss);
    if (val(loss.id).size() != 1) {
        throw ShapeError("backward: loss must be scalar, got " + val(loss.id).shape_string());
    }
    for (auto& n : nodes_) n.grad = Tensor();
    grad_ref(loss.id)(0, 0) = 1.0;
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
        n.backward(*this, id);
    }
}

Gradients Tape::parameter_gradients(const ParamSet& params) const {
    Gradients g = Gradients::zeros_like(params);
    for (const auto& n : nodes_) {
        if (n.param_index < 0 || n.grad.empty()) continue;
        g.values[static_cast<std::size_t>(n.param_index)].accumulate(n.grad);
    }
    return g;
}

// --- primitives -------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (A.cols() != B.rows()) shape_fail("matmul", A, B);
    Tensor out(A.rows(), B.cols());
    if (out.size() > 0 && A.cols() > 0) view(out).noalias() = view(A) * view(B);
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        if (t.needs(a)) {
            Tensor& ga = t.grad_ref(a.id);
            if (ga.size() > 0 && G.cols() > 0) view(ga).noalias() += view(G) * view(t.val(b.id)).transpose();
        }
        if (t.needs(b)) {
            Tensor& gb = t.grad_ref(b.id);
            if (gb.size() > 0 && G.rows() > 0) view(gb).noalias() += view(t.val(a.id)).transpose() * view(G);
        }
    });
}

Var Tape::transpose(Var a) {
    check(a);
    const Tensor& A = val(a.id);
    Tensor out(A.cols(), A.rows());
    if (out.size() > 0) view(out) = view(A).transpose();
    return push(std::move(out), needs(a), [a](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        Tensor& ga = t.grad_ref(a.id);
        if (ga.size() > 0) view(ga) += view(G).transpose();
    });
}

Var Tape::linear(Var x, Var weight, Var bias) {
    check(x);
    check(weight);
    check(bias);
    const Tensor& X = val(x.id);
    const Tensor& W = val(weight.id);
    const Tensor& B = val(bias.id);
    if (X.cols() != W.rows()) shape_fail("linear", X, W);
    if (B.rows() != 1 || B.cols() != W.cols()) shape_fail("linear(bias)", W, B);
    Tensor out(X.rows(), W.cols());
    if (out.size() > 0) {
        auto o = view(out);
        if (X.cols() > 0) o.noalias() = view(X) * view(W);
        o.rowwise() += view(B).row(0);
    }
    const bool rg = needs(x) || needs(weight) || needs(bias);
    return push(std::move(out), rg, [x, weight, bias](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        if (G.rows() == 0) return;
        if (t.needs(x)) {
            Tensor& gx = t.grad_ref(x.id);
            if (gx.size() > 0) view(gx).noalias() += view(G) * view(t.val(weight.id)).transpose();
        }
        if (t.needs(weight)) {
            Tensor& gw = t.grad_ref(weight.id);
            if (gw.size() > 0) view(gw).noalias() += view(t.val(x.id)).transpose() * view(G);
        }
        if (t.needs(bias)) {
            Tensor& gb = t.grad_ref(bias.id);
            view(gb).row(0) += view(G).colwise().sum();
        }
    });
}

Var Tape::add(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (!A.same_shape(B)) shape_fail("add", A, B);
    Tensor out = A;
    out.accumulate(B);
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        if (t.needs(a)) t.grad_ref(a.id).accumulate(G);
        if (t.needs(b)) t.grad_ref(b.id).accumulate(G);
    });
}

Var Tape::sub(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (!A.same_shape(B)) shape_fail("sub", A, B);
    Tensor out = A;
    auto od = out.data();
    auto bd = B.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        if (t.needs(a)) t.grad_ref(a.id).accumulate(G);
        if (t.needs(b)) {
            auto gb = t.grad_ref(b.id).data();
            auto g = G.data();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (!A.same_shape(B)) shape_fail("mul", A, B);
    Tensor out(A.rows(), A.cols());
    auto od = out.data();
    auto ad = A.data();
    auto bd = B.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * bd[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, std::uint32_t self) {
        auto g = t.nodes_[self].grad.data();
        if (t.needs(a)) {
            auto ga = t.grad_ref(a.id).data();
            auto bv = t.val(b.id).data();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.needs(b)) {
            auto gb = t.grad_ref(b.id).data();
            auto av = t.val(a.id).data();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var Tape::add_row(Var a, Var row) {
    check(a);
    check(row);
    const Tensor& A = val(a.id);
    const Tensor& R = val(row.id);
    if (R.rows() != 1 || R.cols() != A.cols()) shape_fail("add_row", A, R);
    Tensor out = A;
    if (out.size() > 0) view(out).rowwise() += view(R).row(0);
    return push(std::move(out), needs(a) || needs(row), [a, row](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        if (t.needs(a)) t.grad_ref(a.id).accumulate(G);
        if (t.needs(row) && G.rows() > 0) view(t.grad_ref(row.id)).row(0) += view(G).colwise().sum();
    });
}

Var Tape::mul_rows(Var x, Var weights) {
    check(x);
    check(weights);
    const Tensor& X = val(x.id);
    const Tensor& W = val(weights.id);
    if (W.cols() != 1 || W.rows() != X.rows()) shape_fail("mul_rows", X, W);
    Tensor out = X;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        const double w = W(r, 0);
        for (double& v : out.row(r)) v *= w;
    }
    return push(std::move(out), needs(x) || needs(weights), [x, weights](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        const Tensor& Xv = t.val(x.id);
        const Tensor& Wv = t.val(weights.id);
        const bool gx_needed = t.needs(x);
        const bool gw_needed = t.needs(weights);
        for (std::size_t r = 0; r < G.rows(); ++r) {
            auto g = G.row(r);
            if (gx_needed) {
                auto gx = t.grad_ref(x.id).row(r);
                const double w = Wv(r, 0);
                for (std::size_t c = 0; c < g.size(); ++c) gx[c] += g[c] * w;
            }
            if (gw_needed) {
                auto xr = Xv.row(r);
                double s = 0.0;
                for (std::size_t c = 0; c < g.size(); ++c) s += g[c] * xr[c];
                t.grad_ref(weights.id)(r, 0) += s;
            }
        }
    });
}

Var Tape::scale(Var a, double factor) {
    check(a);
    Tensor out = val(a.id);
    for (double& v : out.data()) v *= factor;
    return push(std::move(out), needs(a), [a, factor](Tape& t, std::uint32_t self) {
        auto g = t.nodes_[self].grad.data();
        auto ga = t.grad_ref(a.id).data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    });
}

Var Tape::add_scalar(Var a, double value) {
    check(a);
    Tensor out = val(a.id);
    for (double& v : out.data()) v += value;
    return push(std::move(out), needs(a), [a](Tape& t, std::uint32_t self) {
        t.grad_ref(a.id).accumulate(t.nodes_[self].grad);
    });
}

Var Tape::concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    std::size_t rows = 0;
    const std::size_t cols = value(parts[0]).cols();
    bool rg = false;
    for (Var p : parts) {
        check(p);
        const Tensor& P = val(p.id);
        if (P.cols() != cols) shape_fail("concat_rows", val(parts[0].id), P);
        rows += P.rows();
        rg = rg || needs(p);
    }
    Tensor out(rows, cols);
    std::size_t offset = 0;
    for (Var p : parts) {
        const Tensor& P = val(p.id);
        std::copy(P.data().begin(), P.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offset * cols));
        offset += P.rows();
    }
    std::vector<Var> saved(parts.begin(), parts.end());
    return push(std::move(out), rg, [saved, cols](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        std::size_t offset = 0;
        for (Var p : saved) {
            const std::size_t n = t.val(p.id).rows();
            if (t.needs(p)) {
                auto gp = t.grad_ref(p.id).data();
                for (std::size_t i = 0; i < n * cols; ++i) gp[i] += G.data()[offset * cols + i];
            }
            offset += n;
        }
    });
}

Var Tape::concat_cols(Var a, Var b) {
    check(a);
    check(b);
    const Tensor& A = val(a.id);
    const Tensor& B = val(b.id);
    if (A.rows() != B.rows()) shape_fail("concat_cols", A, B);
    Tensor out(A.rows(), A.cols() + B.cols());
    for (std::size_t r = 0; r < A.rows(); ++r) {
        auto o = out.row(r);
        std::copy(A.row(r).begin(), A.row(r).end(), o.begin());
        std::copy(B.row(r).begin(), B.row(r).end(), o.begin() + static_cast<std::ptrdiff_t>(A.cols()));
    }
    const std::size_t ac = A.cols();
    return push(std::move(out), needs(a) || needs(b), [a, b, ac](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        for (std::size_t r = 0; r < G.rows(); ++r) {
            auto g = G.row(r);
            if (t.needs(a)) {
                auto ga = t.grad_ref(a.id).row(r);
                for (std::size_t c = 0; c < ac; ++c) ga[c] += g[c];
            }
            if (t.needs(b)) {
                auto gb = t.grad_ref(b.id).row(r);
                for (std::size_t c = 0; c < gb.size(); ++c) gb[c] += g[ac + c];
            }
        }
    });
}

Var Tape::gather_rows(Var x, std::shared_ptr<const Index> rows) {
    check(x);
    const Tensor& X = val(x.id);
    const std::size_t cols = X.cols();
    Tensor out(rows->size(), cols);
    for (std::size_t i = 0; i < rows->size(); ++i) {
        const auto r = (*rows)[i];
        if (r >= X.rows()) {
            throw ShapeError("gather_rows: index " + std::to_string(r) + " out of range for " +
                             X.shape_string());
        }
        auto src = X.row(r);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return push(std::move(out), needs(x), [x, rows](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        Tensor& gx = t.grad_ref(x.id);
        for (std::size_t i = 0; i < rows->size(); ++i) {
            auto g = G.row(i);
            auto dst = gx.row((*rows)[i]);
            for (std::size_t c = 0; c < g.size(); ++c) dst[c] += g[c];
        }
    });
}

Var Tape::segment_sum(Var x, std::shared_ptr<const Index> segments, std::size_t segment_count) {
    check(x);
    const Tensor& X = val(x.id);
    if (segments->size() != X.rows()) {
        throw ShapeError("segment_sum: " + std::to_string(segments->size()) + " segment ids for " +
                         X.shape_string());
    }
    Tensor out(segment_count, X.cols());
    for (std::size_t i = 0; i < segments->size(); ++i) {
        const auto s = (*segments)[i];
        if (s >= segment_count) throw ShapeError("segment_sum: segment id out of range");
        auto src = X.row(i);
        auto dst = out.row(s);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
    return push(std::move(out), needs(x), [x, segments](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        Tensor& gx = t.grad_ref(x.id);
        for (std::size_t i = 0; i < segments->size(); ++i) {
            auto g = G.row((*segments)[i]);
            auto dst = gx.row(i);
            for (std::size_t c = 0; c < g.size(); ++c) dst[c] += g[c];
        }
    });
}

Var Tape::segment_softmax(Var scores, std::shared_ptr<const Index> segments, std::size_t segment_count) {
    check(scores);
    const Tensor& S = val(scores.id);
    if (S.cols() != 1 || segments->size() != S.rows()) {
        throw ShapeError("segment_softmax: expects n x 1 scores with n segment ids, got " +
                         S.shape_string() + " and " + std::to_string(segments->size()) + " ids");
    }
    std::vector<double> maxima(segment_count, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < segments->size(); ++i) {
        const auto s = (*segments)[i];
        if (s >= segment_count) throw ShapeError("segment_softmax: segment id out of range");
        maxima[s] = std::max(maxima[s], S(i, 0));
    }
    Tensor out(S.rows(), 1);
    std::vector<double> totals(segment_count, 0.0);
    for (std::size_t i = 0; i < segments->size(); ++i) {
        const auto s = (*segments)[i];
        out(i, 0) = std::exp(S(i, 0) - maxima[s]);
        totals[s] += out(i, 0);
    }
    for (std::size_t i = 0; i < segments->size(); ++i) out(i, 0) /= totals[(*segments)[i]];
    return push(std::move(out), needs(scores), [scores, segments, segment_count](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        const Tensor& A = t.val(self);
        std::vector<double> dots(segment_count, 0.0);
        for (std::size_t i = 0; i < segments->size(); ++i) dots[(*segments)[i]] += G(i, 0) * A(i, 0);
        Tensor& gs = t.grad_ref(scores.id);
        for (std::size_t i = 0; i < segments->size(); ++i) {
            gs(i, 0) += A(i, 0) * (G(i, 0) - dots[(*segments)[i]]);
        }
    });
}

Var Tape::leaky_relu(Var x, double negative_slope) {
    check(x);
    Tensor out = val(x.id);
    for (double& v : out.data()) v = v > 0.0 ? v : negative_slope * v;
    return push(std::move(out), needs(x), [x, negative_slope](Tape& t, std::uint32_t self) {
        auto g = t.nodes_[self].grad.data();
        auto xv = t.val(x.id).data();
        auto gx = t.grad_ref(x.id).data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] > 0.0 ? g[i] : negative_slope * g[i];
    });
}

Var Tape::relu(Var x) {
    check(x);
    Tensor out = val(x.id);
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return push(std::move(out), needs(x), [x](Tape& t, std::uint32_t self) {
        auto g = t.nodes_[self].grad.data();
        auto xv = t.val(x.id).data();
        auto gx = t.grad_ref(x.id).data();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > 0.0) gx[i] += g[i];
    });
}

Var Tape::l2_normalize_rows(Var x) {
    check(x);
    const Tensor& X = val(x.id);
    Tensor out(X.rows(), X.cols());
    std::vector<double> norms(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        double s = 0.0;
        for (double v : X.row(r)) s += v * v;
        norms[r] = std::max(std::sqrt(s), kNormFloor);
        auto o = out.row(r);
        auto xr = X.row(r);
        for (std::size_t c = 0; c < o.size(); ++c) o[c] = xr[c] / norms[r];
    }
    return push(std::move(out), needs(x), [x, norms = std::move(norms)](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        const Tensor& Y = t.val(self);
        Tensor& gx = t.grad_ref(x.id);
        for (std::size_t r = 0; r < G.rows(); ++r) {
            auto g = G.row(r);
            auto y = Y.row(r);
            double dot = 0.0;
            for (std::size_t c = 0; c < g.size(); ++c) dot += g[c] * y[c];
            auto dst = gx.row(r);
            if (norms[r] <= kNormFloor) {
                for (std::size_t c = 0; c < g.size(); ++c) dst[c] += g[c] / kNormFloor;
                continue;
            }
            for (std::size_t c = 0; c < g.size(); ++c) dst[c] += (g[c] - y[c] * dot) / norms[r];
        }
    });
}

Var Tape::exp(Var x) {
    check(x);
    Tensor out = val(x.id);
    for (double& v : out.data()) v = std::exp(v);
    return push(std::move(out), needs(x), [x](Tape& t, std::uint32_t self) {
        auto g = t.nodes_[self].grad.data();
        auto y = t.val(self).data();
        auto gx = t.grad_ref(x.id).data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
    });
}

Var Tape::log(Var x) {
    check(x);
    Tensor out = val(x.id);
    for (double& v : out.data()) v = std::log(v);
    return push(std::move(out), needs(x), [x](Tape& t, std::uint32_t self) {
        auto g = t.nodes_[self].grad.data();
        auto xv = t.val(x.id).data();
        auto gx = t.grad_ref(x.id).data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / xv[i];
    });
}

Var Tape::log_softmax_rows(Var x) {
    check(x);
    const Tensor& X = val(x.id);
    Tensor out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto xr = X.row(r);
        const double m = *std::max_element(xr.begin(), xr.end());
        double s = 0.0;
        for (double v : xr) s += std::exp(v - m);
        const double lse = m + std::log(s);
        auto o = out.row(r);
        for (std::size_t c = 0; c < o.size(); ++c) o[c] = xr[c] - lse;
    }
    return push(std::move(out), needs(x), [x](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        const Tensor& Y = t.val(self);
        Tensor& gx = t.grad_ref(x.id);
        for (std::size_t r = 0; r < G.rows(); ++r) {
            auto g = G.row(r);
            auto y = Y.row(r);
            double gs = 0.0;
            for (double v : g) gs += v;
            auto dst = gx.row(r);
            for (std::size_t c = 0; c < g.size(); ++c) dst[c] += g[c] - std::exp(y[c]) * gs;
        }
    });
}

Var Tape::sum(Var x) {
    check(x);
    double s = 0.0;
    for (double v : val(x.id).data()) s += v;
    return push(Tensor::scalar(s), needs(x), [x](Tape& t, std::uint32_t self) {
        const double g = t.nodes_[self].grad(0, 0);
        for (double& v : t.grad_ref(x.id).data()) v += g;
    });
}

Var Tape::mean(Var x) {
    check(x);
    const Tensor& X = val(x.id);
    if (X.size() == 0) throw ShapeError("mean of empty tensor");
    double s = 0.0;
    for (double v : X.data()) s += v;
    const double n = static_cast<double>(X.size());
    return push(Tensor::scalar(s / n), needs(x), [x, n](Tape& t, std::uint32_t self) {
        const double g = t.nodes_[self].grad(0, 0) / n;
        for (double& v : t.grad_ref(x.id).data()) v += g;
    });
}

Var Tape::sum_cols(Var x) {
    check(x);
    const Tensor& X = val(x.id);
    Tensor out(X.rows(), 1);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        double s = 0.0;
        for (double v : X.row(r)) s += v;
        out(r, 0) = s;
    }
    return push(std::move(out), needs(x), [x](Tape& t, std::uint32_t self) {
        const Tensor& G = t.nodes_[self].grad;
        Tensor& gx = t.grad_ref(x.id);
        for (std::size_t r = 0; r < G.rows(); ++r)
            for (double& v : gx.row(r)) v += G(r, 0);
    });
}

}  // namespace h2cgl::ad
