#pragma once

#include "h2cgl/params.hpp"
#include "h2cgl/tensor.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace h2cgl::ad {

// Handle to a value recorded on a Tape.
struct Var {
    static constexpr std::uint32_t kInvalid = 0xffffffffu;
    std::uint32_t id = kInvalid;
    bool valid() const { return id != kInvalid; }
};

using Index = std::vector<std::uint32_t>;

// Reverse-mode tape. Nodes are appended in evaluation order, which is a valid
// topological order; backward() walks them once in reverse.
//
// A tape is single-threaded. Parameters are referenced, not copied, so several
// tapes may read one ParamSet concurrently as long as nobody writes to it.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    // Differentiable input owned by the tape (used by gradient checks).
    Var leaf(Tensor value);
    Var parameter(const ParamSet& params, std::size_t index);

    const Tensor& value(Var v) const;
    // Gradient of the last backward() loss w.r.t. v; zeros if v was unreachable.
    Tensor grad(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }

    void backward(Var loss);
    Gradients parameter_gradients(const ParamSet& params) const;

    // --- primitives -----------------------------------------------------
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var linear(Var x, Var weight, Var bias);  // x W + 1 b, bias is 1 x out
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);                    // elementwise
    Var add_row(Var a, Var row);              // a + broadcast 1 x n row
    Var mul_rows(Var x, Var weights);         // row i of x times weights(i, 0)
    Var scale(Var a, double factor);
    Var add_scalar(Var a, double value);
    Var concat_rows(std::span<const Var> parts);
    Var concat_cols(Var a, Var b);
    Var gather_rows(Var x, std::shared_ptr<const Index> rows);
    Var segment_sum(Var x, std::shared_ptr<const Index> segments, std::size_t segment_count);
    Var segment_softmax(Var scores, std::shared_ptr<const Index> segments, std::size_t segment_count);
    Var leaky_relu(Var x, double negative_slope = 0.2);
    Var relu(Var x);
    Var l2_normalize_rows(Var x);
    Var exp(Var x);
    Var log(Var x);
    Var log_softmax_rows(Var x);
    Var sum(Var x);       // -> 1 x 1
    Var mean(Var x);      // -> 1 x 1
    Var sum_cols(Var x);  // n x m -> n x 1

    // Convenience wrappers that copy plain index vectors.
    Var gather_rows(Var x, Index rows) {
        return gather_rows(x, std::make_shared<const Index>(std::move(rows)));
    }
    Var segment_sum(Var x, Index segments, std::size_t segment_count) {
        return segment_sum(x, std::make_shared<const Index>(std::move(segments)), segment_count);
    }
    Var segment_softmax(Var scores, Index segments, std::size_t segment_count) {
        return segment_softmax(scores, std::make_shared<const Index>(std::move(segments)),
                               segment_count);
    }

private:
    using BackwardFn = std::function<void(Tape&, std::uint32_t)>;

    struct Node {
        Tensor owned;
        const Tensor* external = nullptr;
        Tensor grad;
        bool requires_grad = false;
        std::int64_t param_index = -1;
        BackwardFn backward;
    };

    const Tensor& val(std::uint32_t id) const;
    Tensor& grad_ref(std::uint32_t id);
    bool needs(Var v) const { return nodes_[v.id].requires_grad; }
    Var push(Tensor value, bool requires_grad, BackwardFn fn);
    void check(Var v) const;

    std::vector<Node> nodes_;
};

}  // namespace h2cgl::ad
