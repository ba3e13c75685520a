#pragma once

#include "h2cgl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace h2cgl::testing {

// Builds a scalar loss on a fresh tape from differentiable leaves.
using LossBuilder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline double eval_loss(const LossBuilder& build, const std::vector<Tensor>& inputs) {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
    return tape.value(build(tape, leaves)).item();
}

// Worst relative error ||analytic - numeric|| / (||analytic|| + ||numeric||) over all inputs,
// with central differences of step h.
inline double max_grad_error(const LossBuilder& build, std::vector<Tensor> inputs, double h = 1e-5) {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
    tape.backward(build(tape, leaves));
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor analytic = tape.grad(leaves[i]);
        double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
        for (std::size_t k = 0; k < inputs[i].size(); ++k) {
            const double orig = inputs[i].data()[k];
            inputs[i].data()[k] = orig + h;
            const double up = eval_loss(build, inputs);
            inputs[i].data()[k] = orig - h;
            const double down = eval_loss(build, inputs);
            inputs[i].data()[k] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic.data()[k];
            diff2 += (a - numeric) * (a - numeric);
            a2 += a * a;
            n2 += numeric * numeric;
        }
        const double denom = std::sqrt(a2) + std::sqrt(n2);
        if (denom > 1e-10) worst = std::max(worst, std::sqrt(diff2) / denom);
        else worst = std::max(worst, std::sqrt(diff2));
    }
    return worst;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    Tensor t(rows, cols);
    for (double& v : t.data()) v = d(rng);
    return t;
}

// Reduces any tensor to a scalar through a fixed random projection so that every
// output entry gets a distinct upstream gradient.
inline ad::Var project(ad::Tape& tape, ad::Var x, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    const Tensor& v = tape.value(x);
    auto w = tape.constant(random_tensor(v.rows(), v.cols(), rng));
    return tape.sum(tape.mul(x, w));
}

}  // namespace h2cgl::testing
