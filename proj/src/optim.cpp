#include "h2cgl/optim.hpp"

#include "h2cgl/errors.hpp"

#include <cmath>

namespace h2cgl {

AdamState AdamState::for_params(const ParamSet& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& p : params) {
        s.first_moment.emplace_back(p.value.rows(), p.value.cols());
        s.second_moment.emplace_back(p.value.rows(), p.value.cols());
    }
    return s;
}

void adam_step(ParamSet& params, const Gradients& grads, AdamState& state) {
    if (grads.values.size() != params.size() || state.first_moment.size() != params.size()) {
        throw ShapeError("adam_step: parameter/gradient/state count mismatch");
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& w = params[i].value;
        const Tensor& g = grads.values[i];
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        if (!w.same_shape(g) || !w.same_shape(m) || !w.same_shape(v)) {
            throw ShapeError("adam_step: shape mismatch for " + params[i].name + ": param " +
                             w.shape_string() + ", grad " + g.shape_string());
        }
        auto wd = w.data();
        auto gd = g.data();
        auto md = m.data();
        auto vd = v.data();
        for (std::size_t k = 0; k < wd.size(); ++k) {
            md[k] = state.beta1 * md[k] + (1.0 - state.beta1) * gd[k];
            vd[k] = state.beta2 * vd[k] + (1.0 - state.beta2) * gd[k] * gd[k];
            const double m_hat = md[k] / c1;
            const double v_hat = vd[k] / c2;
            wd[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

}  // namespace h2cgl
