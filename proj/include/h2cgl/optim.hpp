#pragma once

#include "h2cgl/params.hpp"

#include <cstdint>
#include <vector>

namespace h2cgl {

struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;

    static AdamState for_params(const ParamSet& params, double lr);
};

// Bias-corrected Adam, applied in place.
void adam_step(ParamSet& params, const Gradients& grads, AdamState& state);

}  // namespace h2cgl
