#pragma once

#include "h2cgl/autodiff.hpp"
#include "h2cgl/params.hpp"

#include <random>
#include <string>
#include <vector>

namespace h2cgl {

// Lazily binds parameters to one tape so each is recorded at most once per forward pass.
class ParamVars {
public:
    ParamVars(ad::Tape& tape, const ParamSet& params)
        : tape_(tape), params_(params), vars_(params.size()) {}

    ad::Var operator()(std::size_t index) {
        if (!vars_.at(index).valid()) vars_[index] = tape_.parameter(params_, index);
        return vars_[index];
    }
    ad::Tape& tape() { return tape_; }
    const ParamSet& params() const { return params_; }

private:
    ad::Tape& tape_;
    const ParamSet& params_;
    std::vector<ad::Var> vars_;
};

struct Linear {
    std::size_t weight = 0;
    std::size_t bias = 0;

    static Linear create(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                         std::mt19937_64& rng);
    ad::Var apply(ParamVars& pv, ad::Var x) const;
};

// in -> hidden (relu) -> out
struct Mlp {
    Linear first;
    Linear second;

    static Mlp create(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
                      std::size_t out, std::mt19937_64& rng);
    ad::Var apply(ParamVars& pv, ad::Var x) const;
};

}  // namespace h2cgl
