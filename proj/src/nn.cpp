#include "h2cgl/nn.hpp"

namespace h2cgl {

Linear Linear::create(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                      std::mt19937_64& rng) {
    Linear l;
    l.weight = params.add(prefix + ".w", init::xavier_uniform(in, out, rng));
    l.bias = params.add(prefix + ".b", init::zeros(1, out));
    return l;
}

ad::Var Linear::apply(ParamVars& pv, ad::Var x) const {
    return pv.tape().linear(x, pv(weight), pv(bias));
}

Mlp Mlp::create(ParamSet& params, const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out,
                std::mt19937_64& rng) {
    Mlp m;
    m.first = Linear::create(params, prefix + ".0", in, hidden, rng);
    m.second = Linear::create(params, prefix + ".1", hidden, out, rng);
    return m;
}

ad::Var Mlp::apply(ParamVars& pv, ad::Var x) const {
    return second.apply(pv, pv.tape().relu(first.apply(pv, x)));
}

}  // namespace h2cgl
