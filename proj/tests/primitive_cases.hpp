#pragma once

#include "grad_check.hpp"

#include <string>
#include <vector>

namespace h2cgl::testing {

struct PrimitiveCase {
    std::string name;
    LossBuilder build;
    std::vector<Tensor> inputs;
};

// One finite-difference case per tape primitive.
inline std::vector<PrimitiveCase> primitive_cases(std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    auto R = [&](std::size_t r, std::size_t c) { return random_tensor(r, c, rng); };
    // Keeps inputs away from the kinks of relu and leaky_relu.
    auto away_from_zero = [&](std::size_t r, std::size_t c) {
        Tensor t = random_tensor(r, c, rng, 0.1, 1.0);
        std::bernoulli_distribution flip(0.5);
        for (double& v : t.data())
            if (flip(rng)) v = -v;
        return t;
    };
    using V = std::vector<ad::Var>;
    std::vector<PrimitiveCase> cases;
    cases.push_back({"matmul", [](ad::Tape& t, const V& x) { return project(t, t.matmul(x[0], x[1])); },
                     {R(3, 4), R(4, 2)}});
    cases.push_back({"transpose", [](ad::Tape& t, const V& x) { return project(t, t.transpose(x[0])); },
                     {R(3, 2)}});
    cases.push_back({"linear",
                     [](ad::Tape& t, const V& x) { return project(t, t.linear(x[0], x[1], x[2])); },
                     {R(4, 3), R(3, 5), R(1, 5)}});
    cases.push_back({"add", [](ad::Tape& t, const V& x) { return project(t, t.add(x[0], x[1])); },
                     {R(2, 3), R(2, 3)}});
    cases.push_back({"sub", [](ad::Tape& t, const V& x) { return project(t, t.sub(x[0], x[1])); },
                     {R(2, 3), R(2, 3)}});
    cases.push_back({"mul", [](ad::Tape& t, const V& x) { return project(t, t.mul(x[0], x[1])); },
                     {R(2, 3), R(2, 3)}});
    cases.push_back({"add_row", [](ad::Tape& t, const V& x) { return project(t, t.add_row(x[0], x[1])); },
                     {R(4, 3), R(1, 3)}});
    cases.push_back({"mul_rows", [](ad::Tape& t, const V& x) { return project(t, t.mul_rows(x[0], x[1])); },
                     {R(4, 3), R(4, 1)}});
    cases.push_back({"scale", [](ad::Tape& t, const V& x) { return project(t, t.scale(x[0], -1.7)); },
                     {R(2, 2)}});
    cases.push_back({"add_scalar", [](ad::Tape& t, const V& x) {
                         return project(t, t.mul(t.add_scalar(x[0], 0.3), x[0]));
                     },
                     {R(2, 2)}});
    cases.push_back({"concat_rows",
                     [](ad::Tape& t, const V& x) {
                         std::vector<ad::Var> parts{x[0], x[1], x[0]};
                         return project(t, t.concat_rows(parts));
                     },
                     {R(2, 3), R(1, 3)}});
    cases.push_back({"concat_cols", [](ad::Tape& t, const V& x) { return project(t, t.concat_cols(x[0], x[1])); },
                     {R(3, 2), R(3, 1)}});
    cases.push_back({"gather_rows",
                     [](ad::Tape& t, const V& x) { return project(t, t.gather_rows(x[0], ad::Index{2, 0, 2, 1})); },
                     {R(3, 2)}});
    cases.push_back({"segment_sum",
                     [](ad::Tape& t, const V& x) {
                         return project(t, t.segment_sum(x[0], ad::Index{0, 2, 0, 2, 1}, 4));
                     },
                     {R(5, 3)}});
    cases.push_back({"segment_softmax",
                     [](ad::Tape& t, const V& x) {
                         return project(t, t.segment_softmax(x[0], ad::Index{1, 0, 1, 1, 0}, 3));
                     },
                     {R(5, 1)}});
    cases.push_back({"leaky_relu", [](ad::Tape& t, const V& x) { return project(t, t.leaky_relu(x[0], 0.2)); },
                     {away_from_zero(3, 3)}});
    cases.push_back({"relu", [](ad::Tape& t, const V& x) { return project(t, t.relu(x[0])); },
                     {away_from_zero(3, 3)}});
    cases.push_back({"l2_normalize_rows",
                     [](ad::Tape& t, const V& x) { return project(t, t.l2_normalize_rows(x[0])); },
                     {R(3, 4)}});
    cases.push_back({"exp", [](ad::Tape& t, const V& x) { return project(t, t.exp(x[0])); }, {R(2, 3)}});
    cases.push_back({"log", [](ad::Tape& t, const V& x) { return project(t, t.log(x[0])); },
                     {random_tensor(2, 3, rng, 0.5, 2.0)}});
    cases.push_back({"log_softmax_rows",
                     [](ad::Tape& t, const V& x) { return project(t, t.log_softmax_rows(x[0])); },
                     {R(3, 4)}});
    cases.push_back({"sum", [](ad::Tape& t, const V& x) { return t.sum(t.mul(x[0], x[0])); }, {R(2, 3)}});
    cases.push_back({"mean", [](ad::Tape& t, const V& x) { return t.mean(t.mul(x[0], x[0])); }, {R(2, 3)}});
    cases.push_back({"sum_cols", [](ad::Tape& t, const V& x) { return project(t, t.sum_cols(x[0])); },
                     {R(3, 4)}});
    return cases;
}

}  // namespace h2cgl::testing
