#pragma once

#include "h2cgl/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace h2cgl {

struct Parameter {
    std::string name;
    Tensor value;
};

// Named trainable tensors. Indices are stable once added.
class ParamSet {
public:
    std::size_t add(std::string name, Tensor init);

    std::size_t size() const { return params_.size(); }
    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }
    std::size_t index_of(std::string_view name) const;
    bool contains(std::string_view name) const;
    std::size_t scalar_count() const;

    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

// One gradient tensor per parameter, aligned with ParamSet indices.
struct Gradients {
    std::vector<Tensor> values;

    static Gradients zeros_like(const ParamSet& params);
    void merge(const Gradients& other);
    void scale(double factor);
    bool all_finite() const;
};

namespace init {

// uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
Tensor normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng);
inline Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }

}  // namespace init

// Checkpoint container: magic, format version, metadata key/values, then
// (name, rows, cols, values) per parameter.
struct CheckpointMeta {
    std::vector<std::pair<std::string, std::string>> entries;

    std::string get(std::string_view key) const;
    void set(std::string key, std::string value);
};

void save_checkpoint(std::ostream& out, const ParamSet& params, const CheckpointMeta& meta);
CheckpointMeta read_checkpoint_meta(std::istream& in);
// Loads values into an already-constructed ParamSet; names and shapes must match exactly.
CheckpointMeta load_checkpoint(std::istream& in, ParamSet& params);

}  // namespace h2cgl
