#include "h2cgl/params.hpp"

#include "h2cgl/binary_io.hpp"
#include "h2cgl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace h2cgl {

namespace {
constexpr char kCheckpointMagic[8] = {'H', '2', 'C', 'G', 'L', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

std::size_t ParamSet::add(std::string name, Tensor init) {
    if (by_name_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    by_name_.emplace(name, params_.size());
    params_.push_back({std::move(name), std::move(init)});
    return params_.size() - 1;
}

std::size_t ParamSet::index_of(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
    return it->second;
}

bool ParamSet::contains(std::string_view name) const {
    return by_name_.contains(std::string(name));
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

Gradients Gradients::zeros_like(const ParamSet& params) {
    Gradients g;
    g.values.reserve(params.size());
    for (const auto& p : params) g.values.emplace_back(p.value.rows(), p.value.cols());
    return g;
}

void Gradients::merge(const Gradients& other) {
    if (values.size() != other.values.size()) throw ShapeError("Gradients::merge size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i].accumulate(other.values[i]);
}

void Gradients::scale(double factor) {
    for (auto& t : values)
        for (double& v : t.data()) v *= factor;
}

bool Gradients::all_finite() const {
    for (const auto& t : values)
        if (!t.all_finite()) return false;
    return true;
}

namespace init {

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    Tensor t(fan_in, fan_out);
    for (double& v : t.data()) v = dist(rng);
    return t;
}

Tensor normal(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Tensor t(rows, cols);
    for (double& v : t.data()) v = dist(rng);
    return t;
}

}  // namespace init

std::string CheckpointMeta::get(std::string_view key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    throw DataError("checkpoint metadata missing key: " + std::string(key));
}

void CheckpointMeta::set(std::string key, std::string value) {
    for (auto& [k, v] : entries) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries.emplace_back(std::move(key), std::move(value));
}

void save_checkpoint(std::ostream& out, const ParamSet& params, const CheckpointMeta& meta) {
    io::BinaryWriter w(out);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.pod(kCheckpointVersion);
    w.pod<std::uint64_t>(meta.entries.size());
    for (const auto& [k, v] : meta.entries) {
        w.string(k);
        w.string(v);
    }
    w.pod<std::uint64_t>(params.size());
    for (const auto& p : params) {
        w.string(p.name);
        w.pod<std::uint64_t>(p.value.rows());
        w.pod<std::uint64_t>(p.value.cols());
        w.pod_vector<double>(p.value.data());
    }
    if (!w.good()) throw DataError("failed to write checkpoint");
}

CheckpointMeta read_checkpoint_meta(std::istream& in) {
    char magic[sizeof(kCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kCheckpointMagic))) {
        throw DataError("not a checkpoint file (bad magic)");
    }
    io::BinaryReader r(in);
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    CheckpointMeta meta;
    const auto n = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < n; ++i) {
        auto k = r.string();
        auto v = r.string();
        meta.entries.emplace_back(std::move(k), std::move(v));
    }
    return meta;
}

CheckpointMeta load_checkpoint(std::istream& in, ParamSet& params) {
    CheckpointMeta meta = read_checkpoint_meta(in);
    io::BinaryReader r(in);
    const auto n = r.pod<std::uint64_t>();
    if (n != params.size()) {
        throw DataError("checkpoint has " + std::to_string(n) + " parameters, model expects " +
                        std::to_string(params.size()));
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::string name = r.string();
        const auto rows = r.pod<std::uint64_t>();
        const auto cols = r.pod<std::uint64_t>();
        auto values = r.pod_vector<double>();
        if (!params.contains(name)) throw DataError("checkpoint parameter not in model: " + name);
        Parameter& p = params[params.index_of(name)];
        if (p.value.rows() != rows || p.value.cols() != cols || values.size() != rows * cols) {
            throw DataError("checkpoint shape mismatch for " + name + ": stored [" +
                            std::to_string(rows) + "x" + std::to_string(cols) + "], model " +
                            p.value.shape_string());
        }
        p.value = Tensor(rows, cols, std::move(values));
    }
    return meta;
}

}  // namespace h2cgl
