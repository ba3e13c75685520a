#include "h2cgl/tensor.hpp"

#include "h2cgl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace h2cgl {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("Tensor: " + std::to_string(data_.size()) + " values for shape [" +
                         std::to_string(rows) + "x" + std::to_string(cols) + "]");
    }
}

Tensor Tensor::row_vector(std::span<const double> values) {
    return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::column_vector(std::span<const double> values) {
    return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::string Tensor::shape_string() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

double Tensor::item() const {
    if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_string());
    return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::accumulate(const Tensor& other) {
    if (!same_shape(other)) {
        throw ShapeError("accumulate: " + shape_string() + " vs " + other.shape_string());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

}  // namespace h2cgl
