#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace h2cgl {

// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1, scalars 1 x 1.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor(1, 1, v); }
    static Tensor row_vector(std::span<const double> values);
    static Tensor column_vector(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    std::vector<std::size_t> shape() const { return {rows_, cols_}; }
    std::string shape_string() const;

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double item() const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void fill(double v);
    bool all_finite() const;
    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    // this += other (shapes must match)
    void accumulate(const Tensor& other);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace h2cgl
