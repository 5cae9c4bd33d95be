#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "seqadapt/errors.hpp"

namespace seqadapt {

// Dense 1-d tensor of doubles.
class Tensor1 {
public:
    Tensor1() = default;
    explicit Tensor1(std::size_t length, double fill = 0.0) : data_(length, fill) {}
    Tensor1(std::initializer_list<double> values) : data_(values) {}

    std::size_t length() const { return data_.size(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool operator==(const Tensor1&) const = default;

private:
    std::vector<double> data_;
};

// Dense row-major 2-d tensor of doubles.
class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor2(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
        : rows_(rows), cols_(cols), data_(values) {
        if (data_.size() != rows * cols) {
            throw DimensionError("Tensor2 initializer size does not match shape");
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool operator==(const Tensor2&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Throws NumericError naming `what` if any value is NaN or infinite.
void check_finite(std::span<const double> values, const char* what);

// w * x + b. Throws DimensionError naming both shapes on mismatch.
Tensor1 affine(const Tensor2& w, const Tensor1& x, const Tensor1& b);

// Numerically stable logistic function; no overflow for |x| up to DBL_MAX.
double sigmoid(double x);
Tensor1 sigmoid(const Tensor1& x);

} // namespace seqadapt
