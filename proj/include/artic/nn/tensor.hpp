#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "artic/error.hpp"

namespace artic::nn {

/// Dense row-major tensor. Batches of frames are 2-D: (frames x features).
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, T fill = T(0))
        : shape_(std::move(shape)), data_(count(shape_), fill) {}
    Tensor(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_))
            throw DimensionError("tensor data size " + std::to_string(data_.size()) +
                                 " does not match shape product " + std::to_string(count(shape_)));
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T(0)) {
        return Tensor({rows, cols}, fill);
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // 2-D accessors.
    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const { return shape_.size() < 2 ? 1 : size() / std::max<std::size_t>(rows(), 1); }

    T& operator[](std::size_t i) { return data_[i]; }
    T operator[](std::size_t i) const { return data_[i]; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    T operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> span() { return data_; }
    std::span<const T> span() const { return data_; }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    bool operator==(const Tensor&) const = default;

    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<RowMatrix<T>> as_matrix(T* data, std::size_t rows, std::size_t cols) {
    return {data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

template <typename T>
Eigen::Map<const RowMatrix<T>> as_matrix(const T* data, std::size_t rows, std::size_t cols) {
    return {data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

}  // namespace artic::nn
