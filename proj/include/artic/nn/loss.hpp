#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "artic/nn/network.hpp"

namespace artic::nn {

template <typename T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> grad;
};

/// Mean cross-entropy of softmax(logits) against class indices.
/// Gradient is (softmax - one_hot) / N.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> labels) {
    const std::size_t N = logits.rows();
    const std::size_t K = logits.cols();
    if (labels.size() != N)
        throw DimensionError("label count " + std::to_string(labels.size()) + " does not match " +
                             std::to_string(N) + " frames");
    LossResult<T> r;
    r.grad = Tensor<T>::matrix(N, K);
    if (N == 0) return r;
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const std::int32_t y = labels[n];
        if (y < 0 || static_cast<std::size_t>(y) >= K)
            throw LabelError("label " + std::to_string(y) + " outside [0, " + std::to_string(K) + ")");
        const auto x = logits.row(n);
        double m = x[0];
        for (T v : x) m = std::max(m, static_cast<double>(v));
        double z = 0.0;
        for (T v : x) z += std::exp(static_cast<double>(v) - m);
        const double log_z = m + std::log(z);
        total += log_z - static_cast<double>(x[static_cast<std::size_t>(y)]);
        auto g = r.grad.row(n);
        for (std::size_t k = 0; k < K; ++k) {
            double p = std::exp(static_cast<double>(x[k]) - log_z);
            if (static_cast<std::size_t>(y) == k) p -= 1.0;
            g[k] = static_cast<T>(p / static_cast<double>(N));
        }
    }
    r.loss = total / static_cast<double>(N);
    return r;
}

/// Mean squared error over all entries; gradient 2 (pred - target) / entries.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape() != target.shape()) throw DimensionError("mse_loss: prediction and target shapes differ");
    LossResult<T> r;
    r.grad = Tensor<T>(pred.shape());
    const std::size_t M = pred.size();
    if (M == 0) return r;
    double total = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        total += d * d;
        r.grad[i] = static_cast<T>(2.0 * d / static_cast<double>(M));
    }
    r.loss = total / static_cast<double>(M);
    return r;
}

/// Plain SGD: p <- p - lr * g / batch_size. Throws DivergenceError before
/// touching any parameter if a gradient is non-finite.
template <typename T>
void sgd_step(Network<T>& net, const Gradients<T>& grads, double lr, std::size_t batch_size) {
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    auto params = net.parameters();
    if (params.size() != grads.size())
        throw DimensionError("gradient count " + std::to_string(grads.size()) + " does not match " +
                             std::to_string(params.size()) + " parameter tensors");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].shape() != params[i]->shape()) throw DimensionError("gradient shape mismatch");
        if (!grads[i].all_finite()) throw DivergenceError("non-finite gradient in parameter tensor " + std::to_string(i));
    }
    const T scale = static_cast<T>(lr / static_cast<double>(batch_size));
    for (std::size_t i = 0; i < grads.size(); ++i) {
        T* p = params[i]->data();
        const T* g = grads[i].data();
        for (std::size_t k = 0; k < grads[i].size(); ++k) p[k] -= scale * g[k];
    }
}

}  // namespace artic::nn
