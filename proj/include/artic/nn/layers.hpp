#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "artic/nn/tensor.hpp"

namespace artic::nn {

enum class LayerKind : std::uint32_t { dense = 0, conv1d = 1, maxpool1d = 2, activation = 3, softmax = 4 };

/// Which axis a 1-D convolution slides along. The axis also fixes the input
/// layout: frequency inputs are channel-major (all positions of channel 0,
/// then channel 1, ...), time inputs are position-major (all channels of
/// position 0, then position 1, ...). Both produce filter-major output.
enum class ConvAxis : std::uint32_t { frequency = 0, time = 1 };

enum class ActivationFn : std::uint32_t { sigmoid = 0, relu = 1, linear = 2 };

inline const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::maxpool1d: return "maxpool1d";
        case LayerKind::activation: return "activation";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}
inline const char* to_string(ConvAxis a) { return a == ConvAxis::frequency ? "frequency" : "time"; }
inline const char* to_string(ActivationFn f) {
    switch (f) {
        case ActivationFn::sigmoid: return "sigmoid";
        case ActivationFn::relu: return "relu";
        case ActivationFn::linear: return "linear";
    }
    return "?";
}

struct LayerSpec {
    LayerKind kind = LayerKind::dense;

    // dense
    std::size_t n_in = 0;
    std::size_t n_out = 0;

    // conv1d / maxpool1d share positions and channels
    ConvAxis axis = ConvAxis::frequency;
    std::size_t positions = 0;
    std::size_t channels = 0;
    std::size_t n_filters = 0;
    std::size_t filter_width = 0;
    std::size_t pool_size = 0;

    // activation / softmax
    ActivationFn fn = ActivationFn::sigmoid;
    std::size_t width = 0;

    static LayerSpec dense(std::size_t in, std::size_t out) {
        LayerSpec s;
        s.kind = LayerKind::dense;
        s.n_in = in;
        s.n_out = out;
        return s;
    }
    static LayerSpec conv1d(ConvAxis axis, std::size_t positions, std::size_t channels,
                            std::size_t n_filters, std::size_t filter_width) {
        LayerSpec s;
        s.kind = LayerKind::conv1d;
        s.axis = axis;
        s.positions = positions;
        s.channels = channels;
        s.n_filters = n_filters;
        s.filter_width = filter_width;
        return s;
    }
    /// Non-overlapping max pooling over positions of a channel-major input.
    /// Trailing positions that do not fill a whole window are dropped.
    static LayerSpec maxpool1d(std::size_t channels, std::size_t positions, std::size_t pool_size) {
        LayerSpec s;
        s.kind = LayerKind::maxpool1d;
        s.channels = channels;
        s.positions = positions;
        s.pool_size = pool_size;
        return s;
    }
    static LayerSpec activation(ActivationFn fn, std::size_t width) {
        LayerSpec s;
        s.kind = LayerKind::activation;
        s.fn = fn;
        s.width = width;
        return s;
    }
    static LayerSpec softmax(std::size_t width) {
        LayerSpec s;
        s.kind = LayerKind::softmax;
        s.width = width;
        return s;
    }

    std::size_t conv_out_positions() const { return positions - filter_width + 1; }
    std::size_t pool_out_positions() const { return positions / pool_size; }

    std::size_t input_dim() const {
        switch (kind) {
            case LayerKind::dense: return n_in;
            case LayerKind::conv1d:
            case LayerKind::maxpool1d: return positions * channels;
            case LayerKind::activation:
            case LayerKind::softmax: return width;
        }
        return 0;
    }

    std::size_t output_dim() const {
        switch (kind) {
            case LayerKind::dense: return n_out;
            case LayerKind::conv1d: return n_filters * conv_out_positions();
            case LayerKind::maxpool1d: return channels * pool_out_positions();
            case LayerKind::activation:
            case LayerKind::softmax: return width;
        }
        return 0;
    }

    /// Throws ConfigError on non-positive sizes or a filter wider than its input.
    void validate() const {
        auto need = [this](bool ok, const char* what) {
            if (!ok) throw ConfigError(std::string(to_string(kind)) + " layer: " + what);
        };
        switch (kind) {
            case LayerKind::dense:
                need(n_in > 0 && n_out > 0, "sizes must be positive");
                break;
            case LayerKind::conv1d:
                need(positions > 0 && channels > 0 && n_filters > 0 && filter_width > 0,
                     "sizes must be positive");
                need(filter_width <= positions, "filter wider than input extent");
                break;
            case LayerKind::maxpool1d:
                need(positions > 0 && channels > 0 && pool_size > 0, "sizes must be positive");
                need(pool_size <= positions, "pool wider than input extent");
                break;
            case LayerKind::activation:
            case LayerKind::softmax:
                need(width > 0, "width must be positive");
                break;
        }
    }

    bool operator==(const LayerSpec&) const = default;
};

/// A layer: its spec plus parameter tensors (weights then bias) where it has any.
/// Dense weights are (n_out x n_in); conv weights are (n_filters x width*channels)
/// with taps ordered [tap][channel].
template <typename T>
struct Layer {
    LayerSpec spec;
    std::vector<Tensor<T>> params;

    explicit Layer(LayerSpec s) : spec(s) {
        spec.validate();
        switch (spec.kind) {
            case LayerKind::dense:
                params.emplace_back(std::vector<std::size_t>{spec.n_out, spec.n_in});
                params.emplace_back(std::vector<std::size_t>{spec.n_out});
                break;
            case LayerKind::conv1d:
                params.emplace_back(
                    std::vector<std::size_t>{spec.n_filters, spec.filter_width * spec.channels});
                params.emplace_back(std::vector<std::size_t>{spec.n_filters});
                break;
            default:
                break;
        }
    }

    bool operator==(const Layer&) const = default;
};

/// Per-layer activations kept by a training-mode forward pass.
template <typename T>
struct LayerCache {
    Tensor<T> input;               // dense, relu
    Tensor<T> output;              // sigmoid, softmax
    std::vector<T> columns;        // conv1d im2col buffer, (N*Q) x (K*C)
    std::vector<std::uint32_t> argmax;  // maxpool1d, flat input index per output
};

namespace detail {

template <typename T>
void check_input(const LayerSpec& spec, const Tensor<T>& x, std::size_t index) {
    if (x.rank() != 2 || x.cols() != spec.input_dim())
        throw DimensionError("layer " + std::to_string(index) + " (" + to_string(spec.kind) +
                             "): expected input width " + std::to_string(spec.input_dim()) + ", got " +
                             std::to_string(x.rank() == 2 ? x.cols() : x.size()));
}

// im2col: one row per (frame, output position), holding K*C taps.
template <typename T>
void im2col(const LayerSpec& s, const Tensor<T>& x, std::vector<T>& cols) {
    const std::size_t N = x.rows(), P = s.positions, C = s.channels, K = s.filter_width;
    const std::size_t Q = s.conv_out_positions(), KC = K * C;
    cols.resize(N * Q * KC);
    for (std::size_t n = 0; n < N; ++n) {
        const T* xn = x.data() + n * P * C;
        for (std::size_t q = 0; q < Q; ++q) {
            T* dst = cols.data() + (n * Q + q) * KC;
            if (s.axis == ConvAxis::time) {
                std::memcpy(dst, xn + q * C, KC * sizeof(T));
            } else {
                for (std::size_t k = 0; k < K; ++k)
                    for (std::size_t c = 0; c < C; ++c) dst[k * C + c] = xn[c * P + q + k];
            }
        }
    }
}

template <typename T>
void col2im_add(const LayerSpec& s, const T* dcols, std::size_t N, Tensor<T>& dx) {
    const std::size_t P = s.positions, C = s.channels, K = s.filter_width;
    const std::size_t Q = s.conv_out_positions(), KC = K * C;
    for (std::size_t n = 0; n < N; ++n) {
        T* dxn = dx.data() + n * P * C;
        for (std::size_t q = 0; q < Q; ++q) {
            const T* src = dcols + (n * Q + q) * KC;
            if (s.axis == ConvAxis::time) {
                for (std::size_t i = 0; i < KC; ++i) dxn[q * C + i] += src[i];
            } else {
                for (std::size_t k = 0; k < K; ++k)
                    for (std::size_t c = 0; c < C; ++c) dxn[c * P + q + k] += src[k * C + c];
            }
        }
    }
}

}  // namespace detail

/// Runs one layer. When cache is non-null, stores what backward needs.
template <typename T>
Tensor<T> layer_forward(const Layer<T>& layer, const Tensor<T>& x, LayerCache<T>* cache,
                        std::size_t index = 0) {
    const LayerSpec& s = layer.spec;
    detail::check_input(s, x, index);
    const std::size_t N = x.rows();
    Tensor<T> y = Tensor<T>::matrix(N, s.output_dim());

    switch (s.kind) {
        case LayerKind::dense: {
            const auto& W = layer.params[0];
            const auto& b = layer.params[1];
            auto Y = as_matrix(y.data(), N, s.n_out);
            Y.noalias() = as_matrix(x.data(), N, s.n_in) * as_matrix(W.data(), s.n_out, s.n_in).transpose();
            Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
                b.data(), static_cast<Eigen::Index>(s.n_out));
            if (cache) cache->input = x;
            break;
        }
        case LayerKind::conv1d: {
            const std::size_t F = s.n_filters, Q = s.conv_out_positions(), KC = s.filter_width * s.channels;
            std::vector<T> local;
            std::vector<T>& cols = cache ? cache->columns : local;
            detail::im2col(s, x, cols);
            RowMatrix<T> R = as_matrix(cols.data(), N * Q, KC) *
                             as_matrix(layer.params[0].data(), F, KC).transpose();
            const T* b = layer.params[1].data();
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t q = 0; q < Q; ++q) {
                    const T* r = R.data() + (n * Q + q) * F;
                    T* yn = y.data() + n * F * Q;
                    for (std::size_t f = 0; f < F; ++f) yn[f * Q + q] = r[f] + b[f];
                }
            break;
        }
        case LayerKind::maxpool1d: {
            const std::size_t C = s.channels, P = s.positions, S = s.pool_size, Po = s.pool_out_positions();
            if (cache) cache->argmax.resize(N * C * Po);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t j = 0; j < Po; ++j) {
                        std::size_t best = n * C * P + c * P + j * S;
                        for (std::size_t i = 1; i < S; ++i) {
                            const std::size_t idx = n * C * P + c * P + j * S + i;
                            if (x[idx] > x[best]) best = idx;
                        }
                        const std::size_t o = n * C * Po + c * Po + j;
                        y[o] = x[best];
                        if (cache) cache->argmax[o] = static_cast<std::uint32_t>(best);
                    }
            break;
        }
        case LayerKind::activation: {
            switch (s.fn) {
                case ActivationFn::sigmoid:
                    for (std::size_t i = 0; i < x.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
                    if (cache) cache->output = y;
                    break;
                case ActivationFn::relu:
                    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
                    if (cache) cache->input = x;
                    break;
                case ActivationFn::linear:
                    y = x;
                    break;
            }
            break;
        }
        case LayerKind::softmax: {
            for (std::size_t n = 0; n < N; ++n) {
                const auto xr = x.row(n);
                auto yr = y.row(n);
                const T m = *std::max_element(xr.begin(), xr.end());
                double z = 0.0;
                for (std::size_t k = 0; k < xr.size(); ++k) z += std::exp(static_cast<double>(xr[k] - m));
                for (std::size_t k = 0; k < xr.size(); ++k)
                    yr[k] = static_cast<T>(std::exp(static_cast<double>(xr[k] - m)) / z);
            }
            if (cache) cache->output = y;
            break;
        }
    }
    return y;
}

/// Back-propagates dy through one layer. Parameter gradients are written to
/// param_grads (same shapes as layer.params); dx is produced when want_dx.
template <typename T>
Tensor<T> layer_backward(const Layer<T>& layer, const LayerCache<T>& cache, const Tensor<T>& dy,
                         std::vector<Tensor<T>>& param_grads, bool want_dx) {
    const LayerSpec& s = layer.spec;
    const std::size_t N = dy.rows();
    Tensor<T> dx;
    if (want_dx) dx = Tensor<T>::matrix(N, s.input_dim());

    switch (s.kind) {
        case LayerKind::dense: {
            const auto& W = layer.params[0];
            param_grads.assign({Tensor<T>(W.shape()), Tensor<T>(layer.params[1].shape())});
            const auto dY = as_matrix(dy.data(), N, s.n_out);
            as_matrix(param_grads[0].data(), s.n_out, s.n_in).noalias() =
                dY.transpose() * as_matrix(cache.input.data(), N, s.n_in);
            as_matrix(param_grads[1].data(), 1, s.n_out).noalias() = dY.colwise().sum();
            if (want_dx)
                as_matrix(dx.data(), N, s.n_in).noalias() = dY * as_matrix(W.data(), s.n_out, s.n_in);
            break;
        }
        case LayerKind::conv1d: {
            const std::size_t F = s.n_filters, Q = s.conv_out_positions(), KC = s.filter_width * s.channels;
            param_grads.assign({Tensor<T>(layer.params[0].shape()), Tensor<T>(layer.params[1].shape())});
            RowMatrix<T> dR(static_cast<Eigen::Index>(N * Q), static_cast<Eigen::Index>(F));
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t f = 0; f < F; ++f) {
                    const T* g = dy.data() + n * F * Q + f * Q;
                    for (std::size_t q = 0; q < Q; ++q) dR.data()[(n * Q + q) * F + f] = g[q];
                }
            const auto cols = as_matrix(cache.columns.data(), N * Q, KC);
            as_matrix(param_grads[0].data(), F, KC).noalias() = dR.transpose() * cols;
            as_matrix(param_grads[1].data(), 1, F).noalias() = dR.colwise().sum();
            if (want_dx) {
                RowMatrix<T> dcols = dR * as_matrix(layer.params[0].data(), F, KC);
                detail::col2im_add(s, dcols.data(), N, dx);
            }
            break;
        }
        case LayerKind::maxpool1d: {
            param_grads.clear();
            if (want_dx)
                for (std::size_t o = 0; o < dy.size(); ++o) dx[cache.argmax[o]] += dy[o];
            break;
        }
        case LayerKind::activation: {
            param_grads.clear();
            if (!want_dx) break;
            switch (s.fn) {
                case ActivationFn::sigmoid:
                    for (std::size_t i = 0; i < dy.size(); ++i) {
                        const T y = cache.output[i];
                        dx[i] = dy[i] * y * (T(1) - y);
                    }
                    break;
                case ActivationFn::relu:
                    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = cache.input[i] > T(0) ? dy[i] : T(0);
                    break;
                case ActivationFn::linear:
                    dx = dy;
                    break;
            }
            break;
        }
        case LayerKind::softmax: {
            param_grads.clear();
            if (!want_dx) break;
            for (std::size_t n = 0; n < N; ++n) {
                const auto y = cache.output.row(n);
                const auto g = dy.row(n);
                double dot = 0.0;
                for (std::size_t k = 0; k < y.size(); ++k) dot += static_cast<double>(g[k]) * y[k];
                auto d = dx.row(n);
                for (std::size_t k = 0; k < y.size(); ++k) d[k] = static_cast<T>(y[k] * (g[k] - dot));
            }
            break;
        }
    }
    return dx;
}

}  // namespace artic::nn
