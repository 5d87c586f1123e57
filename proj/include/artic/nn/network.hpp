#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "artic/nn/layers.hpp"

namespace artic::nn {

/// How the raw network output is turned into predictions.
enum class Head : std::uint32_t { softmax = 0, linear = 1 };

/// Widths of the stream outputs that are concatenated before the trunk.
struct FusionLayout {
    std::vector<std::size_t> stream_dims;
    std::size_t fused_dims = 0;

    // Two-stream naming used by the fused architectures.
    std::size_t freq_stream_dims() const { return stream_dims.empty() ? 0 : stream_dims[0]; }
    std::size_t time_stream_dims() const { return stream_dims.size() < 2 ? 0 : stream_dims[1]; }
};

/// A branch that reads one network input and runs its own layers.
/// An empty layer list passes the input through unchanged.
template <typename T>
struct Stream {
    std::size_t input = 0;
    std::size_t input_dim = 0;
    std::vector<Layer<T>> layers;

    std::size_t output_dim() const { return layers.empty() ? input_dim : layers.back().spec.output_dim(); }
    bool operator==(const Stream&) const = default;
};

/// Streams run in parallel, their outputs are concatenated (fused) in stream
/// order and fed to the shared trunk. A single-stream network is an ordinary
/// feed-forward chain.
template <typename T>
class Network {
public:
    std::vector<Stream<T>> streams;
    std::vector<Layer<T>> trunk;
    Head head = Head::softmax;

    std::size_t n_inputs() const {
        std::size_t n = 0;
        for (const auto& s : streams) n = std::max(n, s.input + 1);
        return n;
    }

    /// Declared width of each network input.
    std::vector<std::size_t> input_dims() const {
        std::vector<std::size_t> dims(n_inputs(), 0);
        for (const auto& s : streams) dims[s.input] = s.input_dim;
        return dims;
    }

    FusionLayout fusion_layout() const {
        FusionLayout f;
        for (const auto& s : streams) {
            f.stream_dims.push_back(s.output_dim());
            f.fused_dims += s.output_dim();
        }
        return f;
    }

    std::size_t output_dim() const {
        return trunk.empty() ? fusion_layout().fused_dims : trunk.back().spec.output_dim();
    }

    /// Parameter tensors in canonical order: streams first, then trunk.
    std::vector<Tensor<T>*> parameters() {
        std::vector<Tensor<T>*> out;
        for (auto& s : streams)
            for (auto& l : s.layers)
                for (auto& p : l.params) out.push_back(&p);
        for (auto& l : trunk)
            for (auto& p : l.params) out.push_back(&p);
        return out;
    }
    std::vector<const Tensor<T>*> parameters() const {
        std::vector<const Tensor<T>*> out;
        for (const auto& s : streams)
            for (const auto& l : s.layers)
                for (const auto& p : l.params) out.push_back(&p);
        for (const auto& l : trunk)
            for (const auto& p : l.params) out.push_back(&p);
        return out;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto* p : parameters()) n += p->size();
        return n;
    }

    /// Checks that every layer boundary chains; throws ConfigError otherwise.
    void validate() const {
        if (streams.empty()) throw ConfigError("network has no input streams");
        for (std::size_t si = 0; si < streams.size(); ++si) {
            std::size_t width = streams[si].input_dim;
            if (width == 0) throw ConfigError("stream " + std::to_string(si) + " has zero input width");
            for (std::size_t li = 0; li < streams[si].layers.size(); ++li) {
                const auto& spec = streams[si].layers[li].spec;
                if (spec.input_dim() != width)
                    throw ConfigError("stream " + std::to_string(si) + " layer " + std::to_string(li) +
                                      " expects " + std::to_string(spec.input_dim()) + " inputs, previous gives " +
                                      std::to_string(width));
                width = spec.output_dim();
            }
        }
        std::size_t width = fusion_layout().fused_dims;
        for (std::size_t li = 0; li < trunk.size(); ++li) {
            const auto& spec = trunk[li].spec;
            if (spec.input_dim() != width)
                throw ConfigError("trunk layer " + std::to_string(li) + " expects " +
                                  std::to_string(spec.input_dim()) + " inputs, previous gives " +
                                  std::to_string(width));
            width = spec.output_dim();
        }
    }

    bool operator==(const Network&) const = default;
};

/// One gradient tensor per parameter tensor, in Network::parameters() order.
template <typename T>
using Gradients = std::vector<Tensor<T>>;

/// Activations recorded by a training-mode forward pass.
template <typename T>
struct Tape {
    std::vector<std::vector<LayerCache<T>>> streams;
    std::vector<LayerCache<T>> trunk;
    std::size_t batch = 0;
    bool valid = false;
};

enum class Mode { train, eval };

template <typename T>
struct ForwardResult {
    Tensor<T> output;
    Tape<T> tape;  // empty in eval mode
};

template <typename T>
struct BackwardResult {
    Gradients<T> gradients;
    std::vector<Tensor<T>> input_gradients;  // per network input, when requested
};

/// Per-frame concatenation, first operand's maps first.
template <typename T>
Tensor<T> fuse_feature_maps(const Tensor<T>& freq_maps, const Tensor<T>& time_maps,
                            FusionLayout* layout = nullptr) {
    if (freq_maps.rows() != time_maps.rows())
        throw DimensionError("fusion frame-count mismatch: " + std::to_string(freq_maps.rows()) + " vs " +
                             std::to_string(time_maps.rows()));
    const std::size_t N = freq_maps.rows();
    const std::size_t a = freq_maps.empty() ? 0 : freq_maps.cols();
    const std::size_t b = time_maps.empty() ? 0 : time_maps.cols();
    Tensor<T> out = Tensor<T>::matrix(N, a + b);
    for (std::size_t n = 0; n < N; ++n) {
        auto dst = out.row(n);
        if (a) std::copy_n(freq_maps.data() + n * a, a, dst.begin());
        if (b) std::copy_n(time_maps.data() + n * b, b, dst.begin() + static_cast<std::ptrdiff_t>(a));
    }
    if (layout) *layout = FusionLayout{{a, b}, a + b};
    return out;
}

namespace detail {

template <typename T>
Tensor<T> run_chain(const std::vector<Layer<T>>& layers, Tensor<T> x, std::vector<LayerCache<T>>* caches,
                    std::size_t& layer_index) {
    if (caches) caches->resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i)
        x = layer_forward(layers[i], x, caches ? &(*caches)[i] : nullptr, layer_index++);
    return x;
}

template <typename T>
Tensor<T> concat_streams(const std::vector<Tensor<T>>& outs) {
    if (outs.size() == 1) return outs.front();
    const std::size_t N = outs.front().rows();
    std::size_t total = 0;
    for (const auto& o : outs) total += o.cols();
    Tensor<T> fused = Tensor<T>::matrix(N, total);
    for (std::size_t n = 0; n < N; ++n) {
        std::size_t off = 0;
        for (const auto& o : outs) {
            std::copy_n(o.data() + n * o.cols(), o.cols(), fused.data() + n * total + off);
            off += o.cols();
        }
    }
    return fused;
}

}  // namespace detail

/// Forward pass over a batch. `inputs[i]` is (frames x input_dims()[i]).
/// Returns the pre-head output (logits for classifiers); train mode also
/// returns the activations needed by backward().
template <typename T>
ForwardResult<T> forward(const Network<T>& net, std::span<const Tensor<T>> inputs, Mode mode) {
    if (inputs.size() < net.n_inputs())
        throw DimensionError("network expects " + std::to_string(net.n_inputs()) + " inputs, got " +
                             std::to_string(inputs.size()));
    const std::size_t N = inputs.front().rows();
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (inputs[i].rows() != N)
            throw DimensionError("input " + std::to_string(i) + " has " + std::to_string(inputs[i].rows()) +
                                 " frames, expected " + std::to_string(N));

    ForwardResult<T> result;
    const bool train = mode == Mode::train;
    if (train) result.tape.streams.resize(net.streams.size());

    std::size_t layer_index = 0;
    std::vector<Tensor<T>> outs;
    outs.reserve(net.streams.size());
    for (std::size_t si = 0; si < net.streams.size(); ++si) {
        const auto& s = net.streams[si];
        const Tensor<T>& x = inputs[s.input];
        if (x.rank() != 2 || x.cols() != s.input_dim)
            throw DimensionError("stream " + std::to_string(si) + " input width " + std::to_string(x.cols()) +
                                 " does not match declared " + std::to_string(s.input_dim));
        outs.push_back(detail::run_chain(s.layers, x, train ? &result.tape.streams[si] : nullptr, layer_index));
    }
    result.output = detail::run_chain(net.trunk, detail::concat_streams(outs),
                                      train ? &result.tape.trunk : nullptr, layer_index);
    if (train) {
        result.tape.batch = N;
        result.tape.valid = true;
    }
    return result;
}

template <typename T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& input) {
    return forward(net, std::span<const Tensor<T>>(&input, 1), Mode::eval).output;
}

/// Row-wise softmax in double precision, stored back as T.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
    Tensor<T> p = logits;
    for (std::size_t n = 0; n < logits.rows(); ++n) {
        const auto x = logits.row(n);
        auto y = p.row(n);
        const T m = *std::max_element(x.begin(), x.end());
        double z = 0.0;
        for (T v : x) z += std::exp(static_cast<double>(v - m));
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = static_cast<T>(std::exp(static_cast<double>(x[k] - m)) / z);
    }
    return p;
}

/// Eval-mode forward followed by the head (softmax posteriors or identity).
template <typename T>
Tensor<T> predict(const Network<T>& net, std::span<const Tensor<T>> inputs) {
    Tensor<T> out = forward(net, inputs, Mode::eval).output;
    return net.head == Head::softmax ? softmax_rows(out) : out;
}

/// Back-propagates the gradient of the loss w.r.t. the pre-head output.
/// Throws StateError when the tape does not come from a train-mode forward.
template <typename T>
BackwardResult<T> backward(const Network<T>& net, const Tape<T>& tape, const Tensor<T>& loss_grad,
                           bool want_input_grads = false) {
    if (!tape.valid || tape.trunk.size() != net.trunk.size() || tape.streams.size() != net.streams.size())
        throw StateError("backward called without cached activations from a train-mode forward");
    if (loss_grad.rows() != tape.batch || loss_grad.cols() != net.output_dim())
        throw DimensionError("loss gradient shape does not match network output");

    std::vector<Gradients<T>> trunk_grads(net.trunk.size());
    std::vector<std::vector<Gradients<T>>> stream_grads(net.streams.size());

    Tensor<T> g = loss_grad;
    for (std::size_t i = net.trunk.size(); i-- > 0;)
        g = layer_backward(net.trunk[i], tape.trunk[i], g, trunk_grads[i], true);

    BackwardResult<T> result;
    if (want_input_grads) {
        result.input_gradients.resize(net.n_inputs());
        const auto dims = net.input_dims();
        for (std::size_t i = 0; i < dims.size(); ++i)
            result.input_gradients[i] = Tensor<T>::matrix(tape.batch, dims[i]);
    }

    std::size_t offset = 0;
    for (std::size_t si = 0; si < net.streams.size(); ++si) {
        const auto& s = net.streams[si];
        const std::size_t w = s.output_dim();
        Tensor<T> gs = Tensor<T>::matrix(tape.batch, w);
        const std::size_t fused = g.cols();
        for (std::size_t n = 0; n < tape.batch; ++n)
            std::copy_n(g.data() + n * fused + offset, w, gs.data() + n * w);
        offset += w;

        stream_grads[si].resize(s.layers.size());
        for (std::size_t i = s.layers.size(); i-- > 0;) {
            const bool need_dx = i > 0 || want_input_grads;
            gs = layer_backward(s.layers[i], tape.streams[si][i], gs, stream_grads[si][i], need_dx);
        }
        if (want_input_grads) {
            auto& dst = result.input_gradients[s.input];
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gs[k];
        }
    }

    for (auto& sg : stream_grads)
        for (auto& lg : sg)
            for (auto& t : lg) result.gradients.push_back(std::move(t));
    for (auto& lg : trunk_grads)
        for (auto& t : lg) result.gradients.push_back(std::move(t));
    return result;
}

/// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
template <typename T>
void initialize(Network<T>& net, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto init_layer = [&rng](Layer<T>& l) {
        std::size_t fan_in = 0, fan_out = 0;
        if (l.spec.kind == LayerKind::dense) {
            fan_in = l.spec.n_in;
            fan_out = l.spec.n_out;
        } else if (l.spec.kind == LayerKind::conv1d) {
            fan_in = l.spec.filter_width * l.spec.channels;
            fan_out = l.spec.filter_width * l.spec.n_filters;
        } else {
            return;
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& w : l.params[0].values()) w = static_cast<T>(dist(rng));
        l.params[1].fill(T(0));
    };
    for (auto& s : net.streams)
        for (auto& l : s.layers) init_layer(l);
    for (auto& l : net.trunk) init_layer(l);
}

/// Copies parameter values between networks of identical topology.
template <typename To, typename From>
void copy_parameters(Network<To>& dst, const Network<From>& src) {
    auto d = dst.parameters();
    auto s = src.parameters();
    if (d.size() != s.size()) throw DimensionError("parameter lists differ in length");
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i]->shape() != s[i]->shape()) throw DimensionError("parameter shapes differ");
        std::transform(s[i]->values().begin(), s[i]->values().end(), d[i]->values().begin(),
                       [](From v) { return static_cast<To>(v); });
    }
}

/// Same topology, different scalar type (parameters converted).
template <typename To, typename From>
Network<To> convert_network(const Network<From>& src) {
    Network<To> out;
    out.head = src.head;
    for (const auto& s : src.streams) {
        Stream<To> t;
        t.input = s.input;
        t.input_dim = s.input_dim;
        for (const auto& l : s.layers) t.layers.emplace_back(l.spec);
        out.streams.push_back(std::move(t));
    }
    for (const auto& l : src.trunk) out.trunk.emplace_back(l.spec);
    copy_parameters(out, src);
    return out;
}

}  // namespace artic::nn
