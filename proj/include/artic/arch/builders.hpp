#pragma once

#include <string>
#include <vector>

#include "artic/arch/arch_spec.hpp"
#include "artic/nn/network.hpp"

namespace artic::arch {

/// Network input slots used by every acoustic model.
inline constexpr std::size_t kAcousticInput = 0;
inline constexpr std::size_t kTvInput = 1;

namespace detail {

// conv -> activation -> max-pool over one stream.
template <typename T>
nn::Stream<T> conv_stream(std::size_t input, nn::ConvAxis axis, std::size_t positions, std::size_t channels,
                          const ConvParams& conv, nn::ActivationFn act) {
    nn::Stream<T> s;
    s.input = input;
    s.input_dim = positions * channels;
    const auto c = nn::LayerSpec::conv1d(axis, positions, channels, conv.n_filters, conv.filter_width);
    s.layers.emplace_back(c);
    s.layers.emplace_back(nn::LayerSpec::activation(act, c.output_dim()));
    s.layers.emplace_back(nn::LayerSpec::maxpool1d(conv.n_filters, c.conv_out_positions(), conv.pool_size));
    return s;
}

// Acoustic rows are context-major then stream then band, so with bands as
// positions the (context, stream) pairs form the channel-major channels.
template <typename T>
nn::Stream<T> frequency_stream(const ArchSpec& spec) {
    return conv_stream<T>(kAcousticInput, nn::ConvAxis::frequency, spec.acoustic.bands,
                          spec.acoustic.streams * spec.acoustic.context, spec.freq_conv, spec.activation);
}

template <typename T>
void add_trunk(nn::Network<T>& net, const ArchSpec& spec) {
    std::size_t width = net.fusion_layout().fused_dims;
    for (std::size_t i = 0; i < spec.n_hidden_layers; ++i) {
        net.trunk.emplace_back(nn::LayerSpec::dense(width, spec.hidden_width));
        net.trunk.emplace_back(nn::LayerSpec::activation(spec.activation, spec.hidden_width));
        width = spec.hidden_width;
    }
    net.trunk.emplace_back(nn::LayerSpec::dense(width, spec.n_classes));
    net.head = nn::Head::softmax;
    net.validate();
}

inline void require_kind(const ArchSpec& spec, ArchKind kind) {
    if (spec.kind != kind)
        throw ConfigError("builder for " + std::string(to_string(kind)) + " given a " +
                          std::string(to_string(spec.kind)) + " spec");
    spec.validate();
}

}  // namespace detail

/// Spliced acoustic input straight into the dense stack.
template <typename T>
nn::Network<T> build_dnn(const ArchSpec& spec) {
    detail::require_kind(spec, ArchKind::dnn);
    nn::Network<T> net;
    net.streams.push_back(nn::Stream<T>{kAcousticInput, spec.acoustic.dim(), {}});
    detail::add_trunk(net, spec);
    return net;
}

/// Frequency convolution over bands, then the dense stack.
template <typename T>
nn::Network<T> build_cnn(const ArchSpec& spec) {
    detail::require_kind(spec, ArchKind::cnn);
    nn::Network<T> net;
    net.streams.push_back(detail::frequency_stream<T>(spec));
    detail::add_trunk(net, spec);
    return net;
}

/// Parallel frequency and time convolutions over the same acoustic input.
/// The time stream treats the context frames as positions and every
/// (stream, band) pair as a channel.
template <typename T>
nn::Network<T> build_tfcnn(const ArchSpec& spec) {
    detail::require_kind(spec, ArchKind::tfcnn);
    nn::Network<T> net;
    net.streams.push_back(detail::frequency_stream<T>(spec));
    net.streams.push_back(detail::conv_stream<T>(kAcousticInput, nn::ConvAxis::time, spec.acoustic.context,
                                                 spec.acoustic.streams * spec.acoustic.bands, spec.time_conv,
                                                 spec.activation));
    detail::add_trunk(net, spec);
    return net;
}

/// Frequency convolution on acoustic features and time convolution on the
/// tract variables (input slot 1), feature maps fused before the dense stack.
template <typename T>
nn::Network<T> build_fcnn(const ArchSpec& spec) {
    detail::require_kind(spec, ArchKind::fcnn);
    nn::Network<T> net;
    net.streams.push_back(detail::frequency_stream<T>(spec));
    net.streams.push_back(detail::conv_stream<T>(kTvInput, nn::ConvAxis::time, spec.tv->context, spec.tv->tvs,
                                                 spec.time_conv, spec.activation));
    detail::add_trunk(net, spec);
    return net;
}

template <typename T>
nn::Network<T> build(const ArchSpec& spec) {
    switch (spec.kind) {
        case ArchKind::dnn: return build_dnn<T>(spec);
        case ArchKind::cnn: return build_cnn<T>(spec);
        case ArchKind::tfcnn: return build_tfcnn<T>(spec);
        case ArchKind::fcnn: return build_fcnn<T>(spec);
    }
    throw ConfigError("unknown architecture");
}

/// One row per layer boundary: where it sits, what it is, and its widths.
struct ShapeEntry {
    std::string location;  // "stream0[2]" or "trunk[4]"
    nn::LayerSpec spec;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
};

template <typename T>
std::vector<ShapeEntry> shape_ledger(const nn::Network<T>& net) {
    std::vector<ShapeEntry> out;
    for (std::size_t si = 0; si < net.streams.size(); ++si)
        for (std::size_t li = 0; li < net.streams[si].layers.size(); ++li) {
            const auto& spec = net.streams[si].layers[li].spec;
            out.push_back({"stream" + std::to_string(si) + "[" + std::to_string(li) + "]", spec,
                           spec.input_dim(), spec.output_dim()});
        }
    for (std::size_t li = 0; li < net.trunk.size(); ++li) {
        const auto& spec = net.trunk[li].spec;
        out.push_back({"trunk[" + std::to_string(li) + "]", spec, spec.input_dim(), spec.output_dim()});
    }
    return out;
}

}  // namespace artic::arch
