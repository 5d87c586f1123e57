#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "artic/binary_io.hpp"
#include "artic/nn/network.hpp"

namespace artic::nn {

// NNG1 network record, little-endian:
//   "NNG1" | u32 head | u32 n_streams
//   per stream: u32 input | u32 input_dim | u32 n_layers | layer records
//   u32 n_trunk_layers | layer records
//   u32 n_param_tensors | per tensor: u64 count | count x f32
// A layer record is u32 kind followed by seven u32 fields whose meaning
// depends on the kind (see write_layer_spec).

namespace detail {

inline constexpr std::size_t kLayerFields = 7;

inline void write_layer_spec(std::ostream& os, const LayerSpec& s) {
    std::uint32_t f[kLayerFields] = {};
    switch (s.kind) {
        case LayerKind::dense:
            f[0] = static_cast<std::uint32_t>(s.n_in);
            f[1] = static_cast<std::uint32_t>(s.n_out);
            break;
        case LayerKind::conv1d:
            f[0] = static_cast<std::uint32_t>(s.axis);
            f[1] = static_cast<std::uint32_t>(s.positions);
            f[2] = static_cast<std::uint32_t>(s.channels);
            f[3] = static_cast<std::uint32_t>(s.n_filters);
            f[4] = static_cast<std::uint32_t>(s.filter_width);
            break;
        case LayerKind::maxpool1d:
            f[0] = static_cast<std::uint32_t>(s.channels);
            f[1] = static_cast<std::uint32_t>(s.positions);
            f[2] = static_cast<std::uint32_t>(s.pool_size);
            break;
        case LayerKind::activation:
            f[0] = static_cast<std::uint32_t>(s.fn);
            f[1] = static_cast<std::uint32_t>(s.width);
            break;
        case LayerKind::softmax:
            f[0] = static_cast<std::uint32_t>(s.width);
            break;
    }
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.kind));
    for (auto v : f) binio::put(os, v);
}

inline LayerSpec read_layer_spec(std::istream& is) {
    const auto kind = binio::get<std::uint32_t>(is, "layer kind");
    std::uint32_t f[kLayerFields];
    for (auto& v : f) v = binio::get<std::uint32_t>(is, "layer record");
    switch (kind) {
        case static_cast<std::uint32_t>(LayerKind::dense): return LayerSpec::dense(f[0], f[1]);
        case static_cast<std::uint32_t>(LayerKind::conv1d):
            if (f[0] > 1) throw CorruptFileError("bad convolution axis in checkpoint");
            return LayerSpec::conv1d(static_cast<ConvAxis>(f[0]), f[1], f[2], f[3], f[4]);
        case static_cast<std::uint32_t>(LayerKind::maxpool1d): return LayerSpec::maxpool1d(f[0], f[1], f[2]);
        case static_cast<std::uint32_t>(LayerKind::activation):
            if (f[0] > 2) throw CorruptFileError("bad activation in checkpoint");
            return LayerSpec::activation(static_cast<ActivationFn>(f[0]), f[1]);
        case static_cast<std::uint32_t>(LayerKind::softmax): return LayerSpec::softmax(f[0]);
        default: throw CorruptFileError("unknown layer kind " + std::to_string(kind) + " in checkpoint");
    }
}

template <typename T>
std::vector<Layer<T>> read_layers(std::istream& is) {
    const auto n = binio::get<std::uint32_t>(is, "layer count");
    std::vector<Layer<T>> layers;
    for (std::uint32_t i = 0; i < n; ++i) {
        try {
            layers.emplace_back(read_layer_spec(is));
        } catch (const ConfigError& e) {
            throw CorruptFileError(std::string("invalid layer in checkpoint: ") + e.what());
        }
    }
    return layers;
}

}  // namespace detail

template <typename T>
void write_network(std::ostream& os, const Network<T>& net) {
    binio::put_magic(os, "NNG1");
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(net.head));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(net.streams.size()));
    for (const auto& s : net.streams) {
        binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.input));
        binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.input_dim));
        binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.layers.size()));
        for (const auto& l : s.layers) detail::write_layer_spec(os, l.spec);
    }
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(net.trunk.size()));
    for (const auto& l : net.trunk) detail::write_layer_spec(os, l.spec);

    const auto params = net.parameters();
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
    std::vector<float> buf;
    for (const auto* p : params) {
        binio::put<std::uint64_t>(os, p->size());
        buf.assign(p->values().begin(), p->values().end());
        binio::put_span<float>(os, buf);
    }
}

/// Throws FormatError for a non-checkpoint or other-version file and
/// CorruptFileError for truncated or inconsistent content.
template <typename T>
Network<T> read_network(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4)) throw CorruptFileError("truncated checkpoint header");
    const std::string tag(magic, 4);
    if (tag != "NNG1") {
        if (tag.rfind("NNG", 0) == 0) throw FormatError("unsupported checkpoint version '" + tag + "'");
        throw FormatError("not a network checkpoint");
    }
    Network<T> net;
    const auto head = binio::get<std::uint32_t>(is, "head");
    if (head > 1) throw CorruptFileError("bad head type in checkpoint");
    net.head = static_cast<Head>(head);
    const auto n_streams = binio::get<std::uint32_t>(is, "stream count");
    for (std::uint32_t i = 0; i < n_streams; ++i) {
        Stream<T> s;
        s.input = binio::get<std::uint32_t>(is, "stream input");
        s.input_dim = binio::get<std::uint32_t>(is, "stream input dim");
        s.layers = detail::read_layers<T>(is);
        net.streams.push_back(std::move(s));
    }
    net.trunk = detail::read_layers<T>(is);
    try {
        net.validate();
    } catch (const ConfigError& e) {
        throw CorruptFileError(std::string("inconsistent network in checkpoint: ") + e.what());
    }

    auto params = net.parameters();
    const auto n_params = binio::get<std::uint32_t>(is, "parameter count");
    if (n_params != params.size()) throw CorruptFileError("parameter tensor count does not match layers");
    std::vector<float> buf;
    for (auto* p : params) {
        const auto count = binio::get<std::uint64_t>(is, "tensor size");
        if (count != p->size()) throw CorruptFileError("parameter tensor size does not match layer spec");
        buf.resize(count);
        binio::get_span<float>(is, buf, "parameter data");
        std::transform(buf.begin(), buf.end(), p->values().begin(), [](float v) { return static_cast<T>(v); });
    }
    return net;
}

}  // namespace artic::nn
