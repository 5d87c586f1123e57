#include "artic/dsp/feature_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "artic/binary_io.hpp"
#include "artic/error.hpp"

namespace artic::dsp {

void write_feature_matrix(std::ostream& os, const FeatureMatrix& f) {
    binio::put_magic(os, "FMX1");
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.frames()));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.dim()));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.layout().n_bands));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.layout().n_streams));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(f.layout().context_width));
    binio::put<double>(os, f.frame_shift());
    std::vector<float> payload(f.data().begin(), f.data().end());
    binio::put_span<float>(os, payload);
}

FeatureMatrix read_feature_matrix(std::istream& is) {
    if (!binio::check_magic(is, "FMX1")) throw FormatError("bad FMX1 magic");
    const auto t = binio::get<std::uint32_t>(is, "FMX1 frame count");
    const auto d = binio::get<std::uint32_t>(is, "FMX1 dimension");
    FeatureLayout layout;
    layout.n_bands = binio::get<std::uint32_t>(is, "FMX1 layout");
    layout.n_streams = binio::get<std::uint32_t>(is, "FMX1 layout");
    layout.context_width = binio::get<std::uint32_t>(is, "FMX1 layout");
    const auto shift = binio::get<double>(is, "FMX1 frame shift");
    if (layout.dim() != d) throw CorruptFileError("FMX1 layout does not match dimension");
    if (!std::isfinite(shift) || shift <= 0.0) throw CorruptFileError("FMX1 frame shift invalid");

    std::vector<float> payload(static_cast<std::size_t>(t) * d);
    binio::get_span<float>(is, payload, "FMX1 payload");
    FeatureMatrix f(t, layout, shift);
    std::copy(payload.begin(), payload.end(), f.data().begin());
    return f;
}

void save_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    write_feature_matrix(os, f);
    if (!os) throw IoError("write failed: " + path.string());
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_feature_matrix(is);
}

}  // namespace artic::dsp
