#pragma once

#include <filesystem>
#include <iosfwd>

#include "artic/dsp/types.hpp"

namespace artic::dsp {

// FMX1 layout, all little-endian:
//   "FMX1" | u32 T | u32 D | u32 n_bands | u32 n_streams | u32 context_width
//   | f64 frame_shift | T*D f32 row-major
void write_feature_matrix(std::ostream& os, const FeatureMatrix& f);
FeatureMatrix read_feature_matrix(std::istream& is);

void save_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& f);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);

}  // namespace artic::dsp
