#pragma once

#include <filesystem>

#include "artic/dsp/types.hpp"

namespace artic::dsp {

/// Reads a RIFF/WAVE file holding 16-bit little-endian mono PCM.
/// Throws FormatError on a malformed or non-16-bit file and
/// UnsupportedError on multichannel audio.
Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit mono PCM. Samples are clamped to [-1, 1] and scaled by 32768
/// (with +1.0 saturating at 32767), so values that are multiples of 1/32768
/// survive a write/read round trip exactly.
void write_wav(const std::filesystem::path& path, const Waveform& wave);

}  // namespace artic::dsp
