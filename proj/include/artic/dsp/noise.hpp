#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "artic/dsp/types.hpp"

namespace artic::dsp {

struct NoiseMix {
    Waveform mixed;
    double noise_scale = 0.0;     // factor applied to the (tiled) noise
    double clip_fraction = 0.0;   // share of output samples clipped to [-1, 1]
};

/// Adds noise scaled so that 10*log10(P_clean / P_noise) equals snr_db.
/// Noise shorter than the clean signal is tiled with a 50 ms linear
/// crossfade between repetitions. Throws DegenerateNoiseError when the noise
/// has zero power.
NoiseMix mix_noise_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);

/// Mean power of the samples.
double signal_power(const Waveform& w);

/// Synthetic noise types standing in for recorded noise corpora.
enum class NoiseType { white, pink, babble, hum };

inline constexpr NoiseType kAllNoiseTypes[] = {NoiseType::white, NoiseType::pink,
                                               NoiseType::babble, NoiseType::hum};

std::string_view noise_name(NoiseType type);

/// Deterministic noise of n samples. "babble" is pink noise amplitude
/// modulated at 4 Hz; "hum" is a 50 Hz tone with odd harmonics plus a
/// little white noise.
Waveform generate_noise(NoiseType type, std::size_t n_samples, std::uint64_t seed,
                        int sample_rate = kDefaultSampleRate);

}  // namespace artic::dsp
