#pragma once

#include <cstdint>

#include "artic/dsp/features.hpp"
#include "artic/dsp/types.hpp"
#include "artic/inversion/gestures.hpp"

namespace artic::inversion {

inline constexpr double kPitchHz = 125.0;

/// Source-filter synthesis driven by tract variables.
///
/// The source mixes a 125 Hz pulse train and white noise, weighted by the
/// glottis channel. Three cascaded resonators follow; their centre
/// frequencies are affine in lip aperture, tongue-body and tongue-tip
/// channels. Tongue-tip constriction adds frication noise, the velum mixes
/// in a low nasal resonance, and lip aperture scales the output level.
/// TVs are interpolated between frame centres. The result is
/// (T - 1) * hop + window samples long, so it frames back to T frames, and
/// is peak-normalized to 0.9.
dsp::Waveform synthesize_speech_from_tvs(const TvTrajectory& tvs, std::uint64_t seed,
                                         const dsp::FrameConfig& frames = {},
                                         int sample_rate = dsp::kDefaultSampleRate);

}  // namespace artic::inversion
