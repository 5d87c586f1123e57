#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "artic/dsp/types.hpp"

namespace artic::dsp {

inline constexpr double kLogFloor = 1e-10;
inline constexpr double kStdFloor = 1e-8;

struct FrameConfig {
    double window = 0.025;  // seconds
    double shift = 0.010;   // seconds
};

/// Number of analysis frames: floor((len - win) / shift) + 1.
/// Throws LengthError when the waveform is shorter than one window.
std::size_t frame_count(std::size_t n_samples, int sample_rate, const FrameConfig& cfg = {});

/// Centre frequencies (Hz) of the mel triangles used by logmel_filterbank.
std::vector<double> mel_band_centers(std::size_t n_bands, int sample_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Log mel filterbank energies: Hamming window, 512-point FFT at 16 kHz
/// (next power of two >= window otherwise), power spectrum, triangular mel
/// filters spanning 0 .. Nyquist, log(max(e, 1e-10)).
FeatureMatrix logmel_filterbank(const Waveform& wave, std::size_t n_bands = 40,
                                const FrameConfig& cfg = {});

/// Appends delta and delta-delta streams computed by +-2 frame regression
/// with edge replication. Input must have a single stream and no context.
FeatureMatrix append_deltas(const FeatureMatrix& features);

/// Normalized modulation coefficients.
///
/// Mel-spaced bank of 4th-order band-pass filters (two cascaded biquads),
/// half-wave rectification followed by a 30 Hz low-pass gives the AM
/// envelope of each subband. Per frame, the mean squared envelope of each
/// band is divided by the utterance-mean subband power, compressed with a
/// 1/15 power law (after flooring at 1e-10) and DCT-II'd to n_coeffs.
FeatureMatrix nmc_features(const Waveform& wave, std::size_t n_coeffs = 40,
                           const FrameConfig& cfg = {});

/// Per-dimension mean and population standard deviation.
struct ZStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool empty() const { return mean.empty(); }
    bool operator==(const ZStats&) const = default;
};

/// Accumulates statistics over many matrices (e.g. a training split).
class ZStatsAccumulator {
public:
    void add(const FeatureMatrix& f);
    ZStats finish() const;

private:
    std::vector<double> sum_;
    std::vector<double> sum_sq_;
    std::size_t count_ = 0;
};

ZStats compute_zstats(const FeatureMatrix& f);

/// Applies (x - mean) / max(std, 1e-8) with the given statistics.
FeatureMatrix apply_zstats(const FeatureMatrix& f, const ZStats& stats);

/// Without stats: normalizes with the matrix's own statistics and returns
/// them. With stats: applies them unchanged (no refit).
std::pair<FeatureMatrix, ZStats> z_normalize(const FeatureMatrix& f,
                                             const std::optional<ZStats>& stats = std::nullopt);

struct SpliceSpec {
    std::size_t left = 8;
    std::size_t right = 8;

    std::size_t width() const { return left + right + 1; }
};

/// Row t of the result is f[t-left] ... f[t+right] concatenated, with the
/// first/last frame replicated past the edges.
FeatureMatrix splice_context(const FeatureMatrix& f, const SpliceSpec& spec = {});

}  // namespace artic::dsp
