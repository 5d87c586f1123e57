#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace artic::dsp {

inline constexpr int kDefaultSampleRate = 16000;

/// Mono audio, samples in [-1, 1].
struct Waveform {
    std::vector<float> samples;
    int sample_rate = kDefaultSampleRate;

    std::size_t size() const { return samples.size(); }
    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// How a feature row is composed: D = n_bands * n_streams * context_width.
/// Rows are laid out context-major, then stream, then band, so index
/// (c, s, b) lives at (c * n_streams + s) * n_bands + b.
struct FeatureLayout {
    std::size_t n_bands = 0;
    std::size_t n_streams = 1;
    std::size_t context_width = 1;

    std::size_t dim() const { return n_bands * n_streams * context_width; }
    bool operator==(const FeatureLayout&) const = default;
};

/// Time-major T x D matrix of per-frame features, row-major. Values are held
/// in double precision; the on-disk format stores 32-bit floats.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t n_frames, FeatureLayout layout, double frame_shift);

    std::size_t frames() const { return n_frames_; }
    std::size_t dim() const { return layout_.dim(); }
    const FeatureLayout& layout() const { return layout_; }
    double frame_shift() const { return frame_shift_; }

    double& operator()(std::size_t t, std::size_t d) { return data_[t * dim() + d]; }
    double operator()(std::size_t t, std::size_t d) const { return data_[t * dim() + d]; }

    std::span<double> row(std::size_t t) { return {data_.data() + t * dim(), dim()}; }
    std::span<const double> row(std::size_t t) const { return {data_.data() + t * dim(), dim()}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Keep only the first n frames.
    void truncate(std::size_t n);

    bool all_finite() const;

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t n_frames_ = 0;
    FeatureLayout layout_{};
    double frame_shift_ = 0.01;
    std::vector<double> data_;
};

}  // namespace artic::dsp
