#include "artic/dsp/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "artic/error.hpp"

namespace artic::dsp {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// FFTW planning is not thread-safe; execution with new-array execute is.
class RealFft {
public:
    explicit RealFft(int n) {
        std::vector<double> in(n);
        std::vector<std::complex<double>> out(n / 2 + 1);
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~RealFft() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    void power(std::vector<double>& in, std::vector<std::complex<double>>& scratch,
               std::vector<double>& out) const {
        fftw_execute_dft_r2c(plan_, in.data(), reinterpret_cast<fftw_complex*>(scratch.data()));
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(scratch[k]);
    }

private:
    fftw_plan plan_;
};

const RealFft& fft_for(int n) {
    static std::mutex cache_mutex;
    static std::map<int, std::unique_ptr<RealFft>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<RealFft>(n);
    return *slot;
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct FrameGeometry {
    std::size_t win = 0;
    std::size_t shift = 0;
    std::size_t count = 0;
};

FrameGeometry frame_geometry(const Waveform& wave, const FrameConfig& cfg) {
    if (wave.sample_rate <= 0) throw ConfigError("sample rate must be positive");
    FrameGeometry g;
    g.win = static_cast<std::size_t>(std::lround(cfg.window * wave.sample_rate));
    g.shift = static_cast<std::size_t>(std::lround(cfg.shift * wave.sample_rate));
    if (g.win == 0 || g.shift == 0) throw ConfigError("window and shift must be at least one sample");
    g.count = frame_count(wave.size(), wave.sample_rate, cfg);
    return g;
}

// Triangular mel weights over FFT bins; rows are bands.
std::vector<std::vector<double>> mel_weights(std::size_t n_bands, int n_fft, int sample_rate) {
    const double mel_hi = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(n_bands + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_bands + 1));

    const std::size_t n_bins = static_cast<std::size_t>(n_fft / 2 + 1);
    std::vector<std::vector<double>> w(n_bands, std::vector<double>(n_bins, 0.0));
    for (std::size_t b = 0; b < n_bands; ++b) {
        const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / n_fft;
            if (f > lo && f <= mid) w[b][k] = (f - lo) / (mid - lo);
            else if (f > mid && f < hi) w[b][k] = (hi - f) / (hi - mid);
        }
    }
    return w;
}

// RBJ cookbook biquad, direct form I, double precision state.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

    static Biquad bandpass(double fc, double q, double fs) {
        const double w0 = 2.0 * std::numbers::pi * fc / fs;
        const double alpha = std::sin(w0) / (2.0 * q);
        const double a0 = 1.0 + alpha;
        Biquad f;
        f.b0 = alpha / a0;
        f.b1 = 0.0;
        f.b2 = -alpha / a0;
        f.a1 = -2.0 * std::cos(w0) / a0;
        f.a2 = (1.0 - alpha) / a0;
        return f;
    }

    static Biquad lowpass(double fc, double q, double fs) {
        const double w0 = 2.0 * std::numbers::pi * fc / fs;
        const double alpha = std::sin(w0) / (2.0 * q);
        const double cw = std::cos(w0);
        const double a0 = 1.0 + alpha;
        Biquad f;
        f.b0 = (1.0 - cw) / 2.0 / a0;
        f.b1 = (1.0 - cw) / a0;
        f.b2 = f.b0;
        f.a1 = -2.0 * cw / a0;
        f.a2 = (1.0 - alpha) / a0;
        return f;
    }

    double operator()(double x) {
        const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        return y;
    }
};

constexpr double kNmcLowHz = 100.0;
constexpr double kNmcHighFraction = 0.4375;  // 7 kHz at 16 kHz
constexpr double kEnvelopeCutoffHz = 30.0;
constexpr double kNmcCompression = 1.0 / 15.0;

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

FeatureMatrix::FeatureMatrix(std::size_t n_frames, FeatureLayout layout, double frame_shift)
    : n_frames_(n_frames), layout_(layout), frame_shift_(frame_shift),
      data_(n_frames * layout.dim(), 0.0) {}

void FeatureMatrix::truncate(std::size_t n) {
    if (n >= n_frames_) return;
    n_frames_ = n;
    data_.resize(n * dim());
}

bool FeatureMatrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::size_t frame_count(std::size_t n_samples, int sample_rate, const FrameConfig& cfg) {
    const auto win = static_cast<std::size_t>(std::lround(cfg.window * sample_rate));
    const auto shift = static_cast<std::size_t>(std::lround(cfg.shift * sample_rate));
    if (shift == 0) throw ConfigError("frame shift must be at least one sample");
    if (n_samples < win)
        throw LengthError("waveform of " + std::to_string(n_samples) +
                          " samples is shorter than one analysis window (" + std::to_string(win) + ")");
    return (n_samples - win) / shift + 1;
}

std::vector<double> mel_band_centers(std::size_t n_bands, int sample_rate) {
    const double mel_hi = hz_to_mel(sample_rate / 2.0);
    std::vector<double> c(n_bands);
    for (std::size_t b = 0; b < n_bands; ++b)
        c[b] = mel_to_hz(mel_hi * static_cast<double>(b + 1) / static_cast<double>(n_bands + 1));
    return c;
}

FeatureMatrix logmel_filterbank(const Waveform& wave, std::size_t n_bands, const FrameConfig& cfg) {
    if (n_bands == 0) throw ConfigError("n_bands must be positive");
    const FrameGeometry g = frame_geometry(wave, cfg);
    const int n_fft = std::max(512, next_pow2(static_cast<int>(g.win)));
    const auto weights = mel_weights(n_bands, n_fft, wave.sample_rate);
    const RealFft& fft = fft_for(n_fft);

    std::vector<double> window(g.win);
    for (std::size_t n = 0; n < g.win; ++n)
        window[n] = g.win > 1
                        ? 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / static_cast<double>(g.win - 1))
                        : 1.0;

    FeatureMatrix out(g.count, FeatureLayout{n_bands, 1, 1}, cfg.shift);
    std::vector<double> frame(n_fft, 0.0);
    std::vector<std::complex<double>> scratch(n_fft / 2 + 1);
    std::vector<double> power(n_fft / 2 + 1);
    for (std::size_t t = 0; t < g.count; ++t) {
        const std::size_t start = t * g.shift;
        for (std::size_t n = 0; n < g.win; ++n) frame[n] = wave.samples[start + n] * window[n];
        std::fill(frame.begin() + static_cast<std::ptrdiff_t>(g.win), frame.end(), 0.0);
        fft.power(frame, scratch, power);
        for (std::size_t b = 0; b < n_bands; ++b) {
            double e = 0.0;
            for (std::size_t k = 0; k < power.size(); ++k) e += weights[b][k] * power[k];
            out(t, b) = std::log(std::max(e, kLogFloor));
        }
    }
    return out;
}

FeatureMatrix append_deltas(const FeatureMatrix& f) {
    const FeatureLayout in = f.layout();
    if (in.n_streams != 1 || in.context_width != 1)
        throw DimensionError("append_deltas expects a single static stream");
    const std::size_t T = f.frames();
    const std::size_t D = f.dim();

    auto regress = [T, D](auto&& get, std::vector<double>& out) {
        const auto last = static_cast<std::ptrdiff_t>(T) - 1;
        auto clampi = [last](std::ptrdiff_t i) { return std::clamp<std::ptrdiff_t>(i, 0, last); };
        for (std::ptrdiff_t t = 0; t <= last; ++t)
            for (std::size_t d = 0; d < D; ++d) {
                double acc = 0.0;
                for (std::ptrdiff_t n = 1; n <= 2; ++n)
                    acc += static_cast<double>(n) * (get(clampi(t + n), d) - get(clampi(t - n), d));
                out[static_cast<std::size_t>(t) * D + d] = acc / 10.0;
            }
    };

    std::vector<double> delta(T * D), delta2(T * D);
    regress([&f](std::ptrdiff_t t, std::size_t d) { return f(static_cast<std::size_t>(t), d); }, delta);
    regress([&delta, D](std::ptrdiff_t t, std::size_t d) { return delta[static_cast<std::size_t>(t) * D + d]; },
            delta2);

    FeatureMatrix out(T, FeatureLayout{D, 3, 1}, f.frame_shift());
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t d = 0; d < D; ++d) {
            out(t, d) = f(t, d);
            out(t, D + d) = delta[t * D + d];
            out(t, 2 * D + d) = delta2[t * D + d];
        }
    return out;
}

FeatureMatrix nmc_features(const Waveform& wave, std::size_t n_coeffs, const FrameConfig& cfg) {
    if (n_coeffs == 0) throw ConfigError("n_coeffs must be positive");
    const FrameGeometry g = frame_geometry(wave, cfg);
    const std::size_t n_bands = n_coeffs;
    const double fs = wave.sample_rate;

    // Mel-spaced centres; each band's bandwidth follows the local centre spacing.
    const double mel_lo = hz_to_mel(kNmcLowHz);
    const double mel_hi = hz_to_mel(kNmcHighFraction * fs);
    std::vector<double> centers(n_bands);
    for (std::size_t b = 0; b < n_bands; ++b)
        centers[b] = n_bands == 1 ? mel_to_hz(0.5 * (mel_lo + mel_hi))
                                  : mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(b) /
                                                           static_cast<double>(n_bands - 1));
    const double mel_step = n_bands > 1 ? (mel_hi - mel_lo) / static_cast<double>(n_bands - 1) : mel_hi - mel_lo;

    std::vector<std::vector<double>> frame_am(g.count, std::vector<double>(n_bands, 0.0));
    double total_power = 0.0;
    const std::size_t n = wave.size();
    for (std::size_t b = 0; b < n_bands; ++b) {
        const double m = hz_to_mel(centers[b]);
        const double bw = mel_to_hz(m + 0.5 * mel_step) - mel_to_hz(m - 0.5 * mel_step);
        const double q = centers[b] / std::max(bw, 1.0);
        Biquad bp1 = Biquad::bandpass(centers[b], q, fs);
        Biquad bp2 = bp1;
        Biquad lp1 = Biquad::lowpass(kEnvelopeCutoffHz, std::numbers::sqrt2 / 2.0, fs);
        Biquad lp2 = lp1;

        std::vector<double> env_sq(n);
        double band_power = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = bp2(bp1(wave.samples[i]));
            band_power += y * y;
            const double e = lp2(lp1(std::max(y, 0.0)));
            env_sq[i] = e * e;
        }
        total_power += band_power / static_cast<double>(std::max<std::size_t>(n, 1));

        for (std::size_t t = 0; t < g.count; ++t) {
            const std::size_t start = t * g.shift;
            double acc = 0.0;
            for (std::size_t k = 0; k < g.win; ++k) acc += env_sq[start + k];
            frame_am[t][b] = acc / static_cast<double>(g.win);
        }
    }
    const double mean_power = total_power / static_cast<double>(n_bands);

    // Orthonormal DCT-II basis.
    std::vector<std::vector<double>> dct(n_coeffs, std::vector<double>(n_bands));
    for (std::size_t k = 0; k < n_coeffs; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_bands));
        for (std::size_t b = 0; b < n_bands; ++b)
            dct[k][b] = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                         (static_cast<double>(b) + 0.5) / static_cast<double>(n_bands));
    }

    FeatureMatrix out(g.count, FeatureLayout{n_coeffs, 1, 1}, cfg.shift);
    std::vector<double> compressed(n_bands);
    for (std::size_t t = 0; t < g.count; ++t) {
        for (std::size_t b = 0; b < n_bands; ++b) {
            const double ratio = mean_power > 0.0 ? frame_am[t][b] / mean_power : 0.0;
            compressed[b] = std::pow(std::max(ratio, kLogFloor), kNmcCompression);
        }
        for (std::size_t k = 0; k < n_coeffs; ++k) {
            double acc = 0.0;
            for (std::size_t b = 0; b < n_bands; ++b) acc += dct[k][b] * compressed[b];
            out(t, k) = acc;
        }
    }
    return out;
}

void ZStatsAccumulator::add(const FeatureMatrix& f) {
    if (sum_.empty()) {
        sum_.assign(f.dim(), 0.0);
        sum_sq_.assign(f.dim(), 0.0);
    } else if (sum_.size() != f.dim()) {
        throw DimensionError("z-stats accumulator dimension mismatch: " + std::to_string(sum_.size()) +
                             " vs " + std::to_string(f.dim()));
    }
    for (std::size_t t = 0; t < f.frames(); ++t)
        for (std::size_t d = 0; d < f.dim(); ++d) {
            const double v = f(t, d);
            sum_[d] += v;
            sum_sq_[d] += v * v;
        }
    count_ += f.frames();
}

ZStats ZStatsAccumulator::finish() const {
    if (count_ == 0) throw StateError("no frames accumulated for z-normalization");
    ZStats s;
    s.mean.resize(sum_.size());
    s.stddev.resize(sum_.size());
    const auto n = static_cast<double>(count_);
    for (std::size_t d = 0; d < sum_.size(); ++d) {
        s.mean[d] = sum_[d] / n;
        s.stddev[d] = std::sqrt(std::max(sum_sq_[d] / n - s.mean[d] * s.mean[d], 0.0));
    }
    return s;
}

ZStats compute_zstats(const FeatureMatrix& f) {
    if (f.frames() == 0) throw StateError("cannot compute z-stats of an empty matrix");
    // Two-pass for accuracy on a single matrix.
    ZStats s;
    s.mean.assign(f.dim(), 0.0);
    s.stddev.assign(f.dim(), 0.0);
    const auto n = static_cast<double>(f.frames());
    for (std::size_t t = 0; t < f.frames(); ++t)
        for (std::size_t d = 0; d < f.dim(); ++d) s.mean[d] += f(t, d);
    for (auto& m : s.mean) m /= n;
    for (std::size_t t = 0; t < f.frames(); ++t)
        for (std::size_t d = 0; d < f.dim(); ++d) {
            const double c = f(t, d) - s.mean[d];
            s.stddev[d] += c * c;
        }
    for (auto& v : s.stddev) v = std::sqrt(v / n);
    return s;
}

FeatureMatrix apply_zstats(const FeatureMatrix& f, const ZStats& stats) {
    if (stats.mean.size() != f.dim() || stats.stddev.size() != f.dim())
        throw DimensionError("z-stats dimension " + std::to_string(stats.mean.size()) +
                             " does not match features " + std::to_string(f.dim()));
    FeatureMatrix out = f;
    for (std::size_t t = 0; t < f.frames(); ++t)
        for (std::size_t d = 0; d < f.dim(); ++d)
            out(t, d) = (f(t, d) - stats.mean[d]) / std::max(stats.stddev[d], kStdFloor);
    return out;
}

std::pair<FeatureMatrix, ZStats> z_normalize(const FeatureMatrix& f, const std::optional<ZStats>& stats) {
    ZStats s = stats ? *stats : compute_zstats(f);
    FeatureMatrix out = apply_zstats(f, s);
    return {std::move(out), std::move(s)};
}

FeatureMatrix splice_context(const FeatureMatrix& f, const SpliceSpec& spec) {
    const std::size_t T = f.frames();
    const std::size_t D = f.dim();
    FeatureLayout layout = f.layout();
    layout.context_width *= spec.width();
    FeatureMatrix out(T, layout, f.frame_shift());
    if (T == 0) return out;
    const auto last = static_cast<std::ptrdiff_t>(T) - 1;
    for (std::ptrdiff_t t = 0; t <= last; ++t) {
        auto dst = out.row(static_cast<std::size_t>(t));
        std::size_t offset = 0;
        for (std::ptrdiff_t c = -static_cast<std::ptrdiff_t>(spec.left);
             c <= static_cast<std::ptrdiff_t>(spec.right); ++c) {
            const auto src = f.row(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t + c, 0, last)));
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
            offset += D;
        }
    }
    return out;
}

}  // namespace artic::dsp
