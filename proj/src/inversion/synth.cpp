#include "artic/inversion/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "artic/error.hpp"

namespace artic::inversion {

namespace {

constexpr std::size_t kControlBlock = 16;

// Two-pole resonator with unity gain at DC.
class Resonator {
public:
    void tune(double freq, double bandwidth, double sample_rate) {
        const double r = std::exp(-std::numbers::pi * bandwidth / sample_rate);
        c_ = -r * r;
        b_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / sample_rate);
        a_ = 1.0 - b_ - c_;
    }
    double step(double x) {
        const double y = a_ * x + b_ * y1_ + c_ * y2_;
        y2_ = y1_;
        y1_ = y;
        return y;
    }

private:
    double a_ = 1.0, b_ = 0.0, c_ = 0.0;
    double y1_ = 0.0, y2_ = 0.0;
};

}  // namespace

dsp::Waveform synthesize_speech_from_tvs(const TvTrajectory& tvs, std::uint64_t seed,
                                         const dsp::FrameConfig& frames, int sample_rate) {
    if (tvs.dim() != kNumTvs)
        throw DimensionError("TV trajectory has " + std::to_string(tvs.dim()) + " channels, expected 8");
    if (tvs.frames() == 0) throw LengthError("empty TV trajectory");
    if (!tvs.all_finite()) throw DimensionError("TV trajectory contains non-finite values");

    const double fs = sample_rate;
    const auto hop = static_cast<std::size_t>(std::lround(frames.shift * fs));
    const auto win = static_cast<std::size_t>(std::lround(frames.window * fs));
    const std::size_t n_frames = tvs.frames();
    const std::size_t n = (n_frames - 1) * hop + win;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Resonator f1, f2, f3, fric, nasal;
    double tilt = 0.0, phase = 0.0;
    std::array<double, kNumTvs> v{};
    dsp::Waveform out;
    out.sample_rate = sample_rate;
    out.samples.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        if (i % kControlBlock == 0) {
            const double pos = (static_cast<double>(i) - win / 2.0) / static_cast<double>(hop);
            const double p = std::clamp(pos, 0.0, static_cast<double>(n_frames - 1));
            const auto t0 = static_cast<std::size_t>(p);
            const std::size_t t1 = std::min(t0 + 1, n_frames - 1);
            const double w = p - static_cast<double>(t0);
            for (std::size_t c = 0; c < kNumTvs; ++c)
                v[c] = std::clamp((1.0 - w) * tvs(t0, c) + w * tvs(t1, c), 0.0, 1.0);

            const double la = v[0], lp = v[1], tbcl = v[2], tbcd = v[3], ttcl = v[4], vel = v[6];
            f1.tune(250.0 + 500.0 * la + 200.0 * tbcd, 80.0 + 100.0 * vel, fs);
            f2.tune(800.0 + 1400.0 * tbcl - 300.0 * lp, 100.0, fs);
            f3.tune(2000.0 + 1000.0 * ttcl - 300.0 * lp, 150.0, fs);
            fric.tune(4500.0, 1500.0, fs);
            nasal.tune(250.0, 60.0, fs);
        }
        const double glo = v[7], ttcd = v[5], vel = v[6], la = v[0];

        phase += kPitchHz / fs;
        double pulse = 0.0;
        if (phase >= 1.0) {
            phase -= 1.0;
            pulse = 1.0;
        }
        tilt = 0.9 * tilt + pulse;
        const double noise = gauss(rng);
        const double source = glo * tilt * 0.3 + (1.0 - glo) * noise * 0.2;

        const double oral = f3.step(f2.step(f1.step(source)));
        const double nasal_out = nasal.step(source);
        const double frication = fric.step(gauss(rng)) * ttcd * ttcd * 0.5;
        const double y = (1.0 - 0.4 * vel) * oral + 0.5 * vel * nasal_out + frication;
        out.samples[i] = static_cast<float>(y * (0.3 + 0.7 * la));
    }

    float peak = 0.0f;
    for (float s : out.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.0f)
        for (float& s : out.samples) s *= 0.9f / peak;
    return out;
}

}  // namespace artic::inversion
