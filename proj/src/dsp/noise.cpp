#include "artic/dsp/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "artic/error.hpp"

namespace artic::dsp {

namespace {

constexpr double kCrossfadeSeconds = 0.050;
constexpr double kNoiseRms = 0.1;

std::vector<double> tile_noise(const Waveform& noise, std::size_t n) {
    std::vector<double> out;
    out.reserve(n + noise.size());
    if (noise.size() >= n) {
        out.assign(noise.samples.begin(), noise.samples.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }
    const std::size_t fade = std::min(static_cast<std::size_t>(kCrossfadeSeconds * noise.sample_rate),
                                      noise.size() / 2);
    out.assign(noise.samples.begin(), noise.samples.end());
    while (out.size() < n) {
        // Overlap the tail of what we have with the head of the next copy.
        const std::size_t base = out.size() - fade;
        for (std::size_t i = 0; i < fade; ++i) {
            const double a = (static_cast<double>(i) + 1.0) / (static_cast<double>(fade) + 1.0);
            out[base + i] = (1.0 - a) * out[base + i] + a * noise.samples[i];
        }
        out.insert(out.end(), noise.samples.begin() + static_cast<std::ptrdiff_t>(fade), noise.samples.end());
    }
    out.resize(n);
    return out;
}

void normalize_rms(std::vector<float>& x, double target) {
    double p = 0.0;
    for (float v : x) p += static_cast<double>(v) * v;
    p /= static_cast<double>(std::max<std::size_t>(x.size(), 1));
    if (p <= 0.0) return;
    const double g = target / std::sqrt(p);
    for (float& v : x) v = static_cast<float>(v * g);
}

// Paul Kellet's economy pink filter.
std::vector<float> pink(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    double b0 = 0, b1 = 0, b2 = 0;
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = gauss(rng);
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        out[i] = static_cast<float>(b0 + b1 + b2 + w * 0.1848);
    }
    return out;
}

}  // namespace

double signal_power(const Waveform& w) {
    if (w.samples.empty()) return 0.0;
    double p = 0.0;
    for (float v : w.samples) p += static_cast<double>(v) * v;
    return p / static_cast<double>(w.samples.size());
}

NoiseMix mix_noise_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
    if (!std::isfinite(snr_db)) throw ConfigError("SNR must be finite");
    if (noise.samples.empty()) throw DegenerateNoiseError("noise waveform is empty");
    const std::size_t n = clean.size();
    const std::vector<double> tiled = tile_noise(noise, n);

    double noise_power = 0.0;
    for (double v : tiled) noise_power += v * v;
    noise_power /= static_cast<double>(std::max<std::size_t>(n, 1));
    if (!(noise_power > 0.0)) throw DegenerateNoiseError("noise has zero power");

    const double clean_power = signal_power(clean);
    NoiseMix result;
    result.noise_scale = std::sqrt(clean_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
    result.mixed.sample_rate = clean.sample_rate;
    result.mixed.samples.resize(n);
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = clean.samples[i] + result.noise_scale * tiled[i];
        if (v > 1.0 || v < -1.0) ++clipped;
        result.mixed.samples[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
    result.clip_fraction = n ? static_cast<double>(clipped) / static_cast<double>(n) : 0.0;
    return result;
}

std::string_view noise_name(NoiseType type) {
    switch (type) {
        case NoiseType::white: return "white";
        case NoiseType::pink: return "pink";
        case NoiseType::babble: return "babble";
        case NoiseType::hum: return "hum";
    }
    return "unknown";
}

Waveform generate_noise(NoiseType type, std::size_t n_samples, std::uint64_t seed, int sample_rate) {
    std::mt19937_64 rng(seed);
    Waveform w;
    w.sample_rate = sample_rate;
    const double fs = sample_rate;
    switch (type) {
        case NoiseType::white: {
            std::normal_distribution<double> gauss(0.0, 1.0);
            w.samples.resize(n_samples);
            for (auto& v : w.samples) v = static_cast<float>(gauss(rng));
            break;
        }
        case NoiseType::pink:
            w.samples = pink(n_samples, rng);
            break;
        case NoiseType::babble: {
            w.samples = pink(n_samples, rng);
            const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
            for (std::size_t i = 0; i < n_samples; ++i)
                w.samples[i] = static_cast<float>(
                    w.samples[i] * (1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * 4.0 * i / fs + phase)));
            break;
        }
        case NoiseType::hum: {
            std::normal_distribution<double> gauss(0.0, 0.05);
            const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
            w.samples.resize(n_samples);
            for (std::size_t i = 0; i < n_samples; ++i) {
                const double t = 2.0 * std::numbers::pi * 50.0 * i / fs + phase;
                w.samples[i] = static_cast<float>(std::sin(t) + 0.5 * std::sin(3.0 * t) +
                                                  0.25 * std::sin(5.0 * t) + gauss(rng));
            }
            break;
        }
    }
    normalize_rms(w.samples, kNoiseRms);
    return w;
}

}  // namespace artic::dsp
