#include "artic/inversion/gestures.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "artic/error.hpp"
#include "artic/seed.hpp"

namespace artic::inversion {

namespace {

constexpr std::uint64_t kVocabularySeed = 0x61727469636c6578ULL;
constexpr double kLevels[] = {0.1, 0.3, 0.5, 0.7, 0.9};
constexpr double kMinUnitLength = 0.02;

bool well_separated(const GestureUnit& a, const GestureUnit& b) {
    int far = 0;
    for (std::size_t v = 0; v < kNumTvs; ++v)
        if (std::abs(a.targets[v] - b.targets[v]) >= 0.4 - 1e-9) ++far;
    return far >= 3;
}

double frame_centre(std::size_t t, const dsp::FrameConfig& frames) {
    return static_cast<double>(t) * frames.shift + frames.window / 2.0;
}

}  // namespace

std::string_view tv_name(std::size_t channel) {
    static constexpr std::string_view names[kNumTvs] = {"LA", "LP", "TBCL", "TBCD", "TTCL", "TTCD", "VEL", "GLO"};
    if (channel >= kNumTvs) throw DimensionError("TV channel " + std::to_string(channel) + " out of range");
    return names[channel];
}

std::vector<std::string> Vocabulary::class_tokens() const {
    std::vector<std::string> out{"sil"};
    for (const auto& u : units) out.push_back(u.token);
    return out;
}

Vocabulary make_vocabulary(std::size_t n_words, std::size_t n_units) {
    if (n_words == 0 || n_units < 2) throw ConfigError("vocabulary needs at least one word and two units");
    std::mt19937_64 rng(kVocabularySeed);
    std::uniform_int_distribution<std::size_t> level(0, std::size(kLevels) - 1);
    std::uniform_int_distribution<int> centi(7, 13);

    Vocabulary vocab;
    std::size_t attempts = 0;
    while (vocab.units.size() < n_units) {
        if (++attempts > 1000000) throw ConfigError("cannot place " + std::to_string(n_units) + " separable units");
        GestureUnit u;
        for (auto& t : u.targets) t = kLevels[level(rng)];
        if (!std::all_of(vocab.units.begin(), vocab.units.end(),
                         [&](const GestureUnit& o) { return well_separated(u, o); }))
            continue;
        u.class_id = static_cast<std::int32_t>(vocab.units.size() + 1);
        u.token = "g" + std::string(u.class_id < 10 ? "0" : "") + std::to_string(u.class_id);
        u.duration = centi(rng) / 100.0;
        vocab.units.push_back(std::move(u));
    }

    std::uniform_int_distribution<std::size_t> length(2, 4);
    std::uniform_int_distribution<std::size_t> pick(0, n_units - 1);
    std::set<std::vector<std::size_t>> seen;
    while (vocab.words.size() < n_words) {
        Word w;
        const std::size_t n = length(rng);
        while (w.units.size() < n) {
            const std::size_t u = pick(rng);
            if (!w.units.empty() && w.units.back() == u) continue;
            w.units.push_back(u);
        }
        if (!seen.insert(w.units).second) continue;
        const std::size_t i = vocab.words.size();
        w.name = "w" + std::string(i < 10 ? "0" : "") + std::to_string(i);
        vocab.words.push_back(std::move(w));
    }
    return vocab;
}

const Vocabulary& default_vocabulary() {
    static const Vocabulary vocab = make_vocabulary();
    return vocab;
}

ScoredUtterance generate_gestural_score(std::uint64_t seed, const Vocabulary& vocab, double severity) {
    if (vocab.words.empty()) throw ConfigError("empty vocabulary");
    if (!(severity >= 0.0 && severity <= 1.0)) throw ConfigError("severity must lie in [0, 1]");
    std::mt19937_64 rng(mix_seed(seed));
    const Word& word = vocab.words[std::uniform_int_distribution<std::size_t>(0, vocab.words.size() - 1)(rng)];
    const std::size_t n = word.units.size();

    std::vector<double> onsets(n);
    double cursor = kEdgeSilence;
    for (std::size_t i = 0; i < n; ++i) {
        onsets[i] = cursor;
        cursor += vocab.units[word.units[i]].duration * (1.0 + severity);
    }
    const double end = cursor;
    if (severity > 0.0) {
        std::normal_distribution<double> jitter(0.0, 0.020 * severity);
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = i == 0 ? kMinUnitLength : onsets[i - 1] + kMinUnitLength;
            const double hi = end - kMinUnitLength * static_cast<double>(n - i);
            onsets[i] = std::clamp(onsets[i] + jitter(rng), lo, std::max(lo, hi));
        }
    }

    ScoredUtterance out;
    out.score.duration = end + kEdgeSilence;
    for (std::size_t i = 0; i < n; ++i) {
        const GestureUnit& u = vocab.units[word.units[i]];
        const double offset = i + 1 < n ? onsets[i + 1] : end;
        out.score.segments.push_back({onsets[i], offset, u.class_id});
        for (std::size_t v = 0; v < kNumTvs; ++v) {
            const double t = u.targets[v];
            out.score.tracks[v].push_back({onsets[i], offset, t + (kNeutralTarget - t) * severity / 2.0, u.class_id});
        }
        out.transcript.push_back(u.token);
    }
    return out;
}

std::size_t score_frame_count(const GesturalScore& score, const dsp::FrameConfig& frames) {
    if (score.duration < frames.window) return 0;
    return static_cast<std::size_t>(std::floor((score.duration - frames.window) / frames.shift + 1e-9)) + 1;
}

TvTrajectory render_tvs(const GesturalScore& score, const dsp::FrameConfig& frames) {
    const std::size_t n_frames = score_frame_count(score, frames);
    TvTrajectory tv(n_frames, dsp::FeatureLayout{kNumTvs, 1, 1}, frames.shift);
    const double alpha = 1.0 - std::exp(-frames.shift / kTvTimeConstant);
    for (std::size_t v = 0; v < kNumTvs; ++v) {
        const auto& track = score.tracks[v];
        auto target_at = [&](double time) {
            for (const auto& g : track)
                if (time >= g.onset && time < g.offset) return g.target;
            return kNeutralTarget;
        };
        double y1 = 0.0, y2 = 0.0;
        for (std::size_t t = 0; t < n_frames; ++t) {
            const double x = target_at(frame_centre(t, frames));
            if (t == 0) y1 = y2 = x;
            y1 += alpha * (x - y1);
            y2 += alpha * (y1 - y2);
            tv(t, v) = std::clamp(y2, 0.0, 1.0);
        }
    }
    return tv;
}

std::vector<std::int32_t> frame_labels(const GesturalScore& score, const dsp::FrameConfig& frames) {
    const std::size_t n_frames = score_frame_count(score, frames);
    std::vector<std::int32_t> labels(n_frames, kSilenceClass);
    for (std::size_t t = 0; t < n_frames; ++t) {
        const double time = frame_centre(t, frames);
        for (const auto& s : score.segments)
            if (time >= s.onset && time < s.offset) {
                labels[t] = s.class_id;
                break;
            }
    }
    return labels;
}

}  // namespace artic::inversion
