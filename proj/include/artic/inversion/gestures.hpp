#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "artic/dsp/features.hpp"
#include "artic/dsp/types.hpp"

namespace artic::inversion {

/// Tract variables, in channel order.
enum class Tv : std::size_t {
    lip_aperture = 0,
    lip_protrusion,
    tongue_body_location,
    tongue_body_degree,
    tongue_tip_location,
    tongue_tip_degree,
    velum,
    glottis,
};

inline constexpr std::size_t kNumTvs = 8;
inline constexpr double kNeutralTarget = 0.5;
inline constexpr double kTvTimeConstant = 0.040;  // seconds
inline constexpr std::int32_t kSilenceClass = 0;

std::string_view tv_name(std::size_t channel);

/// T x 8 matrix of tract variables in [0, 1]; FeatureMatrix with 8 bands.
using TvTrajectory = dsp::FeatureMatrix;

/// A gestural unit: full 8-channel target configuration and canonical length.
struct GestureUnit {
    std::int32_t class_id = 0;  // >= 1; 0 is silence
    std::string token;
    std::array<double, kNumTvs> targets{};
    double duration = 0.1;  // seconds
};

struct Word {
    std::string name;
    std::vector<std::size_t> units;  // indices into Vocabulary::units
};

/// Fixed gestural lexicon. Words are sequences of units; no word repeats a
/// unit back to back, so frame labels collapse to the unit sequence.
struct Vocabulary {
    std::vector<GestureUnit> units;
    std::vector<Word> words;

    std::size_t n_classes() const { return units.size() + 1; }
    /// "sil" for class 0, then each unit's token.
    std::vector<std::string> class_tokens() const;
};

/// Deterministic lexicon of n_words words built from n_units units.
/// Unit targets are drawn from {0.1, 0.3, 0.5, 0.7, 0.9} such that any two
/// units differ by at least 0.4 on at least three channels.
Vocabulary make_vocabulary(std::size_t n_words = 30, std::size_t n_units = 41);

/// The 30-word, 42-class lexicon used throughout.
const Vocabulary& default_vocabulary();

struct Gesture {
    double onset = 0.0;
    double offset = 0.0;
    double target = kNeutralTarget;
    std::int32_t class_id = 0;
};

/// Timed unit occupying [onset, offset); drives the frame labels.
struct UnitSegment {
    double onset = 0.0;
    double offset = 0.0;
    std::int32_t class_id = 0;
};

struct GesturalScore {
    double duration = 0.0;
    std::array<std::vector<Gesture>, kNumTvs> tracks;
    std::vector<UnitSegment> segments;

    bool operator==(const GesturalScore&) const = default;
};

inline bool operator==(const Gesture& a, const Gesture& b) {
    return a.onset == b.onset && a.offset == b.offset && a.target == b.target && a.class_id == b.class_id;
}
inline bool operator==(const UnitSegment& a, const UnitSegment& b) {
    return a.onset == b.onset && a.offset == b.offset && a.class_id == b.class_id;
}

struct ScoredUtterance {
    GesturalScore score;
    std::vector<std::string> transcript;
};

inline constexpr double kEdgeSilence = 0.05;  // seconds before and after the word

/// Picks one word from the vocabulary and lays out its units. Severity s
/// stretches each unit by (1 + s), pulls targets toward 0.5 by s/2 and
/// jitters unit onsets with sigma = 20 s ms.
ScoredUtterance generate_gestural_score(std::uint64_t seed, const Vocabulary& vocab, double severity);

/// Frames covered by a score: floor((duration - window) / shift) + 1. TV
/// frame t is sampled at the centre of analysis window t.
std::size_t score_frame_count(const GesturalScore& score, const dsp::FrameConfig& frames = {});

/// Piecewise targets smoothed by a critically damped second-order response
/// (two cascaded first-order sections with a 40 ms time constant), clamped
/// to [0, 1]. Channels without an active gesture rest at 0.5.
TvTrajectory render_tvs(const GesturalScore& score, const dsp::FrameConfig& frames = {});

/// Class id of the unit active at each frame centre, silence elsewhere.
std::vector<std::int32_t> frame_labels(const GesturalScore& score, const dsp::FrameConfig& frames = {});

}  // namespace artic::inversion
