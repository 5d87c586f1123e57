#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "artic/dsp/noise.hpp"
#include "artic/dsp/types.hpp"
#include "artic/inversion/gestures.hpp"

namespace artic::inversion {

enum class Split { train, cv, test };
enum class Condition { clean, noisy };

std::string_view to_string(Split s);
std::string_view to_string(Condition c);
Split parse_split(std::string_view s);
Condition parse_condition(std::string_view s);

struct Utterance {
    std::string id;             // "u00042-clean"
    std::size_t source = 0;     // index of the underlying clean utterance
    Split split = Split::train;
    Condition condition = Condition::clean;
    double severity = 0.0;
    std::optional<dsp::NoiseType> noise;
    double snr_db = 0.0;        // meaningful for noisy entries only
    dsp::Waveform audio;
    TvTrajectory tvs;
    std::vector<std::int32_t> labels;
    std::vector<std::string> transcript;
};

struct CorpusConfig {
    std::size_t n_utts = 100;
    std::pair<double, double> severity_range{0.0, 1.0};
    std::vector<dsp::NoiseType> noise_bank{std::begin(dsp::kAllNoiseTypes), std::end(dsp::kAllNoiseTypes)};
    std::pair<double, double> snr_range{10.0, 80.0};
    std::uint64_t seed = 1;
    std::size_t threads = 1;
};

/// Clean and noisy copies of every utterance, clean entries first within
/// each pair. Both copies share the TVs and labels.
struct ParallelCorpus {
    std::vector<Utterance> entries;
    std::size_t n_classes = 0;
    std::vector<std::string> class_tokens;

    std::vector<const Utterance*> select(Split split, std::optional<Condition> condition = std::nullopt) const;
};

/// Split sizes for n utterances: roughly 2% cv and 10% test, at least one
/// each, the rest train. Utterance i goes to train, cv, test in index order.
struct SplitSizes {
    std::size_t train = 0, cv = 0, test = 0;
};
SplitSizes split_sizes(std::size_t n_utts);

/// Utterance i is generated from seed + i alone, so the result does not
/// depend on the thread count.
ParallelCorpus build_parallel_corpus(const CorpusConfig& cfg, const Vocabulary& vocab = default_vocabulary());

/// One utterance pair (clean, noisy) as generated for index i.
std::pair<Utterance, Utterance> generate_utterance_pair(const CorpusConfig& cfg, const Vocabulary& vocab,
                                                        std::size_t index);

/// Writes wav/, tv/ and labels/ files plus manifest.jsonl and corpus.json.
void write_corpus(const ParallelCorpus& corpus, const std::filesystem::path& dir);
ParallelCorpus read_corpus(const std::filesystem::path& dir);

}  // namespace artic::inversion
