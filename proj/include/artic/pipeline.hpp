#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "artic/arch/arch_spec.hpp"
#include "artic/dsp/features.hpp"
#include "artic/eval/decode.hpp"
#include "artic/inversion/corpus.hpp"
#include "artic/inversion/model.hpp"
#include "artic/training/trainer.hpp"

// Glue between the corpus, the feature front-ends and the acoustic models.
namespace artic::pipeline {

/// 40 log-mel bands with deltas and delta-deltas (T x 120, 3 streams).
dsp::FeatureMatrix acoustic_features(const dsp::Waveform& wave);

enum class TvSource { ground_truth, inverted };
std::string_view to_string(TvSource s);
TvSource parse_tv_source(std::string_view s);

/// Unnormalized per-utterance inputs in network input order.
struct Features {
    std::vector<training::InputStream> inputs;
    std::vector<std::vector<std::int32_t>> labels;
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> transcripts;
};

/// Acoustic input for every model; the TV input as well for fcnn. Inverted
/// TVs need an inversion model (ConfigError otherwise).
Features extract_features(const std::vector<const inversion::Utterance*>& utts, const arch::ArchSpec& spec,
                          TvSource tv_source, const inversion::InversionModel* inverter = nullptr);

std::vector<dsp::ZStats> fit_stats(const Features& f);
void apply_stats(Features& f, const std::vector<dsp::ZStats>& stats);
training::FrameDataset to_dataset(const Features& f);

/// A trained acoustic model and what is needed to run it on new audio.
struct AcousticModel {
    arch::ArchSpec spec;
    TvSource tv_source = TvSource::ground_truth;
    std::vector<dsp::ZStats> stats;
    std::vector<std::string> class_tokens;
    training::TrainCheckpoint checkpoint;
};

/// Builds the architecture, initializes it from cfg.rng_seed and trains on
/// the train split (clean and noisy) with the cv split driving the schedule.
AcousticModel train_acoustic_model(const inversion::ParallelCorpus& corpus, const arch::ArchSpec& spec,
                                   TvSource tv_source, const training::TrainConfig& cfg,
                                   const inversion::InversionModel* inverter = nullptr,
                                   const training::EpochCallback& on_epoch = {});

struct EvalReport {
    std::size_t n_utterances = 0;
    std::size_t n_frames = 0;
    double frame_accuracy = 0.0;
    eval::WerReport wer;
    std::map<std::string, std::vector<std::string>> hypotheses;
    std::map<std::string, std::vector<std::string>> references;
};

/// Frame accuracy of the best network plus token error rate of greedy
/// decoding against the collapsed reference labels.
EvalReport evaluate_acoustic_model(const AcousticModel& model, const std::vector<const inversion::Utterance*>& utts,
                                   const inversion::InversionModel* inverter = nullptr);

/// Model file: training checkpoint followed by "AMD1" | u32 json length | json
/// (architecture, TV source, class tokens, normalization statistics).
void save_acoustic_model(const std::filesystem::path& path, const AcousticModel& model);
AcousticModel load_acoustic_model(const std::filesystem::path& path);

}  // namespace artic::pipeline
