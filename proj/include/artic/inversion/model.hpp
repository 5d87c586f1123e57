#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "artic/arch/arch_spec.hpp"
#include "artic/dsp/features.hpp"
#include "artic/inversion/corpus.hpp"
#include "artic/nn/network.hpp"
#include "artic/training/trainer.hpp"

namespace artic::inversion {

/// MSE gradients are spread over 8 outputs per frame, so the regression
/// net uses a larger step than the classifiers: 0.2, otherwise the shared
/// schedule.
training::TrainConfig default_train_config();

struct InversionConfig {
    std::size_t n_coeffs = 40;
    dsp::SpliceSpec splice{8, 8};
    arch::ConvParams conv{200, 8, 3};
    std::size_t n_hidden_layers = 3;
    std::size_t hidden_width = 2048;
    nn::ActivationFn activation = nn::ActivationFn::relu;
    training::TrainConfig train = default_train_config();

    static InversionConfig at_scale(arch::Scale scale);
};

/// Network plus the input statistics frozen at training time.
struct InversionModel {
    nn::Network<float> net;
    dsp::ZStats stats;
    dsp::SpliceSpec splice{8, 8};
    std::size_t n_coeffs = 40;
};

/// Spliced NMC input -> frequency convolution -> dense stack -> 8 linear outputs.
nn::Network<float> build_inversion_network(const InversionConfig& cfg);

/// NMC features of a waveform, as fed to the network before normalization.
dsp::FeatureMatrix inversion_features(const dsp::Waveform& wave, std::size_t n_coeffs);

/// Trains on every train-split entry (clean and noisy) against the shared
/// TVs, with MSE on the cv split driving the schedule. Returns the best
/// network with the train-split statistics.
InversionModel train_inversion_model(const ParallelCorpus& corpus, const InversionConfig& cfg,
                                     const training::EpochCallback& on_epoch = {});

/// Frame-synchronous TV estimates in [0, 1]. Throws StateError when the
/// model has no statistics and UnsupportedError for a sample rate other
/// than 16 kHz.
TvTrajectory invert(const InversionModel& model, const dsp::Waveform& wave);

/// Pearson correlation per TV channel, pooled over all frames given.
std::array<double, kNumTvs> tv_correlations(const std::vector<TvTrajectory>& predicted,
                                            const std::vector<TvTrajectory>& truth);

// Inversion model file: NNG1 network | "INV1" | u32 n_coeffs | u32 left
//   | u32 right | u32 D | D x f64 mean | D x f64 stddev
void save_inversion_model(const std::filesystem::path& path, const InversionModel& model);
InversionModel load_inversion_model(const std::filesystem::path& path);

}  // namespace artic::inversion
