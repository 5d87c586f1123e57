#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "artic/config.hpp"
#include "artic/nn/network.hpp"
#include "artic/training/dataset.hpp"

namespace artic::training {

struct TrainConfig {
    double initial_lr = 0.008;
    std::size_t constant_lr_epochs = 4;
    std::size_t batch_size = 256;
    double halving_threshold = 0.005;  // relative CV improvement
    double stop_threshold = 0.001;     // relative CV improvement
    std::size_t max_epochs = 20;
    std::uint64_t rng_seed = 1;
    /// After the first halving, halve every epoch instead of only on a
    /// small improvement.
    bool halve_every_epoch = false;

    void validate() const;
};

/// Reads initial_lr, constant_lr_epochs, batch_size, halving_threshold,
/// stop_threshold, max_epochs, seed and halve_every_epoch.
void apply_config(TrainConfig& cfg, KeyValueConfig& kv);

enum class Phase : std::uint32_t { constant = 0, halving = 1, stopped = 2 };
std::string_view to_string(Phase p);

struct TrainState {
    std::size_t epoch = 0;  // completed epochs == cv_error_history.size()
    double lr = 0.0;        // rate for the next epoch
    std::vector<double> cv_error_history;
    std::size_t best_epoch = 0;  // 1-based; 0 before the first epoch
    std::string best_checkpoint;
    Phase phase = Phase::constant;

    bool operator==(const TrainState&) const = default;
};

TrainState initial_state(const TrainConfig& cfg);

/// Records the CV error of the epoch just finished and sets the rate for the
/// next one. The first constant_lr_epochs epochs always run at the initial
/// rate. From then on a relative improvement below halving_threshold halves
/// the rate and enters the halving phase; in the halving phase an increase
/// or an improvement below stop_threshold stops training. The best epoch is
/// the first minimum of the history. Throws StateError once stopped.
TrainState schedule_update(const TrainState& state, double new_cv_error, const TrainConfig& cfg);

enum class Objective { cross_entropy, mse };

struct EvalResult {
    double loss = 0.0;
    double error = 0.0;  // frame error rate (cross-entropy) or MSE
};

/// One pass over the data in an order shuffled from seed + epoch, one SGD
/// step per mini-batch; the last batch may be short. Returns the
/// frame-weighted mean training loss.
double train_epoch(nn::Network<float>& net, const FrameDataset& data, Objective objective, double lr,
                   std::size_t batch_size, std::uint64_t seed, std::size_t epoch);

EvalResult evaluate(const nn::Network<float>& net, const FrameDataset& data, Objective objective);

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double cv_error = 0.0;
};

/// JSON line {"epoch":..,"lr":..,"train_loss":..,"cv_error":..}.
std::string to_json_line(const EpochRecord& r);

/// Current network, schedule state and the best network so far.
struct TrainCheckpoint {
    nn::Network<float> net;
    TrainState state;
    nn::Network<float> best;

    bool operator==(const TrainCheckpoint&) const = default;
};

TrainCheckpoint start_checkpoint(const nn::Network<float>& net, const TrainConfig& cfg);

using EpochCallback = std::function<void(const EpochRecord&, const TrainCheckpoint&)>;

/// Runs epochs from the checkpoint until the schedule stops or max_epochs
/// epochs have completed. The returned checkpoint's `best` is the network
/// with the lowest CV error.
TrainCheckpoint train(TrainCheckpoint start, const FrameDataset& train_set, const FrameDataset& cv_set,
                      Objective objective, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Training checkpoint: NNG1 current network | "TRS1" state record | NNG1 best network.
// TRS1: u64 epoch | f64 lr | u32 phase | u64 best_epoch | u32 len | ref bytes
//       | u64 n | n x f64 history
void write_train_state(std::ostream& os, const TrainState& state);
TrainState read_train_state(std::istream& is);

void write_checkpoint(std::ostream& os, const TrainCheckpoint& ckpt);
TrainCheckpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const TrainCheckpoint& ckpt);
TrainCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace artic::training
