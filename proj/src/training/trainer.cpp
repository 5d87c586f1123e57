#include "artic/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

#include "artic/binary_io.hpp"
#include "artic/error.hpp"
#include "artic/nn/checkpoint.hpp"
#include "artic/nn/loss.hpp"

namespace artic::training {

namespace {

constexpr std::size_t kEvalBatch = 1024;

nn::LossResult<float> batch_loss(const nn::Tensor<float>& out, const Batch& b, Objective objective) {
    return objective == Objective::cross_entropy ? nn::softmax_cross_entropy(out, std::span(b.labels))
                                                 : nn::mse_loss(out, b.targets);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(initial_lr > 0.0)) throw ConfigError("initial_lr must be positive");
    if (!(halving_threshold >= 0.0) || !(stop_threshold >= 0.0)) throw ConfigError("thresholds must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

void apply_config(TrainConfig& cfg, KeyValueConfig& kv) {
    if (auto v = kv.take_real("initial_lr")) cfg.initial_lr = *v;
    if (auto v = kv.take_count("constant_lr_epochs")) cfg.constant_lr_epochs = *v;
    if (auto v = kv.take_count("batch_size")) cfg.batch_size = *v;
    if (auto v = kv.take_real("halving_threshold")) cfg.halving_threshold = *v;
    if (auto v = kv.take_real("stop_threshold")) cfg.stop_threshold = *v;
    if (auto v = kv.take_count("max_epochs")) cfg.max_epochs = *v;
    if (auto v = kv.take_count("seed")) cfg.rng_seed = *v;
    if (auto v = kv.take_bool("halve_every_epoch")) cfg.halve_every_epoch = *v;
    cfg.validate();
}

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::constant: return "constant";
        case Phase::halving: return "halving";
        case Phase::stopped: return "stopped";
    }
    return "?";
}

TrainState initial_state(const TrainConfig& cfg) {
    cfg.validate();
    TrainState s;
    s.lr = cfg.initial_lr;
    return s;
}

TrainState schedule_update(const TrainState& state, double new_cv_error, const TrainConfig& cfg) {
    if (state.phase == Phase::stopped) throw StateError("schedule already stopped");
    TrainState next = state;
    next.epoch = state.epoch + 1;
    next.cv_error_history.push_back(new_cv_error);
    if (state.best_epoch == 0 || new_cv_error < state.cv_error_history[state.best_epoch - 1])
        next.best_epoch = next.epoch;

    if (next.epoch < cfg.constant_lr_epochs || state.cv_error_history.empty()) return next;

    const double prev = state.cv_error_history.back();
    const double improvement = prev > 0.0 ? (prev - new_cv_error) / prev : 0.0;
    if (state.phase == Phase::constant) {
        if (improvement < cfg.halving_threshold) {
            next.lr = state.lr / 2.0;
            next.phase = Phase::halving;
        }
        return next;
    }
    if (new_cv_error > prev || improvement < cfg.stop_threshold) {
        next.phase = Phase::stopped;
        return next;
    }
    if (cfg.halve_every_epoch || improvement < cfg.halving_threshold) next.lr = state.lr / 2.0;
    return next;
}

double train_epoch(nn::Network<float>& net, const FrameDataset& data, Objective objective, double lr,
                   std::size_t batch_size, std::uint64_t seed, std::size_t epoch) {
    if (data.empty()) throw ConfigError("cannot train on an empty dataset");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (objective == Objective::cross_entropy && !data.has_labels())
        throw ConfigError("cross-entropy training needs class labels");

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed + epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }

    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
        const std::size_t end = std::min(order.size(), begin + batch_size);
        const Batch b = data.gather(std::span(order).subspan(begin, end - begin));
        const std::size_t n = b.size();
        auto fwd = nn::forward(net, std::span<const nn::Tensor<float>>(b.inputs), nn::Mode::train);
        auto loss = batch_loss(fwd.output, b, objective);
        if (!std::isfinite(loss.loss)) throw DivergenceError("non-finite training loss");
        total += loss.loss * static_cast<double>(n);
        // Loss gradients are per-batch means; the SGD step divides by n.
        for (auto& g : loss.grad.values()) g *= static_cast<float>(n);
        const auto grads = nn::backward(net, fwd.tape, loss.grad, false);
        nn::sgd_step(net, grads.gradients, lr, n);
    }
    return total / static_cast<double>(order.size());
}

EvalResult evaluate(const nn::Network<float>& net, const FrameDataset& data, Objective objective) {
    if (data.empty()) throw ConfigError("cannot evaluate on an empty dataset");
    double loss = 0.0, wrong = 0.0, sq = 0.0;
    for (std::size_t begin = 0; begin < data.size(); begin += kEvalBatch) {
        const Batch b = data.gather_range(begin, std::min(data.size(), begin + kEvalBatch));
        const auto out = nn::forward(net, std::span<const nn::Tensor<float>>(b.inputs), nn::Mode::eval).output;
        const auto l = batch_loss(out, b, objective);
        loss += l.loss * static_cast<double>(b.size());
        if (objective == Objective::cross_entropy) {
            for (std::size_t r = 0; r < b.size(); ++r) {
                const auto row = out.row(r);
                const auto arg = std::max_element(row.begin(), row.end()) - row.begin();
                if (arg != b.labels[r]) wrong += 1.0;
            }
        } else {
            sq += l.loss * static_cast<double>(b.size());
        }
    }
    const double n = static_cast<double>(data.size());
    EvalResult r;
    r.loss = loss / n;
    r.error = objective == Objective::cross_entropy ? wrong / n : sq / n;
    return r;
}

std::string to_json_line(const EpochRecord& r) {
    return nlohmann::json{{"epoch", r.epoch}, {"lr", r.lr}, {"train_loss", r.train_loss}, {"cv_error", r.cv_error}}
        .dump();
}

TrainCheckpoint start_checkpoint(const nn::Network<float>& net, const TrainConfig& cfg) {
    return TrainCheckpoint{net, initial_state(cfg), net};
}

TrainCheckpoint train(TrainCheckpoint ckpt, const FrameDataset& train_set, const FrameDataset& cv_set,
                      Objective objective, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    while (ckpt.state.phase != Phase::stopped && ckpt.state.epoch < cfg.max_epochs) {
        EpochRecord rec;
        rec.epoch = ckpt.state.epoch + 1;
        rec.lr = ckpt.state.lr;
        rec.train_loss = train_epoch(ckpt.net, train_set, objective, rec.lr, cfg.batch_size, cfg.rng_seed, rec.epoch);
        rec.cv_error = evaluate(ckpt.net, cv_set, objective).error;
        ckpt.state = schedule_update(ckpt.state, rec.cv_error, cfg);
        if (ckpt.state.best_epoch == rec.epoch) {
            ckpt.best = ckpt.net;
            ckpt.state.best_checkpoint = "epoch-" + std::to_string(rec.epoch);
        }
        if (on_epoch) on_epoch(rec, ckpt);
    }
    return ckpt;
}

void write_train_state(std::ostream& os, const TrainState& s) {
    binio::put_magic(os, "TRS1");
    binio::put<std::uint64_t>(os, s.epoch);
    binio::put<double>(os, s.lr);
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.phase));
    binio::put<std::uint64_t>(os, s.best_epoch);
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.best_checkpoint.size()));
    os.write(s.best_checkpoint.data(), static_cast<std::streamsize>(s.best_checkpoint.size()));
    binio::put<std::uint64_t>(os, s.cv_error_history.size());
    binio::put_span<double>(os, s.cv_error_history);
}

TrainState read_train_state(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4)) throw CorruptFileError("truncated train state");
    const std::string tag(magic, 4);
    if (tag != "TRS1") {
        if (tag.rfind("TRS", 0) == 0) throw FormatError("unsupported train state version '" + tag + "'");
        throw CorruptFileError("missing train state record");
    }
    TrainState s;
    s.epoch = binio::get<std::uint64_t>(is, "epoch");
    s.lr = binio::get<double>(is, "learning rate");
    const auto phase = binio::get<std::uint32_t>(is, "phase");
    if (phase > 2) throw CorruptFileError("bad schedule phase");
    s.phase = static_cast<Phase>(phase);
    s.best_epoch = binio::get<std::uint64_t>(is, "best epoch");
    const auto len = binio::get<std::uint32_t>(is, "checkpoint ref length");
    if (len > 4096) throw CorruptFileError("checkpoint ref too long");
    s.best_checkpoint.resize(len);
    binio::get_span<char>(is, std::span(s.best_checkpoint.data(), len), "checkpoint ref");
    const auto n = binio::get<std::uint64_t>(is, "history length");
    if (n != s.epoch) throw CorruptFileError("CV history length does not match epoch count");
    s.cv_error_history.resize(n);
    binio::get_span<double>(is, s.cv_error_history, "CV history");
    if (s.best_epoch > s.epoch) throw CorruptFileError("best epoch beyond history");
    return s;
}

void write_checkpoint(std::ostream& os, const TrainCheckpoint& ckpt) {
    nn::write_network(os, ckpt.net);
    write_train_state(os, ckpt.state);
    nn::write_network(os, ckpt.best);
}

TrainCheckpoint read_checkpoint(std::istream& is) {
    TrainCheckpoint c;
    c.net = nn::read_network<float>(is);
    c.state = read_train_state(is);
    c.best = nn::read_network<float>(is);
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const TrainCheckpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint " + path.string());
    write_checkpoint(os, ckpt);
    if (!os) throw IoError("error writing checkpoint " + path.string());
}

TrainCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint " + path.string());
    TrainCheckpoint c = read_checkpoint(is);
    if (is.peek() != std::char_traits<char>::eof()) throw CorruptFileError("trailing bytes in checkpoint");
    return c;
}

}  // namespace artic::training
