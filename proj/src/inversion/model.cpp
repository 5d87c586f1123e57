#include "artic/inversion/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "artic/binary_io.hpp"
#include "artic/error.hpp"
#include "artic/nn/checkpoint.hpp"

namespace artic::inversion {

namespace {

constexpr std::size_t kInferenceBatch = 1024;

training::InputStream nmc_stream(const std::vector<const Utterance*>& utts, std::size_t n_coeffs,
                                 const dsp::SpliceSpec& splice) {
    training::InputStream s;
    s.splice = splice;
    for (const auto* u : utts) s.utterances.push_back(inversion_features(u->audio, n_coeffs));
    return s;
}

void normalize(training::InputStream& s, const dsp::ZStats& stats) {
    for (auto& m : s.utterances) m = dsp::apply_zstats(m, stats);
}

std::vector<dsp::FeatureMatrix> tv_targets(const std::vector<const Utterance*>& utts) {
    std::vector<dsp::FeatureMatrix> out;
    for (const auto* u : utts) out.push_back(u->tvs);
    return out;
}

}  // namespace

training::TrainConfig default_train_config() {
    training::TrainConfig c;
    c.initial_lr = 0.2;
    c.max_epochs = 30;
    return c;
}

InversionConfig InversionConfig::at_scale(arch::Scale scale) {
    InversionConfig c;
    if (scale == arch::Scale::toy) {
        c.conv.n_filters = arch::toy_width(c.conv.n_filters);
        c.hidden_width = arch::toy_width(c.hidden_width);
    }
    return c;
}

nn::Network<float> build_inversion_network(const InversionConfig& cfg) {
    nn::Network<float> net;
    nn::Stream<float> s;
    s.input = 0;
    s.input_dim = cfg.n_coeffs * cfg.splice.width();
    const auto conv = nn::LayerSpec::conv1d(nn::ConvAxis::frequency, cfg.n_coeffs, cfg.splice.width(),
                                            cfg.conv.n_filters, cfg.conv.filter_width);
    s.layers.emplace_back(conv);
    s.layers.emplace_back(nn::LayerSpec::activation(cfg.activation, conv.output_dim()));
    s.layers.emplace_back(nn::LayerSpec::maxpool1d(cfg.conv.n_filters, conv.conv_out_positions(), cfg.conv.pool_size));
    net.streams.push_back(std::move(s));
    std::size_t width = net.fusion_layout().fused_dims;
    for (std::size_t i = 0; i < cfg.n_hidden_layers; ++i) {
        net.trunk.emplace_back(nn::LayerSpec::dense(width, cfg.hidden_width));
        net.trunk.emplace_back(nn::LayerSpec::activation(cfg.activation, cfg.hidden_width));
        width = cfg.hidden_width;
    }
    net.trunk.emplace_back(nn::LayerSpec::dense(width, kNumTvs));
    net.head = nn::Head::linear;
    net.validate();
    return net;
}

dsp::FeatureMatrix inversion_features(const dsp::Waveform& wave, std::size_t n_coeffs) {
    if (wave.sample_rate != dsp::kDefaultSampleRate)
        throw UnsupportedError("resampling is not supported; input is " + std::to_string(wave.sample_rate) + " Hz");
    return dsp::nmc_features(wave, n_coeffs);
}

InversionModel train_inversion_model(const ParallelCorpus& corpus, const InversionConfig& cfg,
                                     const training::EpochCallback& on_epoch) {
    const auto train_utts = corpus.select(Split::train);
    const auto cv_utts = corpus.select(Split::cv);
    if (train_utts.empty() || cv_utts.empty()) throw ConfigError("inversion training needs train and cv utterances");

    InversionModel model;
    model.splice = cfg.splice;
    model.n_coeffs = cfg.n_coeffs;

    training::InputStream train_in = nmc_stream(train_utts, cfg.n_coeffs, cfg.splice);
    dsp::ZStatsAccumulator acc;
    for (const auto& m : train_in.utterances) acc.add(m);
    model.stats = acc.finish();
    normalize(train_in, model.stats);
    training::InputStream cv_in = nmc_stream(cv_utts, cfg.n_coeffs, cfg.splice);
    normalize(cv_in, model.stats);

    const training::FrameDataset train_set({std::move(train_in)}, tv_targets(train_utts));
    const training::FrameDataset cv_set({std::move(cv_in)}, tv_targets(cv_utts));

    nn::Network<float> net = build_inversion_network(cfg);
    nn::initialize(net, cfg.train.rng_seed);
    auto done = training::train(training::start_checkpoint(net, cfg.train), train_set, cv_set,
                                training::Objective::mse, cfg.train, on_epoch);
    model.net = std::move(done.best);
    return model;
}

TvTrajectory invert(const InversionModel& model, const dsp::Waveform& wave) {
    if (model.stats.empty()) throw StateError("inversion model has no frozen normalization statistics");
    const dsp::FeatureMatrix feats =
        dsp::splice_context(dsp::apply_zstats(inversion_features(wave, model.n_coeffs), model.stats), model.splice);
    const std::size_t T = feats.frames(), D = feats.dim();
    TvTrajectory out(T, dsp::FeatureLayout{kNumTvs, 1, 1}, feats.frame_shift());
    for (std::size_t begin = 0; begin < T; begin += kInferenceBatch) {
        const std::size_t n = std::min(T - begin, kInferenceBatch);
        nn::Tensor<float> x = nn::Tensor<float>::matrix(n, D);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t d = 0; d < D; ++d) x(r, d) = static_cast<float>(feats(begin + r, d));
        const auto y = nn::forward(model.net, x);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t v = 0; v < kNumTvs; ++v) out(begin + r, v) = std::clamp<double>(y(r, v), 0.0, 1.0);
    }
    return out;
}

std::array<double, kNumTvs> tv_correlations(const std::vector<TvTrajectory>& predicted,
                                            const std::vector<TvTrajectory>& truth) {
    if (predicted.size() != truth.size()) throw LengthError("prediction and truth lists differ in length");
    std::array<double, kNumTvs> r{};
    for (std::size_t v = 0; v < kNumTvs; ++v) {
        double n = 0, sx = 0, sy = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            if (predicted[i].frames() != truth[i].frames())
                throw LengthError("prediction and truth differ in frame count");
            for (std::size_t t = 0; t < truth[i].frames(); ++t) {
                sx += predicted[i](t, v);
                sy += truth[i](t, v);
                n += 1;
            }
        }
        if (n == 0) throw LengthError("no frames to correlate");
        const double mx = sx / n, my = sy / n;
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i)
            for (std::size_t t = 0; t < truth[i].frames(); ++t) {
                const double a = predicted[i](t, v) - mx, b = truth[i](t, v) - my;
                sxy += a * b;
                sxx += a * a;
                syy += b * b;
            }
        r[v] = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    }
    return r;
}

void save_inversion_model(const std::filesystem::path& path, const InversionModel& model) {
    if (model.stats.empty()) throw StateError("refusing to save an inversion model without statistics");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    nn::write_network(os, model.net);
    binio::put_magic(os, "INV1");
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(model.n_coeffs));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(model.splice.left));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(model.splice.right));
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(model.stats.mean.size()));
    binio::put_span<double>(os, model.stats.mean);
    binio::put_span<double>(os, model.stats.stddev);
    if (!os) throw IoError("error writing " + path.string());
}

InversionModel load_inversion_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open inversion model " + path.string());
    InversionModel m;
    m.net = nn::read_network<float>(is);
    if (is.peek() == std::char_traits<char>::eof())
        throw StateError(path.string() + " holds no frozen normalization statistics");
    if (!binio::check_magic(is, "INV1")) throw FormatError(path.string() + ": bad inversion record");
    m.n_coeffs = binio::get<std::uint32_t>(is, "coefficient count");
    m.splice.left = binio::get<std::uint32_t>(is, "left context");
    m.splice.right = binio::get<std::uint32_t>(is, "right context");
    const auto d = binio::get<std::uint32_t>(is, "statistics width");
    if (d != m.n_coeffs) throw CorruptFileError("statistics width does not match coefficient count");
    if (m.net.input_dims().front() != m.n_coeffs * m.splice.width())
        throw CorruptFileError("network input width does not match splice");
    m.stats.mean.resize(d);
    m.stats.stddev.resize(d);
    binio::get_span<double>(is, m.stats.mean, "statistics");
    binio::get_span<double>(is, m.stats.stddev, "statistics");
    return m;
}

}  // namespace artic::inversion
