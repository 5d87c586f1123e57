#include "artic/pipeline.hpp"

#include <fstream>

#include "json.hpp"

#include "artic/arch/builders.hpp"
#include "artic/binary_io.hpp"
#include "artic/error.hpp"

namespace artic::pipeline {

using nlohmann::json;

namespace {

json stats_to_json(const dsp::ZStats& s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }

dsp::ZStats stats_from_json(const json& j) {
    dsp::ZStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    if (s.mean.size() != s.stddev.size()) throw CorruptFileError("statistics vectors differ in length");
    return s;
}

json conv_to_json(const arch::ConvParams& c) {
    return {{"filters", c.n_filters}, {"width", c.filter_width}, {"pool", c.pool_size}};
}

arch::ConvParams conv_from_json(const json& j) {
    return {j.at("filters").get<std::size_t>(), j.at("width").get<std::size_t>(), j.at("pool").get<std::size_t>()};
}

json spec_to_json(const arch::ArchSpec& s) {
    json j = {{"arch", arch::to_string(s.kind)},
              {"n_hidden_layers", s.n_hidden_layers},
              {"hidden_width", s.hidden_width},
              {"n_classes", s.n_classes},
              {"acoustic", {s.acoustic.bands, s.acoustic.streams, s.acoustic.context}},
              {"freq_conv", conv_to_json(s.freq_conv)},
              {"time_conv", conv_to_json(s.time_conv)},
              {"activation", nn::to_string(s.activation)}};
    if (s.tv) j["tv"] = {s.tv->tvs, s.tv->context};
    return j;
}

arch::ArchSpec spec_from_json(const json& j) {
    arch::ArchSpec s;
    s.kind = arch::parse_arch_kind(j.at("arch").get<std::string>());
    s.n_hidden_layers = j.at("n_hidden_layers").get<std::size_t>();
    s.hidden_width = j.at("hidden_width").get<std::size_t>();
    s.n_classes = j.at("n_classes").get<std::size_t>();
    const auto a = j.at("acoustic").get<std::vector<std::size_t>>();
    if (a.size() != 3) throw CorruptFileError("bad acoustic layout");
    s.acoustic = {a[0], a[1], a[2]};
    s.freq_conv = conv_from_json(j.at("freq_conv"));
    s.time_conv = conv_from_json(j.at("time_conv"));
    const auto act = j.at("activation").get<std::string>();
    s.activation = act == "relu" ? nn::ActivationFn::relu : nn::ActivationFn::sigmoid;
    if (j.contains("tv")) {
        const auto t = j.at("tv").get<std::vector<std::size_t>>();
        if (t.size() != 2) throw CorruptFileError("bad TV layout");
        s.tv = arch::TvLayout{t[0], t[1]};
    }
    return s;
}

dsp::SpliceSpec splice_for(std::size_t context) {
    if (context % 2 == 0) throw ConfigError("context width must be odd");
    return {context / 2, context / 2};
}

}  // namespace

dsp::FeatureMatrix acoustic_features(const dsp::Waveform& wave) {
    if (wave.sample_rate != dsp::kDefaultSampleRate)
        throw UnsupportedError("resampling is not supported; input is " + std::to_string(wave.sample_rate) + " Hz");
    return dsp::append_deltas(dsp::logmel_filterbank(wave, 40));
}

std::string_view to_string(TvSource s) { return s == TvSource::ground_truth ? "ground-truth" : "inverted"; }

TvSource parse_tv_source(std::string_view s) {
    if (s == "ground-truth" || s == "gt") return TvSource::ground_truth;
    if (s == "inverted") return TvSource::inverted;
    throw ConfigError("TV source must be ground-truth or inverted, got '" + std::string(s) + "'");
}

Features extract_features(const std::vector<const inversion::Utterance*>& utts, const arch::ArchSpec& spec,
                          TvSource tv_source, const inversion::InversionModel* inverter) {
    const bool want_tvs = spec.kind == arch::ArchKind::fcnn;
    if (want_tvs && tv_source == TvSource::inverted && !inverter)
        throw ConfigError("inverted TVs requested but no inversion model given");
    if (spec.acoustic.bands != 40 || spec.acoustic.streams != 3)
        throw ConfigError("acoustic front-end produces 40 bands x 3 streams");

    Features f;
    f.inputs.resize(want_tvs ? 2 : 1);
    f.inputs[arch::kAcousticInput].splice = splice_for(spec.acoustic.context);
    if (want_tvs) {
        f.inputs[arch::kTvInput].splice = splice_for(spec.tv->context);
        if (spec.tv->tvs != inversion::kNumTvs) throw ConfigError("TV layout must have 8 channels");
    }
    for (const auto* u : utts) {
        dsp::FeatureMatrix ac = acoustic_features(u->audio);
        if (ac.frames() != u->labels.size())
            throw LengthError(u->id + ": " + std::to_string(ac.frames()) + " acoustic frames for " +
                              std::to_string(u->labels.size()) + " labels");
        f.inputs[arch::kAcousticInput].utterances.push_back(std::move(ac));
        if (want_tvs) {
            dsp::FeatureMatrix tv = tv_source == TvSource::ground_truth ? u->tvs : inversion::invert(*inverter, u->audio);
            if (tv.frames() != u->labels.size()) throw LengthError(u->id + ": TV frame count mismatch");
            f.inputs[arch::kTvInput].utterances.push_back(std::move(tv));
        }
        f.labels.push_back(u->labels);
        f.ids.push_back(u->id);
        f.transcripts.push_back(u->transcript);
    }
    return f;
}

std::vector<dsp::ZStats> fit_stats(const Features& f) {
    std::vector<dsp::ZStats> out;
    for (const auto& in : f.inputs) {
        dsp::ZStatsAccumulator acc;
        for (const auto& m : in.utterances) acc.add(m);
        out.push_back(acc.finish());
    }
    return out;
}

void apply_stats(Features& f, const std::vector<dsp::ZStats>& stats) {
    if (stats.size() != f.inputs.size()) throw DimensionError("one set of statistics per input expected");
    for (std::size_t i = 0; i < stats.size(); ++i)
        for (auto& m : f.inputs[i].utterances) m = dsp::apply_zstats(m, stats[i]);
}

training::FrameDataset to_dataset(const Features& f) { return training::FrameDataset(f.inputs, f.labels); }

AcousticModel train_acoustic_model(const inversion::ParallelCorpus& corpus, const arch::ArchSpec& spec,
                                   TvSource tv_source, const training::TrainConfig& cfg,
                                   const inversion::InversionModel* inverter,
                                   const training::EpochCallback& on_epoch) {
    spec.validate();
    if (spec.n_classes < corpus.n_classes)
        throw ConfigError("architecture has " + std::to_string(spec.n_classes) + " outputs but the corpus has " +
                          std::to_string(corpus.n_classes) + " classes");
    AcousticModel model;
    model.spec = spec;
    model.tv_source = tv_source;
    model.class_tokens = corpus.class_tokens;

    Features train_f = extract_features(corpus.select(inversion::Split::train), spec, tv_source, inverter);
    Features cv_f = extract_features(corpus.select(inversion::Split::cv), spec, tv_source, inverter);
    if (train_f.ids.empty() || cv_f.ids.empty()) throw ConfigError("corpus has an empty train or cv split");
    model.stats = fit_stats(train_f);
    apply_stats(train_f, model.stats);
    apply_stats(cv_f, model.stats);

    auto net = arch::build<float>(spec);
    nn::initialize(net, cfg.rng_seed);
    model.checkpoint = training::train(training::start_checkpoint(net, cfg), to_dataset(train_f), to_dataset(cv_f),
                                       training::Objective::cross_entropy, cfg, on_epoch);
    return model;
}

EvalReport evaluate_acoustic_model(const AcousticModel& model, const std::vector<const inversion::Utterance*>& utts,
                                   const inversion::InversionModel* inverter) {
    Features f = extract_features(utts, model.spec, model.tv_source, inverter);
    apply_stats(f, model.stats);
    const auto& net = model.checkpoint.best;

    EvalReport r;
    std::size_t correct = 0;
    for (std::size_t u = 0; u < f.ids.size(); ++u) {
        std::vector<training::InputStream> one;
        for (const auto& in : f.inputs) one.push_back({{in.utterances[u]}, in.splice});
        const training::FrameDataset data(std::move(one), std::vector<std::vector<std::int32_t>>{f.labels[u]});
        const auto batch = data.gather_range(0, data.size());
        const auto post = nn::predict(net, std::span<const nn::Tensor<float>>(batch.inputs));
        for (std::size_t t = 0; t < post.rows(); ++t) {
            const auto row = post.row(t);
            if (std::max_element(row.begin(), row.end()) - row.begin() == batch.labels[t]) ++correct;
        }
        r.n_frames += post.rows();
        const auto hyp = eval::greedy_decode(post, model.class_tokens);
        const auto ref = eval::collapse_labels(f.labels[u], model.class_tokens);
        if (!ref.empty()) r.wer += eval::levenshtein_wer(ref, hyp);
        r.hypotheses[f.ids[u]] = hyp;
        r.references[f.ids[u]] = ref;
    }
    r.n_utterances = f.ids.size();
    r.frame_accuracy = r.n_frames ? static_cast<double>(correct) / static_cast<double>(r.n_frames) : 0.0;
    return r;
}

void save_acoustic_model(const std::filesystem::path& path, const AcousticModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write model " + path.string());
    training::write_checkpoint(os, model.checkpoint);
    json j = {{"spec", spec_to_json(model.spec)},
              {"tv_source", to_string(model.tv_source)},
              {"class_tokens", model.class_tokens},
              {"stats", json::array()}};
    for (const auto& s : model.stats) j["stats"].push_back(stats_to_json(s));
    const std::string text = j.dump();
    binio::put_magic(os, "AMD1");
    binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw IoError("error writing model " + path.string());
}

AcousticModel load_acoustic_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model " + path.string());
    AcousticModel m;
    m.checkpoint = training::read_checkpoint(is);
    if (!binio::check_magic(is, "AMD1")) throw CorruptFileError(path.string() + ": missing model metadata");
    const auto len = binio::get<std::uint32_t>(is, "metadata length");
    std::string text(len, '\0');
    binio::get_span<char>(is, std::span(text.data(), len), "metadata");
    try {
        const json j = json::parse(text);
        m.spec = spec_from_json(j.at("spec"));
        m.tv_source = parse_tv_source(j.at("tv_source").get<std::string>());
        m.class_tokens = j.at("class_tokens").get<std::vector<std::string>>();
        for (const auto& s : j.at("stats")) m.stats.push_back(stats_from_json(s));
    } catch (const json::exception& e) {
        throw CorruptFileError(path.string() + ": bad model metadata: " + e.what());
    }
    return m;
}

}  // namespace artic::pipeline
