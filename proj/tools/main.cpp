#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "artic/arch/arch_spec.hpp"
#include "artic/config.hpp"
#include "artic/dsp/feature_io.hpp"
#include "artic/dsp/features.hpp"
#include "artic/dsp/wav.hpp"
#include "artic/error.hpp"
#include "artic/eval/decode.hpp"
#include "artic/inversion/corpus.hpp"
#include "artic/inversion/model.hpp"
#include "artic/pipeline.hpp"
#include "artic/training/trainer.hpp"

namespace fs = std::filesystem;
using namespace artic;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Every key any subcommand understands; a shared config file may carry
// keys for other subcommands, but anything else is a typo.
const std::set<std::string> kKnownKeys = {
    "n_utts", "severity_min", "severity_max", "snr_min", "snr_max", "noise",
    "initial_lr", "constant_lr_epochs", "batch_size", "halving_threshold", "stop_threshold", "max_epochs",
    "seed", "halve_every_epoch",
    "arch", "n_hidden_layers", "hidden_width", "n_classes", "activation", "acoustic_bands", "acoustic_streams",
    "acoustic_context", "tv_count", "tv_context", "freq_filters", "freq_filter_width", "freq_pool", "time_filters",
    "time_filter_width", "time_pool", "tv_source",
    "inversion_lr", "inversion_max_epochs", "inversion_activation",
};

struct Globals {
    std::string config;
    std::uint64_t seed = 1;
    std::string out = ".";
    std::string scale = "toy";
    std::size_t threads = 1;
    bool seed_given = false;
};

KeyValueConfig load_config(const Globals& g) {
    return g.config.empty() ? KeyValueConfig::parse("", "<none>") : KeyValueConfig::load(g.config);
}

void check_keys(const KeyValueConfig& cfg) {
    for (const auto& k : cfg.unconsumed())
        if (!kKnownKeys.count(k)) throw ConfigError("config: unknown key '" + k + "'");
}

// Seed precedence: --seed, then the config file, then 1.
std::uint64_t resolve_seed(const Globals& g, KeyValueConfig& cfg) {
    const auto from_cfg = cfg.take_count("seed");
    if (g.seed_given) return g.seed;
    return from_cfg ? *from_cfg : g.seed;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

training::TrainConfig train_config(const Globals& g, KeyValueConfig& cfg) {
    training::TrainConfig tc;
    tc.rng_seed = resolve_seed(g, cfg);
    training::apply_config(tc, cfg);
    if (g.seed_given) tc.rng_seed = g.seed;
    return tc;
}

std::optional<inversion::Condition> parse_condition_arg(const std::string& s) {
    if (s == "all") return std::nullopt;
    return inversion::parse_condition(s);
}

// ---- corpus-gen ----------------------------------------------------------

struct CorpusArgs {
    std::optional<std::size_t> n_utts;
};

int cmd_corpus_gen(const Globals& g, const CorpusArgs& a) {
    KeyValueConfig cfg = load_config(g);
    inversion::CorpusConfig cc;
    cc.seed = resolve_seed(g, cfg);
    cc.threads = g.threads;
    if (auto v = cfg.take_count("n_utts")) cc.n_utts = *v;
    if (a.n_utts) cc.n_utts = *a.n_utts;
    if (auto v = cfg.take_real("severity_min")) cc.severity_range.first = *v;
    if (auto v = cfg.take_real("severity_max")) cc.severity_range.second = *v;
    if (auto v = cfg.take_real("snr_min")) cc.snr_range.first = *v;
    if (auto v = cfg.take_real("snr_max")) cc.snr_range.second = *v;
    if (auto v = cfg.take_string("noise")) {
        cc.noise_bank.clear();
        std::istringstream ss(*v);
        for (std::string name; std::getline(ss, name, ',');) {
            bool found = false;
            for (auto t : dsp::kAllNoiseTypes)
                if (dsp::noise_name(t) == name) {
                    cc.noise_bank.push_back(t);
                    found = true;
                }
            if (!found) throw ConfigError("unknown noise type '" + name + "'");
        }
    }
    check_keys(cfg);

    const auto corpus = inversion::build_parallel_corpus(cc);
    inversion::write_corpus(corpus, g.out);

    const auto sizes = inversion::split_sizes(cc.n_utts);
    std::array<std::size_t, 8> hist{};
    for (const auto& u : corpus.entries)
        if (u.condition == inversion::Condition::noisy)
            ++hist[std::min<std::size_t>(7, static_cast<std::size_t>(std::max(0.0, (u.snr_db - 10.0) / 10.0)))];
    std::cout << "utterances: " << cc.n_utts << " (" << corpus.entries.size() << " entries, clean + noisy)\n"
              << "split: train " << sizes.train << ", cv " << sizes.cv << ", test " << sizes.test << "\n"
              << "classes: " << corpus.n_classes << "\n"
              << "SNR histogram (dB):\n";
    for (std::size_t b = 0; b < hist.size(); ++b)
        std::cout << "  [" << 10 + 10 * b << ", " << (b == 7 ? "80]" : std::to_string(20 + 10 * b) + ")") << " "
                  << hist[b] << "\n";
    return 0;
}

// ---- train-inversion -----------------------------------------------------

struct TrainInversionArgs {
    std::string corpus;
};

int cmd_train_inversion(const Globals& g, const TrainInversionArgs& a) {
    KeyValueConfig cfg = load_config(g);
    auto ic = inversion::InversionConfig::at_scale(arch::parse_scale(g.scale));
    ic.train.rng_seed = resolve_seed(g, cfg);
    if (auto v = cfg.take_real("inversion_lr")) ic.train.initial_lr = *v;
    if (auto v = cfg.take_count("inversion_max_epochs")) ic.train.max_epochs = *v;
    if (auto v = cfg.take_string("inversion_activation")) {
        if (*v == "relu") ic.activation = nn::ActivationFn::relu;
        else if (*v == "sigmoid") ic.activation = nn::ActivationFn::sigmoid;
        else throw ConfigError("inversion_activation must be relu or sigmoid");
    }
    check_keys(cfg);

    const auto corpus = inversion::read_corpus(a.corpus);
    fs::create_directories(g.out);
    std::ofstream log(fs::path(g.out) / "inversion_log.jsonl");
    const auto model = inversion::train_inversion_model(
        corpus, ic, [&](const training::EpochRecord& r, const training::TrainCheckpoint&) {
            log << training::to_json_line(r) << '\n';
            std::cout << "epoch " << r.epoch << " lr " << r.lr << " train_mse " << fmt(r.train_loss, 6)
                      << " cv_mse " << fmt(r.cv_error, 6) << "\n";
        });
    inversion::save_inversion_model(fs::path(g.out) / "inversion.model", model);

    std::vector<inversion::TvTrajectory> pred, truth;
    for (const auto* u : corpus.select(inversion::Split::test)) {
        pred.push_back(inversion::invert(model, u->audio));
        truth.push_back(u->tvs);
    }
    const auto r = inversion::tv_correlations(pred, truth);
    std::cout << "test-split Pearson r:";
    for (std::size_t v = 0; v < inversion::kNumTvs; ++v) std::cout << " " << inversion::tv_name(v) << "=" << fmt(r[v], 3);
    std::cout << "\n";
    return 0;
}

// ---- invert --------------------------------------------------------------

struct InvertArgs {
    std::string model;
    std::string corpus;
    std::string split = "test";
    std::vector<std::string> wavs;
};

int cmd_invert(const Globals& g, const InvertArgs& a) {
    KeyValueConfig cfg = load_config(g);
    check_keys(cfg);
    if (a.corpus.empty() && a.wavs.empty()) return 0;
    const auto model = inversion::load_inversion_model(a.model);

    if (!a.corpus.empty()) {
        const auto corpus = inversion::read_corpus(a.corpus);
        fs::create_directories(fs::path(g.out));
        std::vector<inversion::TvTrajectory> pred, truth;
        for (const auto* u : corpus.select(inversion::parse_split(a.split))) {
            pred.push_back(inversion::invert(model, u->audio));
            truth.push_back(u->tvs);
            dsp::save_feature_matrix(fs::path(g.out) / (u->id + ".tv.fmx"), pred.back());
        }
        if (pred.empty()) return 0;
        const auto r = inversion::tv_correlations(pred, truth);
        std::cout << "| TV | Pearson r |\n|---|---:|\n";
        for (std::size_t v = 0; v < inversion::kNumTvs; ++v)
            std::cout << "| " << inversion::tv_name(v) << " | " << fmt(r[v], 3) << " |\n";
    }
    for (const auto& w : a.wavs) {
        const auto tv = inversion::invert(model, dsp::read_wav(w));
        fs::path out = w;
        out.replace_extension(".tv.fmx");
        dsp::save_feature_matrix(out, tv);
        std::cout << out.string() << ": " << tv.frames() << " frames\n";
    }
    return 0;
}

// ---- extract-features ----------------------------------------------------

struct ExtractArgs {
    std::string type = "logmel";
    std::string corpus;
    std::vector<std::string> wavs;
};

int cmd_extract_features(const Globals& g, const ExtractArgs& a) {
    KeyValueConfig cfg = load_config(g);
    check_keys(cfg);
    if (a.type != "logmel" && a.type != "nmc") throw ConfigError("feature type must be logmel or nmc");
    auto extract = [&](const dsp::Waveform& w) {
        return a.type == "logmel" ? pipeline::acoustic_features(w) : inversion::inversion_features(w, 40);
    };
    std::vector<std::pair<std::string, dsp::Waveform>> inputs;
    if (!a.corpus.empty())
        for (auto& u : inversion::read_corpus(a.corpus).entries) inputs.emplace_back(u.id, std::move(u.audio));
    for (const auto& w : a.wavs) inputs.emplace_back(fs::path(w).stem().string(), dsp::read_wav(w));
    if (inputs.empty()) return 0;
    fs::create_directories(g.out);
    for (const auto& [id, wave] : inputs) {
        const auto f = extract(wave);
        dsp::save_feature_matrix(fs::path(g.out) / (id + "." + a.type + ".fmx"), f);
    }
    std::cout << "wrote " << inputs.size() << " " << a.type << " feature files to " << g.out << "\n";
    return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
    std::string corpus;
    std::string arch;
    std::string tv_source;
    std::string inversion_model;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
    KeyValueConfig cfg = load_config(g);
    const auto scale = arch::parse_scale(g.scale);
    std::string arch_name = a.arch;
    if (auto v = cfg.take_string("arch"); v && arch_name.empty()) arch_name = *v;
    if (arch_name.empty()) throw ConfigError("no architecture given (--arch or arch=)");
    arch::ArchSpec spec = arch::default_spec(arch::parse_arch_kind(arch_name), scale);
    arch::apply_config(spec, cfg);
    spec.validate();
    training::TrainConfig tc = train_config(g, cfg);
    std::string tv_name = a.tv_source;
    if (auto v = cfg.take_string("tv_source"); v && tv_name.empty()) tv_name = *v;
    const auto tv_source = pipeline::parse_tv_source(tv_name.empty() ? "ground-truth" : tv_name);
    check_keys(cfg);

    std::optional<inversion::InversionModel> inverter;
    if (spec.kind == arch::ArchKind::fcnn && tv_source == pipeline::TvSource::inverted) {
        if (a.inversion_model.empty()) throw ConfigError("--tv-source=inverted needs --inversion-model");
        if (!fs::exists(a.inversion_model))
            throw ConfigError("inversion model " + a.inversion_model + " does not exist");
        inverter = inversion::load_inversion_model(a.inversion_model);
    }

    const auto corpus = inversion::read_corpus(a.corpus);
    if (spec.n_classes != corpus.n_classes) spec.n_classes = corpus.n_classes;
    fs::create_directories(g.out);
    std::ofstream log(fs::path(g.out) / "train_log.jsonl");
    const auto model = pipeline::train_acoustic_model(
        corpus, spec, tv_source, tc, inverter ? &*inverter : nullptr,
        [&](const training::EpochRecord& r, const training::TrainCheckpoint&) {
            log << training::to_json_line(r) << '\n';
            std::cout << "epoch " << r.epoch << " lr " << r.lr << " train_loss " << fmt(r.train_loss)
                      << " cv_error " << fmt(r.cv_error) << "\n";
        });
    pipeline::save_acoustic_model(fs::path(g.out) / "model.bin", model);
    const auto& st = model.checkpoint.state;
    std::cout << "final cv_error " << fmt(st.cv_error_history.empty() ? 0.0 : st.cv_error_history.back())
              << " best epoch " << st.best_epoch << " ("
              << fmt(st.best_epoch ? st.cv_error_history[st.best_epoch - 1] : 0.0) << ")\n";
    return 0;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
    std::string model;
    std::string corpus;
    std::string split = "test";
    std::string condition = "noisy";
    std::string inversion_model;
    std::string train_data = "synthetic";
};

std::string features_label(const pipeline::AcousticModel& m) {
    if (m.spec.kind != arch::ArchKind::fcnn) return "FBANK";
    return m.tv_source == pipeline::TvSource::ground_truth ? "FBANK+TV(gt)" : "FBANK+TV";
}

std::string arch_label(arch::ArchKind k) {
    switch (k) {
        case arch::ArchKind::dnn: return "DNN";
        case arch::ArchKind::cnn: return "CNN";
        case arch::ArchKind::tfcnn: return "TFCNN";
        case arch::ArchKind::fcnn: return "fCNN";
    }
    return "?";
}

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
    KeyValueConfig cfg = load_config(g);
    check_keys(cfg);
    if (!fs::exists(a.model)) throw IoError("model " + a.model + " does not exist");
    const auto model = pipeline::load_acoustic_model(a.model);
    std::optional<inversion::InversionModel> inverter;
    if (model.spec.kind == arch::ArchKind::fcnn && model.tv_source == pipeline::TvSource::inverted) {
        if (a.inversion_model.empty()) throw ConfigError("model uses inverted TVs; --inversion-model required");
        inverter = inversion::load_inversion_model(a.inversion_model);
    }
    const auto corpus = inversion::read_corpus(a.corpus);
    const auto utts = corpus.select(inversion::parse_split(a.split), parse_condition_arg(a.condition));
    if (utts.empty()) throw ConfigError("no utterances in split " + a.split + " / " + a.condition);
    const auto rep = pipeline::evaluate_acoustic_model(model, utts, inverter ? &*inverter : nullptr);

    fs::create_directories(g.out);
    eval::write_transcripts(fs::path(g.out) / "hyp.txt", rep.hypotheses);
    eval::write_transcripts(fs::path(g.out) / "ref.txt", rep.references);
    const double wer = rep.wer.n_ref_words ? rep.wer.wer_percent() : 0.0;
    std::cout << "utterances " << rep.n_utterances << " frames " << rep.n_frames << "\n"
              << "frame_accuracy " << fmt(rep.frame_accuracy) << "\n"
              << "token_error_rate " << fmt(wer, 2) << " % (S " << rep.wer.substitutions << " D "
              << rep.wer.deletions << " I " << rep.wer.insertions << " N " << rep.wer.n_ref_words << ")\n";

    std::ofstream results(fs::path(g.out) / "results.tsv", std::ios::app);
    if (!results) throw IoError("cannot append to results.tsv");
    results << arch_label(model.spec.kind) << '\t' << features_label(model) << '\t' << a.train_data << '\t'
            << fmt(wer, 2) << '\t' << fmt(100.0 * rep.frame_accuracy, 2) << '\n';
    return 0;
}

// ---- report --------------------------------------------------------------

struct ReportArgs {
    std::string results;
    std::string metric = "wer";
};

int cmd_report(const Globals&, const ReportArgs& a) {
    std::ifstream is(a.results);
    if (!is) throw IoError("cannot open " + a.results);
    if (a.metric != "wer" && a.metric != "accuracy") throw ConfigError("metric must be wer or accuracy");
    std::vector<eval::ResultRow> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, '\t');) cols.push_back(c);
        if (cols.size() < 4) throw FormatError(a.results + ": expected AM, features, train data and WER columns");
        const std::size_t col = a.metric == "wer" ? 3 : 4;
        if (col >= cols.size()) throw FormatError(a.results + ": no accuracy column");
        try {
            rows.push_back({cols[0], cols[1], cols[2], std::stod(cols[col])});
        } catch (const std::exception&) {
            throw FormatError(a.results + ": bad number '" + cols[col] + "'");
        }
    }
    eval::TableOptions opts;
    if (a.metric == "accuracy") {
        opts.metric_name = "Frame acc. (%)";
        opts.direction = eval::MetricDirection::higher_is_better;
    } else {
        opts.metric_name = "TER (%)";
    }
    opts.precision = 2;
    std::cout << eval::results_table(rows, opts);
    return 0;
}

int exit_code_for(const Error& e) {
    switch (e.category()) {
        case ErrorCategory::io: return kExitIo;
        case ErrorCategory::config: return kExitConfig;
        case ErrorCategory::numerical: return kExitNumerical;
    }
    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"artic: articulatory and acoustic speech recognition toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "key=value configuration file");
    auto* seed_opt = app.add_option("--seed", g.seed, "random seed");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--scale", g.scale, "network scale: toy or paper")->check(CLI::IsMember({"toy", "paper"}));
    app.add_option("--threads", g.threads, "worker threads for corpus generation")->check(CLI::PositiveNumber);

    CorpusArgs corpus_args;
    std::size_t n_utts = 0;
    auto* corpus_cmd = app.add_subcommand("corpus-gen", "generate a synthetic parallel corpus");
    auto* n_utts_opt = corpus_cmd->add_option("--n-utts", n_utts, "number of clean utterances");

    TrainInversionArgs ti_args;
    auto* ti_cmd = app.add_subcommand("train-inversion", "train the speech inversion model");
    ti_cmd->add_option("--corpus", ti_args.corpus, "corpus directory")->required();

    InvertArgs inv_args;
    auto* inv_cmd = app.add_subcommand("invert", "estimate tract variables from audio");
    inv_cmd->add_option("--model", inv_args.model, "inversion model file");
    inv_cmd->add_option("--corpus", inv_args.corpus, "corpus directory (reports correlations)");
    inv_cmd->add_option("--split", inv_args.split, "corpus split")->check(CLI::IsMember({"train", "cv", "test"}));
    inv_cmd->add_option("wavs", inv_args.wavs, "wav files");

    ExtractArgs ex_args;
    auto* ex_cmd = app.add_subcommand("extract-features", "write feature matrices");
    ex_cmd->add_option("--type", ex_args.type, "logmel or nmc");
    ex_cmd->add_option("--corpus", ex_args.corpus, "corpus directory");
    ex_cmd->add_option("wavs", ex_args.wavs, "wav files");

    TrainArgs tr_args;
    auto* tr_cmd = app.add_subcommand("train", "train an acoustic model");
    tr_cmd->add_option("--corpus", tr_args.corpus, "corpus directory")->required();
    tr_cmd->add_option("--arch", tr_args.arch, "dnn, cnn, tfcnn or fcnn");
    tr_cmd->add_option("--tv-source", tr_args.tv_source, "ground-truth or inverted");
    tr_cmd->add_option("--inversion-model", tr_args.inversion_model, "inversion model for inverted TVs");

    EvaluateArgs ev_args;
    auto* ev_cmd = app.add_subcommand("evaluate", "score an acoustic model");
    ev_cmd->add_option("--model", ev_args.model, "model file")->required();
    ev_cmd->add_option("--corpus", ev_args.corpus, "corpus directory")->required();
    ev_cmd->add_option("--split", ev_args.split, "corpus split")->check(CLI::IsMember({"train", "cv", "test"}));
    ev_cmd->add_option("--condition", ev_args.condition, "clean, noisy or all")
        ->check(CLI::IsMember({"clean", "noisy", "all"}));
    ev_cmd->add_option("--inversion-model", ev_args.inversion_model, "inversion model for inverted TVs");
    ev_cmd->add_option("--train-data", ev_args.train_data, "label for the results table");

    ReportArgs rp_args;
    auto* rp_cmd = app.add_subcommand("report", "render a results table");
    rp_cmd->add_option("--results", rp_args.results, "results.tsv written by evaluate")->required();
    rp_cmd->add_option("--metric", rp_args.metric, "wer or accuracy");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    g.seed_given = seed_opt->count() > 0;
    if (n_utts_opt->count()) corpus_args.n_utts = n_utts;

    try {
        if (corpus_cmd->parsed()) return cmd_corpus_gen(g, corpus_args);
        if (ti_cmd->parsed()) return cmd_train_inversion(g, ti_args);
        if (inv_cmd->parsed()) return cmd_invert(g, inv_args);
        if (ex_cmd->parsed()) return cmd_extract_features(g, ex_args);
        if (tr_cmd->parsed()) return cmd_train(g, tr_args);
        if (ev_cmd->parsed()) return cmd_evaluate(g, ev_args);
        if (rp_cmd->parsed()) return cmd_report(g, rp_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
