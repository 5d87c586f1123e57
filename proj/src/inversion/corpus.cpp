#include "artic/inversion/corpus.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "artic/dsp/feature_io.hpp"
#include "artic/dsp/wav.hpp"
#include "artic/error.hpp"
#include "artic/inversion/synth.hpp"
#include "artic/seed.hpp"

namespace artic::inversion {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum StreamTag : std::uint64_t { kScoreTag = 1, kSeverityTag, kSynthTag, kNoiseTag, kMixTag };

std::string utt_stem(std::size_t index) {
    std::string s = std::to_string(index);
    return "u" + std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
}

std::optional<dsp::NoiseType> parse_noise(const std::string& name) {
    for (auto t : dsp::kAllNoiseTypes)
        if (dsp::noise_name(t) == name) return t;
    throw FormatError("unknown noise type '" + name + "' in manifest");
}

}  // namespace

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::cv: return "cv";
        case Split::test: return "test";
    }
    return "?";
}

std::string_view to_string(Condition c) { return c == Condition::clean ? "clean" : "noisy"; }

Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "cv") return Split::cv;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split '" + std::string(s) + "'");
}

Condition parse_condition(std::string_view s) {
    if (s == "clean") return Condition::clean;
    if (s == "noisy") return Condition::noisy;
    throw ConfigError("unknown condition '" + std::string(s) + "'");
}

std::vector<const Utterance*> ParallelCorpus::select(Split split, std::optional<Condition> condition) const {
    std::vector<const Utterance*> out;
    for (const auto& u : entries)
        if (u.split == split && (!condition || u.condition == *condition)) out.push_back(&u);
    return out;
}

SplitSizes split_sizes(std::size_t n_utts) {
    if (n_utts < 3) throw ConfigError("corpus needs at least 3 utterances to fill train, cv and test");
    SplitSizes s;
    s.cv = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.02 * static_cast<double>(n_utts))));
    s.test = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.10 * static_cast<double>(n_utts))));
    s.train = n_utts - s.cv - s.test;
    return s;
}

std::pair<Utterance, Utterance> generate_utterance_pair(const CorpusConfig& cfg, const Vocabulary& vocab,
                                                        std::size_t index) {
    const std::uint64_t seed = cfg.seed + index;
    const SplitSizes sizes = split_sizes(cfg.n_utts);

    std::mt19937_64 sev_rng(derive_seed(seed, kSeverityTag));
    const auto [s_lo, s_hi] = cfg.severity_range;
    const double severity = s_lo == s_hi ? s_lo : std::uniform_real_distribution<double>(s_lo, s_hi)(sev_rng);
    const auto [snr_lo, snr_hi] = cfg.snr_range;
    const double snr = snr_lo == snr_hi ? snr_lo : std::uniform_real_distribution<double>(snr_lo, snr_hi)(sev_rng);
    const auto noise_type =
        cfg.noise_bank[std::uniform_int_distribution<std::size_t>(0, cfg.noise_bank.size() - 1)(sev_rng)];

    const ScoredUtterance scored = generate_gestural_score(derive_seed(seed, kScoreTag), vocab, severity);

    Utterance clean;
    clean.source = index;
    clean.id = utt_stem(index) + "-clean";
    clean.split = index < sizes.train ? Split::train : index < sizes.train + sizes.cv ? Split::cv : Split::test;
    clean.severity = severity;
    clean.tvs = render_tvs(scored.score);
    clean.labels = frame_labels(scored.score);
    clean.transcript = scored.transcript;
    clean.audio = synthesize_speech_from_tvs(clean.tvs, derive_seed(seed, kSynthTag));

    Utterance noisy = clean;
    noisy.id = utt_stem(index) + "-noisy";
    noisy.condition = Condition::noisy;
    noisy.noise = noise_type;
    noisy.snr_db = snr;
    const dsp::Waveform noise = dsp::generate_noise(noise_type, clean.audio.size(), derive_seed(seed, kNoiseTag),
                                                    clean.audio.sample_rate);
    noisy.audio = dsp::mix_noise_at_snr(clean.audio, noise, snr).mixed;
    return {std::move(clean), std::move(noisy)};
}

ParallelCorpus build_parallel_corpus(const CorpusConfig& cfg, const Vocabulary& vocab) {
    if (cfg.noise_bank.empty()) throw ConfigError("empty noise bank");
    if (cfg.severity_range.first > cfg.severity_range.second || cfg.severity_range.first < 0.0 ||
        cfg.severity_range.second > 1.0)
        throw ConfigError("severity range must be an ordered sub-interval of [0, 1]");
    if (cfg.snr_range.first > cfg.snr_range.second) throw ConfigError("SNR range must be ordered");
    if (cfg.n_utts < 10) throw ConfigError("corpus needs at least 10 utterances, got " + std::to_string(cfg.n_utts));

    std::vector<std::pair<Utterance, Utterance>> pairs(cfg.n_utts);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cfg.n_utts;) {
            try {
                pairs[i] = generate_utterance_pair(cfg, vocab, i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.threads, cfg.n_utts));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    ParallelCorpus corpus;
    corpus.n_classes = vocab.n_classes();
    corpus.class_tokens = vocab.class_tokens();
    corpus.entries.reserve(2 * cfg.n_utts);
    for (auto& [c, n] : pairs) {
        corpus.entries.push_back(std::move(c));
        corpus.entries.push_back(std::move(n));
    }
    return corpus;
}

void write_corpus(const ParallelCorpus& corpus, const fs::path& dir) {
    fs::create_directories(dir / "wav");
    fs::create_directories(dir / "tv");
    fs::create_directories(dir / "labels");

    std::ofstream manifest(dir / "manifest.jsonl");
    if (!manifest) throw IoError("cannot write " + (dir / "manifest.jsonl").string());
    for (const auto& u : corpus.entries) {
        const std::string stem = utt_stem(u.source);
        const std::string wav = "wav/" + u.id + ".wav";
        const std::string tv = "tv/" + stem + ".fmx";
        const std::string labels = "labels/" + stem + ".txt";
        dsp::write_wav(dir / wav, u.audio);
        if (u.condition == Condition::clean) {
            dsp::save_feature_matrix(dir / tv, u.tvs);
            std::ofstream lf(dir / labels);
            for (std::size_t i = 0; i < u.labels.size(); ++i) lf << (i ? " " : "") << u.labels[i];
            lf << '\n';
            if (!lf) throw IoError("cannot write " + (dir / labels).string());
        }
        json j = {{"id", u.id},
                  {"source", u.source},
                  {"split", to_string(u.split)},
                  {"condition", to_string(u.condition)},
                  {"severity", u.severity},
                  {"wav", wav},
                  {"tv", tv},
                  {"labels", labels},
                  {"transcript", u.transcript}};
        if (u.noise) {
            j["noise"] = dsp::noise_name(*u.noise);
            j["snr_db"] = u.snr_db;
        }
        manifest << j.dump() << '\n';
    }
    if (!manifest) throw IoError("cannot write manifest");

    std::ofstream info(dir / "corpus.json");
    info << json{{"n_classes", corpus.n_classes}, {"class_tokens", corpus.class_tokens}}.dump(2) << '\n';
    if (!info) throw IoError("cannot write corpus.json");
}

ParallelCorpus read_corpus(const fs::path& dir) {
    ParallelCorpus corpus;
    {
        std::ifstream info(dir / "corpus.json");
        if (!info) throw IoError("cannot open " + (dir / "corpus.json").string());
        try {
            const json j = json::parse(info);
            corpus.n_classes = j.at("n_classes").get<std::size_t>();
            corpus.class_tokens = j.at("class_tokens").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw FormatError("corpus.json: " + std::string(e.what()));
        }
    }
    std::ifstream manifest(dir / "manifest.jsonl");
    if (!manifest) throw IoError("cannot open " + (dir / "manifest.jsonl").string());
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        Utterance u;
        try {
            const json j = json::parse(line);
            u.id = j.at("id").get<std::string>();
            u.source = j.at("source").get<std::size_t>();
            u.split = parse_split(j.at("split").get<std::string>());
            u.condition = parse_condition(j.at("condition").get<std::string>());
            u.severity = j.at("severity").get<double>();
            u.transcript = j.at("transcript").get<std::vector<std::string>>();
            if (j.contains("noise")) {
                u.noise = parse_noise(j.at("noise").get<std::string>());
                u.snr_db = j.at("snr_db").get<double>();
            }
            u.audio = dsp::read_wav(dir / j.at("wav").get<std::string>());
            u.tvs = dsp::load_feature_matrix(dir / j.at("tv").get<std::string>());
            std::ifstream lf(dir / j.at("labels").get<std::string>());
            if (!lf) throw IoError("cannot open labels for " + u.id);
            for (std::int32_t v; lf >> v;) u.labels.push_back(v);
        } catch (const json::exception& e) {
            throw FormatError("manifest.jsonl: " + std::string(e.what()));
        }
        if (u.labels.size() != u.tvs.frames())
            throw LengthError(u.id + ": " + std::to_string(u.labels.size()) + " labels for " +
                              std::to_string(u.tvs.frames()) + " TV frames");
        corpus.entries.push_back(std::move(u));
    }
    return corpus;
}

}  // namespace artic::inversion
