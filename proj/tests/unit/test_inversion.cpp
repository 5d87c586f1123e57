#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>

#include "artic/dsp/features.hpp"
#include "artic/error.hpp"
#include "artic/inversion/corpus.hpp"
#include "artic/inversion/gestures.hpp"
#include "artic/inversion/model.hpp"
#include "artic/inversion/synth.hpp"

namespace fs = std::filesystem;
using namespace artic;
using namespace artic::inversion;

namespace {

TvTrajectory constant_tvs(std::size_t frames, std::array<double, kNumTvs> values) {
    TvTrajectory tv(frames, dsp::FeatureLayout{kNumTvs, 1, 1}, 0.01);
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t v = 0; v < kNumTvs; ++v) tv(t, v) = values[v];
    return tv;
}

double normalized_autocorr(const dsp::Waveform& w, std::size_t lag, std::size_t skip) {
    double num = 0, e0 = 0, e1 = 0;
    for (std::size_t n = skip; n + lag < w.size(); ++n) {
        num += w.samples[n] * w.samples[n + lag];
        e0 += w.samples[n] * w.samples[n];
        e1 += w.samples[n + lag] * w.samples[n + lag];
    }
    return num / std::sqrt(e0 * e1);
}

CorpusConfig small_corpus_config(std::uint64_t seed = 7, std::size_t n = 12) {
    CorpusConfig c;
    c.n_utts = n;
    c.seed = seed;
    return c;
}

// Built once; several tests share it.
const ParallelCorpus& small_corpus() {
    static const ParallelCorpus corpus = build_parallel_corpus(small_corpus_config());
    return corpus;
}

InversionConfig tiny_inversion_config() {
    InversionConfig c = InversionConfig::at_scale(arch::Scale::toy);
    c.conv.n_filters = 8;
    c.hidden_width = 32;
    c.n_hidden_layers = 2;
    c.train.max_epochs = 4;
    return c;
}

const InversionModel& tiny_model() {
    static const InversionModel model = train_inversion_model(small_corpus(), tiny_inversion_config());
    return model;
}

double tv_mse(const TvTrajectory& a, const TvTrajectory& b) {
    double e = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) e += std::pow(a.data()[i] - b.data()[i], 2);
    return e / static_cast<double>(a.data().size());
}

}  // namespace

// ---- vocabulary and scores ------------------------------------------------

TEST(Vocabulary, DefaultLexiconShape) {
    const auto& v = default_vocabulary();
    EXPECT_EQ(v.words.size(), 30u);
    EXPECT_EQ(v.n_classes(), 42u);
    EXPECT_EQ(v.class_tokens().front(), "sil");
    for (const auto& w : v.words) {
        EXPECT_GE(w.units.size(), 2u);
        EXPECT_LE(w.units.size(), 4u);
        for (std::size_t i = 1; i < w.units.size(); ++i) EXPECT_NE(w.units[i], w.units[i - 1]) << w.name;
    }
}

TEST(Vocabulary, UnitsAreWellSeparated) {
    const auto& u = default_vocabulary().units;
    for (std::size_t a = 0; a < u.size(); ++a) {
        EXPECT_EQ(u[a].class_id, static_cast<std::int32_t>(a + 1));
        EXPECT_GE(u[a].duration, 0.07 - 1e-12);
        EXPECT_LE(u[a].duration, 0.13 + 1e-12);
        for (std::size_t b = a + 1; b < u.size(); ++b) {
            int far = 0;
            for (std::size_t v = 0; v < kNumTvs; ++v) far += std::abs(u[a].targets[v] - u[b].targets[v]) >= 0.4 - 1e-12;
            EXPECT_GE(far, 3) << a << " vs " << b;
        }
    }
}

TEST(Score, SeverityZeroKeepsCanonicalTiming) {
    const auto& vocab = default_vocabulary();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = generate_gestural_score(seed, vocab, 0.0);
        double cursor = kEdgeSilence;
        ASSERT_EQ(s.score.segments.size(), s.transcript.size());
        for (const auto& seg : s.score.segments) {
            const auto& unit = vocab.units[static_cast<std::size_t>(seg.class_id - 1)];
            EXPECT_DOUBLE_EQ(seg.onset, cursor);
            EXPECT_NEAR(seg.offset - seg.onset, unit.duration, 1e-12);
            cursor = seg.offset;
        }
        EXPECT_NEAR(s.score.duration, cursor + kEdgeSilence, 1e-12);
        for (std::size_t v = 0; v < kNumTvs; ++v)
            for (std::size_t i = 0; i < s.score.segments.size(); ++i) {
                const auto& unit = vocab.units[static_cast<std::size_t>(s.score.segments[i].class_id - 1)];
                EXPECT_EQ(s.score.tracks[v][i].target, unit.targets[v]);
            }
    }
}

TEST(Score, FullSeverityStretchesAndNeutralizes) {
    const auto& vocab = default_vocabulary();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = generate_gestural_score(seed, vocab, 1.0);
        double canonical = 0;
        for (const auto& seg : s.score.segments) {
            const auto& unit = vocab.units[static_cast<std::size_t>(seg.class_id - 1)];
            canonical += unit.duration;
            EXPECT_GE(seg.offset - seg.onset, 0.02 - 1e-12);
        }
        EXPECT_NEAR(s.score.duration, 2 * kEdgeSilence + 2.0 * canonical, 1e-12);
        for (std::size_t i = 1; i < s.score.segments.size(); ++i)
            EXPECT_EQ(s.score.segments[i].onset, s.score.segments[i - 1].offset);
        for (std::size_t v = 0; v < kNumTvs; ++v)
            for (std::size_t i = 0; i < s.score.segments.size(); ++i) {
                const double t = vocab.units[static_cast<std::size_t>(s.score.segments[i].class_id - 1)].targets[v];
                EXPECT_NEAR(s.score.tracks[v][i].target, t + (0.5 - t) / 2.0, 1e-12);
            }
    }
}

TEST(Score, DeterministicPerSeed) {
    const auto& vocab = default_vocabulary();
    const auto a = generate_gestural_score(42, vocab, 0.6);
    EXPECT_EQ(a.score, generate_gestural_score(42, vocab, 0.6).score);
    EXPECT_EQ(a.transcript, generate_gestural_score(42, vocab, 0.6).transcript);
    bool differs = false;
    for (std::uint64_t s = 43; s < 50 && !differs; ++s) differs = !(generate_gestural_score(s, vocab, 0.6).score == a.score);
    EXPECT_TRUE(differs);
}

TEST(Score, InvalidArgumentsThrow) {
    EXPECT_THROW(generate_gestural_score(1, Vocabulary{}, 0.5), ConfigError);
    EXPECT_THROW(generate_gestural_score(1, default_vocabulary(), 1.5), ConfigError);
    EXPECT_THROW(generate_gestural_score(1, default_vocabulary(), -0.1), ConfigError);
}

// ---- TV rendering and labels ----------------------------------------------

TEST(Render, EmptyScoreRestsAtNeutral) {
    GesturalScore s;
    s.duration = 0.5;
    const auto tv = render_tvs(s);
    EXPECT_EQ(tv.frames(), score_frame_count(s));
    EXPECT_EQ(tv.frames(), 48u);
    for (double v : tv.data()) EXPECT_EQ(v, 0.5);
}

TEST(Render, StepResponseIsMonotoneWithoutOvershoot) {
    GesturalScore s;
    s.duration = 1.0;
    s.tracks[0].push_back({0.1, 1.0, 0.9, 1});
    const auto tv = render_tvs(s);
    for (std::size_t t = 1; t < tv.frames(); ++t) {
        EXPECT_GE(tv(t, 0), tv(t - 1, 0));
        EXPECT_LE(tv(t, 0), 0.9 + 1e-12);
    }
    // First frame centre inside the gesture is t = 9; 5 time constants later.
    EXPECT_GE(tv(9 + 20, 0), 0.5 + 0.95 * 0.4);
    EXPECT_LT(tv(9 + 2, 0), 0.5 + 0.5 * 0.4);
}

TEST(Render, GeneratedTrajectoriesStayInBounds) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = generate_gestural_score(seed, default_vocabulary(), 0.1 * static_cast<double>(seed));
        const auto tv = render_tvs(s.score);
        EXPECT_EQ(tv.dim(), kNumTvs);
        for (double v : tv.data()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Labels, EdgesAreSilenceAndCollapseToTranscript) {
    const auto& vocab = default_vocabulary();
    const auto tokens = vocab.class_tokens();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = generate_gestural_score(seed, vocab, 0.3);
        const auto labels = frame_labels(s.score);
        ASSERT_EQ(labels.size(), score_frame_count(s.score));
        EXPECT_EQ(labels.front(), kSilenceClass);
        EXPECT_EQ(labels.back(), kSilenceClass);
        std::vector<std::string> collapsed;
        for (std::size_t t = 0; t < labels.size(); ++t)
            if (labels[t] != kSilenceClass && (t == 0 || labels[t] != labels[t - 1]))
                collapsed.push_back(tokens[static_cast<std::size_t>(labels[t])]);
        EXPECT_EQ(collapsed, s.transcript);
    }
}

// ---- synthesis ------------------------------------------------------------

TEST(Synth, LengthFramesBackToTvCount) {
    const auto w = synthesize_speech_from_tvs(constant_tvs(50, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1.0}), 1);
    EXPECT_EQ(w.size(), 49u * 160u + 400u);
    EXPECT_EQ(dsp::frame_count(w.size(), w.sample_rate), 50u);
    float peak = 0;
    for (float s : w.samples) peak = std::max(peak, std::abs(s));
    EXPECT_NEAR(peak, 0.9f, 1e-6);
}

TEST(Synth, GlottisSwitchesPeriodicity) {
    const std::size_t lag = 16000 / static_cast<std::size_t>(kPitchHz);
    const auto voiced = synthesize_speech_from_tvs(constant_tvs(60, {0.6, 0.4, 0.5, 0.3, 0.5, 0.1, 0.0, 1.0}), 2);
    const auto unvoiced = synthesize_speech_from_tvs(constant_tvs(60, {0.6, 0.4, 0.5, 0.3, 0.5, 0.1, 0.0, 0.0}), 2);
    EXPECT_GT(normalized_autocorr(voiced, lag, 800), 0.8);
    EXPECT_LT(std::abs(normalized_autocorr(unvoiced, lag, 800)), 0.3);
}

// Fully voiced, no frication: the excitation is deterministic. Noise-excited
// frames fluctuate by the periodogram variance and are not covered here.
TEST(Synth, ConstantTvsGiveStationarySpectrum) {
    const auto w = synthesize_speech_from_tvs(constant_tvs(80, {0.7, 0.3, 0.6, 0.4, 0.5, 0.0, 0.1, 1.0}), 3);
    const auto f = dsp::logmel_filterbank(w);
    for (std::size_t t = 6; t < f.frames(); ++t) {
        double dot = 0, na = 0, nb = 0;
        for (std::size_t k = 0; k < f.dim(); ++k) {
            dot += f(t, k) * f(t - 1, k);
            na += f(t, k) * f(t, k);
            nb += f(t - 1, k) * f(t - 1, k);
        }
        EXPECT_GE(dot / std::sqrt(na * nb), 0.99) << t;
    }
}

TEST(Synth, DeterministicAndSeedSensitive) {
    const auto tv = render_tvs(generate_gestural_score(5, default_vocabulary(), 0.4).score);
    const auto a = synthesize_speech_from_tvs(tv, 9);
    EXPECT_EQ(a.samples, synthesize_speech_from_tvs(tv, 9).samples);
    EXPECT_NE(a.samples, synthesize_speech_from_tvs(tv, 10).samples);
}

TEST(Synth, RejectsBadInput) {
    TvTrajectory wrong(10, dsp::FeatureLayout{7, 1, 1}, 0.01);
    EXPECT_THROW(synthesize_speech_from_tvs(wrong, 1), DimensionError);
    auto nan = constant_tvs(10, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    nan(3, 2) = std::nan("");
    EXPECT_THROW(synthesize_speech_from_tvs(nan, 1), DimensionError);
    EXPECT_THROW(synthesize_speech_from_tvs(constant_tvs(0, {}), 1), LengthError);
}

// ---- corpus ---------------------------------------------------------------

TEST(Corpus, SplitSizes) {
    const auto s = split_sizes(100);
    EXPECT_EQ(s.train, 88u);
    EXPECT_EQ(s.cv, 2u);
    EXPECT_EQ(s.test, 10u);
    const auto small = split_sizes(10);
    EXPECT_EQ(small.cv, 1u);
    EXPECT_EQ(small.test, 1u);
    EXPECT_EQ(small.train, 8u);
    EXPECT_THROW(build_parallel_corpus(small_corpus_config(1, 5)), ConfigError);
}

TEST(Corpus, PairsShareTargetsAndRespectRanges) {
    const auto& c = small_corpus();
    ASSERT_EQ(c.entries.size(), 24u);
    EXPECT_EQ(c.n_classes, 42u);
    for (std::size_t i = 0; i < c.entries.size(); i += 2) {
        const auto& clean = c.entries[i];
        const auto& noisy = c.entries[i + 1];
        EXPECT_EQ(clean.condition, Condition::clean);
        EXPECT_EQ(noisy.condition, Condition::noisy);
        EXPECT_EQ(clean.source, noisy.source);
        EXPECT_EQ(clean.tvs, noisy.tvs);
        EXPECT_EQ(clean.labels, noisy.labels);
        EXPECT_EQ(clean.audio.size(), noisy.audio.size());
        EXPECT_EQ(clean.labels.size(), clean.tvs.frames());
        EXPECT_EQ(dsp::frame_count(clean.audio.size(), 16000), clean.tvs.frames());
        EXPECT_GE(noisy.snr_db, 10.0);
        EXPECT_LE(noisy.snr_db, 80.0);
        EXPECT_TRUE(noisy.noise.has_value());
        EXPECT_GE(clean.severity, 0.0);
        EXPECT_LE(clean.severity, 1.0);
    }
    EXPECT_EQ(c.select(Split::train).size(), 2u * split_sizes(12).train);
    EXPECT_EQ(c.select(Split::test, Condition::noisy).size(), split_sizes(12).test);
}

TEST(Corpus, IndependentOfThreadCount) {
    auto cfg = small_corpus_config();
    cfg.threads = 3;
    const auto threaded = build_parallel_corpus(cfg);
    const auto& serial = small_corpus();
    ASSERT_EQ(threaded.entries.size(), serial.entries.size());
    for (std::size_t i = 0; i < serial.entries.size(); ++i) {
        EXPECT_EQ(threaded.entries[i].audio.samples, serial.entries[i].audio.samples);
        EXPECT_EQ(threaded.entries[i].id, serial.entries[i].id);
        EXPECT_EQ(threaded.entries[i].snr_db, serial.entries[i].snr_db);
    }
}

TEST(Corpus, WriteReadRoundTrip) {
    const fs::path dir = fs::temp_directory_path() / "artic_unit_corpus";
    fs::remove_all(dir);
    const auto& c = small_corpus();
    write_corpus(c, dir);
    EXPECT_TRUE(fs::exists(dir / "manifest.jsonl"));
    const auto r = read_corpus(dir);
    ASSERT_EQ(r.entries.size(), c.entries.size());
    EXPECT_EQ(r.class_tokens, c.class_tokens);
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
        const auto& a = c.entries[i];
        const auto& b = r.entries[i];
        EXPECT_EQ(a.id, b.id);
        EXPECT_EQ(a.split, b.split);
        EXPECT_EQ(a.condition, b.condition);
        EXPECT_EQ(a.labels, b.labels);
        EXPECT_EQ(a.transcript, b.transcript);
        ASSERT_EQ(a.audio.size(), b.audio.size());
        for (std::size_t n = 0; n < a.audio.size(); n += 97)
            EXPECT_NEAR(a.audio.samples[n], b.audio.samples[n], 1.0 / 32768.0);
        for (std::size_t k = 0; k < a.tvs.data().size(); ++k) EXPECT_NEAR(a.tvs.data()[k], b.tvs.data()[k], 1e-6);
    }
}

TEST(Corpus, MissingDirectoryIsIoError) {
    EXPECT_THROW(read_corpus(fs::temp_directory_path() / "artic_no_such_corpus"), IoError);
}

// ---- inversion model ------------------------------------------------------

TEST(Inversion, ModelWithoutStatsIsStateError) {
    InversionModel m;
    m.net = build_inversion_network(tiny_inversion_config());
    EXPECT_THROW(invert(m, small_corpus().entries[0].audio), StateError);
}

TEST(Inversion, RejectsOtherSampleRates) {
    dsp::Waveform w = small_corpus().entries[0].audio;
    w.sample_rate = 8000;
    EXPECT_THROW(inversion_features(w, 40), UnsupportedError);
}

TEST(Inversion, OutputsAreBoundedAndDeterministic) {
    const auto& m = tiny_model();
    const auto& u = small_corpus().entries[1];
    const auto a = invert(m, u.audio);
    EXPECT_EQ(a.frames(), u.tvs.frames());
    EXPECT_EQ(a.dim(), kNumTvs);
    for (double v : a.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(a, invert(m, u.audio));
}

TEST(Inversion, SaveLoadPreservesPredictions) {
    const fs::path p = fs::temp_directory_path() / "artic_unit_inversion.model";
    save_inversion_model(p, tiny_model());
    const auto back = load_inversion_model(p);
    EXPECT_EQ(back.stats, tiny_model().stats);
    const auto& audio = small_corpus().entries[3].audio;
    EXPECT_EQ(invert(back, audio), invert(tiny_model(), audio));
}

TEST(Inversion, NoisyInputIsNoEasierThanClean) {
    double clean = 0, noisy = 0;
    for (const auto& u : small_corpus().entries) {
        const double e = tv_mse(invert(tiny_model(), u.audio), u.tvs);
        (u.condition == Condition::clean ? clean : noisy) += e;
    }
    EXPECT_GE(noisy, clean);
}

TEST(Correlation, PerfectAndInverted) {
    TvTrajectory a(20, dsp::FeatureLayout{kNumTvs, 1, 1}, 0.01);
    for (std::size_t t = 0; t < 20; ++t)
        for (std::size_t v = 0; v < kNumTvs; ++v) a(t, v) = std::sin(0.3 * static_cast<double>(t * (v + 1)));
    TvTrajectory b = a;
    for (auto& x : b.data()) x = 1.0 - x;
    const auto same = tv_correlations({a}, {a});
    const auto flipped = tv_correlations({b}, {a});
    for (std::size_t v = 0; v < kNumTvs; ++v) {
        EXPECT_NEAR(same[v], 1.0, 1e-12);
        EXPECT_NEAR(flipped[v], -1.0, 1e-12);
    }
}
