// Acceptance checks, one line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include <sys/wait.h>

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "artic/arch/arch_spec.hpp"
#include "artic/arch/builders.hpp"
#include "artic/eval/decode.hpp"
#include "artic/inversion/corpus.hpp"
#include "artic/inversion/model.hpp"
#include "artic/pipeline.hpp"
#include "artic/training/trainer.hpp"
#include "gradcheck.hpp"
#include "wer_oracle.hpp"

namespace fs = std::filesystem;
using namespace artic;
using clk = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(clk::time_point t) { return std::chrono::duration<double>(clk::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- 1: gradient suite ------------------------------------------------------

Outcome gradient_suite() {
    constexpr double tol = 1e-4, eps = 1e-3;
    using nn::LayerSpec;
    using testkit::chain;
    const auto start = clk::now();
    double worst = 0.0;
    std::string worst_name;
    auto check = [&](const std::string& name, nn::Network<double> net, std::vector<nn::Tensor<double>> in,
                     const testkit::LossFn& loss, bool random_params = true) {
        if (random_params) testkit::randomize(net, std::hash<std::string>{}(name));
        const auto r = testkit::gradient_check(std::move(net), std::move(in), loss, eps);
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            worst_name = name + " " + r.worst;
        }
    };

    check("dense", chain(6, {LayerSpec::dense(6, 5)}), {testkit::random_matrix(4, 6, 1)},
          testkit::projection_loss(4, 5, 2));
    check("conv1d-frequency", chain(3 * 12, {LayerSpec::conv1d(nn::ConvAxis::frequency, 12, 3, 4, 5)}),
          {testkit::random_matrix(3, 36, 3)}, testkit::projection_loss(3, 32, 4));
    check("conv1d-time", chain(9 * 4, {LayerSpec::conv1d(nn::ConvAxis::time, 9, 4, 3, 5)}),
          {testkit::random_matrix(3, 36, 5)}, testkit::projection_loss(3, 15, 6));
    check("maxpool1d", chain(4 * 9, {LayerSpec::maxpool1d(4, 9, 3)}), {testkit::separated_matrix(3, 36, 7)},
          testkit::projection_loss(3, 12, 8));
    for (auto fn : {nn::ActivationFn::sigmoid, nn::ActivationFn::relu, nn::ActivationFn::linear})
        check(std::string("activation-") + nn::to_string(fn), chain(8, {LayerSpec::activation(fn, 8)}),
              {testkit::separated_matrix(3, 8, 9, 0.05)}, testkit::projection_loss(3, 8, 10));
    check("softmax", chain(6, {LayerSpec::softmax(6)}), {testkit::random_matrix(3, 6, 11, -2, 2)},
          testkit::projection_loss(3, 6, 12));

    const std::vector<std::int32_t> labels = {0, 3, 1, 2, 3};
    check("cross-entropy",
          chain(7, {LayerSpec::dense(7, 6), LayerSpec::activation(nn::ActivationFn::sigmoid, 6), LayerSpec::dense(6, 4)}),
          {testkit::random_matrix(5, 7, 13)}, [&](const nn::Tensor<double>& out) {
              return nn::softmax_cross_entropy(out, std::span<const std::int32_t>(labels));
          });
    const auto target = testkit::random_matrix(5, 3, 14, 0, 1);
    check("mse", chain(7, {LayerSpec::dense(7, 3)}), {testkit::random_matrix(5, 7, 15)},
          [&](const nn::Tensor<double>& out) { return nn::mse_loss(out, target); });

    // Small two-stream fCNN, exercising fusion end to end.
    arch::ArchSpec s;
    s.kind = arch::ArchKind::fcnn;
    s.n_hidden_layers = 1;
    s.hidden_width = 5;
    s.n_classes = 4;
    s.acoustic = {10, 1, 3};
    s.tv = arch::TvLayout{2, 7};
    s.freq_conv = {3, 4, 2};
    s.time_conv = {2, 3, 2};
    s.activation = nn::ActivationFn::sigmoid;
    check("fcnn", arch::build<double>(s), {testkit::random_matrix(2, 30, 16), testkit::random_matrix(2, 14, 17)},
          [&](const nn::Tensor<double>& out) {
              static const std::vector<std::int32_t> y = {1, 3};
              return nn::softmax_cross_entropy(out, std::span<const std::int32_t>(y));
          });

    const double elapsed = seconds_since(start);
    return {worst <= tol && elapsed < 60.0,
            fmt("max relative error %.2e (%s), tolerance 1e-4, eps 1e-3, %.2f s (limit 60 s)", worst,
                worst_name.c_str(), elapsed)};
}

// ---- 2: shape ledger --------------------------------------------------------

Outcome shape_ledger() {
    const auto spec = arch::paper_spec(arch::ArchKind::fcnn);
    const auto net = arch::build<float>(spec);
    const auto ledger = arch::shape_ledger(net);
    auto entry = [&](const std::string& loc) -> const arch::ShapeEntry& {
        for (const auto& e : ledger)
            if (e.location == loc) return e;
        throw std::runtime_error("no layer at " + loc);
    };
    const auto& fconv = entry("stream0[0]").spec;
    const auto& fpool = entry("stream0[2]").spec;
    const auto& tconv = entry("stream1[0]").spec;
    const auto& tpool = entry("stream1[2]").spec;
    bool ok = fconv.positions == 40 && fconv.conv_out_positions() == 33 && fpool.pool_out_positions() == 11 &&
              fconv.n_filters == 200 && entry("stream0[2]").out_dim == 2200;
    ok = ok && tconv.positions == 17 && tconv.conv_out_positions() == 13 && tpool.pool_out_positions() == 2 &&
         tconv.n_filters == 75 && entry("stream1[2]").out_dim == 150;
    const auto fusion = net.fusion_layout();
    ok = ok && fusion.freq_stream_dims() == 2200 && fusion.time_stream_dims() == 150 && fusion.fused_dims == 2350;
    std::size_t hidden = 0;
    for (const auto& l : net.trunk)
        if (l.spec.kind == nn::LayerKind::dense && l.spec.n_out == 2048) ++hidden;
    ok = ok && hidden == 6 && net.trunk.front().spec.n_in == 2350;
    return {ok, fmt("freq %zu->%zu->%zu x %zu = %zu, time %zu->%zu->%zu x %zu = %zu, fused %zu, dense %zu x 2048",
                    fconv.positions, fconv.conv_out_positions(), fpool.pool_out_positions(), fconv.n_filters,
                    fusion.freq_stream_dims(), tconv.positions, tconv.conv_out_positions(),
                    tpool.pool_out_positions(), tconv.n_filters, fusion.time_stream_dims(), fusion.fused_dims,
                    hidden)};
}

// ---- 3: schedule ------------------------------------------------------------

Outcome schedule() {
    using training::Phase;
    const training::TrainConfig cfg;
    auto s = training::initial_state(cfg);
    std::size_t at_initial = 0;
    while (s.phase != Phase::stopped && s.lr == 0.008 && s.epoch < 50) {
        ++at_initial;
        s = training::schedule_update(s, 0.5, cfg);  // flat CV error
    }
    const bool flat_ok = at_initial == 4 && s.phase == Phase::halving && s.lr == 0.004;

    // Scripted: improvement below 0.5 % halves, below 0.1 % stops.
    auto run = [&](const std::vector<double>& errs) {
        auto st = training::initial_state(cfg);
        for (double e : errs) st = training::schedule_update(st, e, cfg);
        return st;
    };
    const auto halving = run({0.60, 0.50, 0.45, 0.448});
    const auto second = run({0.60, 0.50, 0.45, 0.448, 0.447});
    const auto kept = run({0.60, 0.50, 0.45, 0.448, 0.40});
    const auto stop_up = run({0.60, 0.50, 0.45, 0.448, 0.46});
    const auto stop_flat = run({0.60, 0.50, 0.45, 0.448, 0.4478});
    const bool transitions = halving.phase == Phase::halving && halving.lr == 0.004 &&
                             second.phase == Phase::halving && second.lr == 0.002 && kept.lr == 0.004 &&
                             stop_up.phase == Phase::stopped && stop_flat.phase == Phase::stopped;
    return {flat_ok && transitions,
            fmt("%zu epochs at 0.008 then %.4f; halving %s, stop on increase %s, stop on stall %s", at_initial, s.lr,
                halving.phase == Phase::halving ? "fired" : "missing",
                stop_up.phase == Phase::stopped ? "fired" : "missing",
                stop_flat.phase == Phase::stopped ? "fired" : "missing")};
}

// ---- 4: fCNN vs CNN ordering ----------------------------------------------

// 1000 utterances rather than the 500 minimum: the cv split is 2 %, and at
// 500 its error is noisy enough to stop some runs after a single bump.
Outcome ordering() {
    const auto start = clk::now();
    int wins = 0;
    std::string runs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        inversion::CorpusConfig cc;
        cc.n_utts = 1000;
        cc.severity_range = {0.3, 0.7};
        cc.seed = seed;
        const auto corpus = inversion::build_parallel_corpus(cc);
        const auto test = corpus.select(inversion::Split::test, inversion::Condition::noisy);

        training::TrainConfig tc;
        tc.rng_seed = seed;
        double acc[2] = {};
        int k = 0;
        for (auto kind : {arch::ArchKind::cnn, arch::ArchKind::fcnn}) {
            auto spec = arch::default_spec(kind, arch::Scale::toy);
            spec.activation = nn::ActivationFn::relu;
            const auto model = pipeline::train_acoustic_model(corpus, spec, pipeline::TvSource::ground_truth, tc);
            acc[k++] = pipeline::evaluate_acoustic_model(model, test).frame_accuracy;
        }
        wins += acc[1] >= acc[0];
        runs += fmt(" s%llu %.3f/%.3f", static_cast<unsigned long long>(seed), acc[1], acc[0]);
    }
    const double elapsed = seconds_since(start);
    return {wins >= 4 && elapsed <= 900.0,
            fmt("fCNN >= CNN in %d/5 runs (need 4), noisy test accuracy fCNN/CNN:%s, %.0f s (limit 900 s)", wins,
                runs.c_str(), elapsed)};
}

// ---- 5: inversion vs linear regression --------------------------------------

std::vector<inversion::TvTrajectory> linear_oracle(const inversion::ParallelCorpus& corpus,
                                                   const std::vector<const inversion::Utterance*>& test) {
    constexpr std::size_t D = 40;
    const auto train = corpus.select(inversion::Split::train);
    std::vector<dsp::FeatureMatrix> feats;
    dsp::ZStatsAccumulator acc;
    for (const auto* u : train) {
        feats.push_back(inversion::inversion_features(u->audio, D));
        acc.add(feats.back());
    }
    const auto stats = acc.finish();
    std::size_t rows = 0;
    for (const auto& f : feats) rows += f.frames();
    Eigen::MatrixXd X(rows, D + 1), Y(rows, inversion::kNumTvs);
    std::size_t r = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const auto z = dsp::apply_zstats(feats[i], stats);
        for (std::size_t t = 0; t < z.frames(); ++t, ++r) {
            for (std::size_t d = 0; d < D; ++d) X(r, d) = z(t, d);
            X(r, D) = 1.0;
            for (std::size_t v = 0; v < inversion::kNumTvs; ++v) Y(r, v) = train[i]->tvs(t, v);
        }
    }
    const Eigen::MatrixXd W = (X.transpose() * X).ldlt().solve(X.transpose() * Y);

    std::vector<inversion::TvTrajectory> out;
    for (const auto* u : test) {
        const auto z = dsp::apply_zstats(inversion::inversion_features(u->audio, D), stats);
        Eigen::MatrixXd Z(z.frames(), D + 1);
        for (std::size_t t = 0; t < z.frames(); ++t) {
            for (std::size_t d = 0; d < D; ++d) Z(t, d) = z(t, d);
            Z(t, D) = 1.0;
        }
        const Eigen::MatrixXd P = Z * W;
        inversion::TvTrajectory tv(z.frames(), dsp::FeatureLayout{inversion::kNumTvs, 1, 1}, 0.01);
        for (std::size_t t = 0; t < z.frames(); ++t)
            for (std::size_t v = 0; v < inversion::kNumTvs; ++v) tv(t, v) = P(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v));
        out.push_back(tv);
    }
    return out;
}

Outcome inversion_quality() {
    inversion::CorpusConfig cc;
    cc.n_utts = 500;
    cc.seed = 11;
    const auto corpus = inversion::build_parallel_corpus(cc);
    const auto model = inversion::train_inversion_model(corpus, inversion::InversionConfig::at_scale(arch::Scale::toy));
    const auto test = corpus.select(inversion::Split::test);
    std::vector<inversion::TvTrajectory> pred, truth;
    for (const auto* u : test) {
        pred.push_back(inversion::invert(model, u->audio));
        truth.push_back(u->tvs);
    }
    const auto cnn = inversion::tv_correlations(pred, truth);
    const auto lin = inversion::tv_correlations(linear_oracle(corpus, test), truth);
    int wins = 0;
    std::string per_tv;
    for (std::size_t v = 0; v < inversion::kNumTvs; ++v) {
        wins += cnn[v] > lin[v];
        per_tv += fmt(" %s %.3f/%.3f", std::string(inversion::tv_name(v)).c_str(), cnn[v], lin[v]);
    }
    return {wins >= 6, fmt("CNN beats linear oracle on %d/8 TVs (need 6), r CNN/linear:%s", wins, per_tv.c_str())};
}

// ---- 6: WER oracle ----------------------------------------------------------

Outcome wer_oracle() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(0, 12);
    std::uniform_int_distribution<int> word(0, 5);
    auto words = [&](std::size_t min_len) {
        std::vector<std::string> w(std::max(min_len, len(rng)));
        for (auto& s : w) s = "t" + std::to_string(word(rng));
        return w;
    };
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto ref = words(1), hyp = words(0);
        if (!(eval::levenshtein_wer(ref, hyp) == testkit::brute_force_wer(ref, hyp))) ++mismatches;
    }
    return {mismatches == 0, fmt("%d/1000 pairs differ from the brute-force oracle (S, D, I compared exactly)", mismatches)};
}

// ---- 7: determinism ---------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(ARTIC_CLI_PATH) + " " + args + " >> " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "artic_acceptance_determinism";
    fs::remove_all(root);
    std::string reports[2], models[2];
    for (int i = 0; i < 2; ++i) {
        const fs::path dir = root / ("run" + std::to_string(i));
        fs::create_directories(dir);
        const fs::path log = dir / "log.txt";
        std::ofstream(dir / "run.cfg") << "max_epochs = 3\n";
        const std::string common = "--seed 17 --config " + (dir / "run.cfg").string() + " --out ";
        const std::string corpus = (dir / "corpus").string();
        if (run_cli(common + corpus + " corpus-gen --n-utts 40", log) != 0 ||
            run_cli(common + (dir / "model").string() + " train --corpus " + corpus + " --arch fcnn", log) != 0 ||
            run_cli(common + (dir / "eval").string() + " evaluate --model " + (dir / "model" / "model.bin").string() +
                        " --corpus " + corpus + " --split test --condition all --train-data synthetic",
                    log) != 0)
            return {false, "pipeline run " + std::to_string(i) + " failed, see " + log.string()};
        models[i] = slurp(dir / "model" / "model.bin");
        reports[i] = slurp(dir / "eval" / "results.tsv") + slurp(dir / "eval" / "hyp.txt") +
                     slurp(dir / "model" / "train_log.jsonl");
    }
    const bool same_model = !models[0].empty() && models[0] == models[1];
    const bool same_report = !reports[0].empty() && reports[0] == reports[1];
    return {same_model && same_report, fmt("checkpoints %s (%zu bytes), reports %s", same_model ? "identical" : "DIFFER",
                                           models[0].size(), same_report ? "identical" : "DIFFER")};
}

// ---- 8: table format ---------------------------------------------------------

Outcome table_format() {
    const std::vector<eval::ResultRow> rows = {{"DNN", "FB", "Dys. NL", 22.9},
                                               {"CNN", "FB", "Dys. NL", 21.1},
                                               {"TFCNN", "FB", "Dys. NL", 20.3},
                                               {"fCNN", "FB + TV", "Dys. NL", 19.1}};
    const auto table = eval::results_table(rows);
    const bool bold = table.find("| fCNN | FB + TV | Dys. NL | **19.1** |") != std::string::npos;
    std::size_t n_bold = 0;
    for (std::size_t p = table.find("**"); p != std::string::npos; p = table.find("**", p + 2)) ++n_bold;
    return {bold && n_bold == 2, fmt("fCNN row %s, %zu bold cell(s)", bold ? "bold" : "NOT bold", n_bold / 2)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"gradient suite", gradient_suite},    {"shape ledger", shape_ledger},
        {"lr schedule", schedule},             {"fCNN vs CNN ordering", ordering},
        {"inversion vs linear oracle", inversion_quality}, {"WER oracle equivalence", wer_oracle},
        {"pipeline determinism", determinism}, {"results table format", table_format},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        const auto t0 = clk::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
