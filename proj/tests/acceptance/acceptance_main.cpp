// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion carries its tolerance inline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "regimehmm/csv.hpp"
#include "regimehmm/gbt.hpp"
#include "regimehmm/kernels.hpp"
#include "regimehmm/lstm.hpp"
#include "regimehmm/pipeline.hpp"
#include "regimehmm/scoring.hpp"
#include "regimehmm/trainers.hpp"

namespace fs = std::filesystem;
using regimehmm::Matrix;
using regimehmm::ObservationMatrix;
namespace hmm = regimehmm::hmm;
namespace gbt = regimehmm::gbt;
namespace lstm = regimehmm::lstm;
namespace train = regimehmm::train;
namespace pl = regimehmm::pipeline;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] %2d. %-22s %s (%.1fs)\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) {
        ++g_failures;
    }
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --- criterion 1: oracle equivalence on 200 random instances ---

void criterion_oracle_equivalence() {
    Timer timer;
    std::mt19937_64 rng(10001);
    std::uniform_int_distribution<int> n_dist(1, 3);
    std::uniform_int_distribution<std::size_t> t_dist(1, 8);

    double worst = 0.0;
    bool paths_ok = true;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = n_dist(rng);
        const std::size_t steps = t_dist(rng);
        const auto chain = oracles::random_chain(rng, n);
        const auto emis = oracles::random_emission_logs(rng, n, steps);

        const auto oracle = oracles::enumerate_paths(chain, emis);
        const auto post = hmm::posteriors(chain, emis);
        worst = std::max(worst, std::abs(post.log_likelihood - oracle.log_likelihood));
        for (int i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < steps; ++t) {
                worst = std::max(worst, std::abs(post.gamma(i, t) - oracle.gamma(i, t)));
            }
        }
        for (std::size_t t = 0; t + 1 < steps; ++t) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    worst = std::max(worst,
                                     std::abs(post.xi[t](i, j) - oracle.xi[t](i, j)));
                }
            }
        }
        const auto path = hmm::viterbi(chain, emis);
        paths_ok = paths_ok && path.states == oracle.best_path;
        worst = std::max(worst, std::abs(path.path_log_score - oracle.best_log_score));
    }
    const double secs = timer.seconds();
    report(1, "oracle equivalence",
           worst < 1e-9 && paths_ok && secs < 10.0,
           "200 instances, max |err| = " + fmt(worst) + ", viterbi paths " +
               (paths_ok ? "exact" : "MISMATCH"),
           secs);
}

// --- criterion 2: EM monotonicity ---

void criterion_em_monotonicity() {
    Timer timer;
    std::mt19937_64 rng(10002);
    std::normal_distribution<double> normal(0.0, 1.5);

    double worst_drop = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        ObservationMatrix obs(500, 1);
        for (std::size_t t = 0; t < 500; ++t) {
            obs.at(t, 0) = normal(rng);
        }
        train::FitConfig cfg;
        cfg.n_states = 3;
        cfg.max_iters = 25;
        cfg.tol = 1e-12;
        cfg.seed = rep;
        const auto model = train::fit_mixture_hmm(obs, cfg);
        const auto& trace = model.trace.log_likelihood;
        for (std::size_t i = 1; i < trace.size(); ++i) {
            worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
        }
    }
    const double secs = timer.seconds();
    report(2, "EM monotonicity", worst_drop <= 1e-8 && secs < 60.0,
           "50 instances (N=3, T=500), worst decrease = " + fmt(worst_drop), secs);
}

// --- criteria 3 and 4: parameter recovery and the hybrid comparison ---

struct RecoveryOutcome {
    int recovered = 0;
    double mean_mixture_acc = 0.0;
    double mean_boosted_acc = 0.0;
    double secs3 = 0.0;
};

double permuted_accuracy(const std::vector<int>& decoded, const std::vector<int>& truth,
                         int n_states, std::vector<int>* best_perm = nullptr) {
    std::vector<int> perm(n_states);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
        std::size_t hits = 0;
        for (std::size_t t = 0; t < truth.size(); ++t) {
            hits += perm[decoded[t]] == truth[t] ? 1 : 0;
        }
        const double acc = static_cast<double>(hits) / truth.size();
        if (acc > best) {
            best = acc;
            if (best_perm != nullptr) {
                *best_perm = perm;
            }
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

RecoveryOutcome run_recovery() {
    Timer timer;
    RecoveryOutcome out;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto gen = pl::SynthConfig::default_three_state();
        gen.n_bars = 5000;
        gen.seed = 20000 + seed;
        gen.n_factor_cols = 1;
        const auto series = pl::synth(gen);
        const auto obs = ObservationMatrix::from_columns({*series.factor("f1")});
        std::vector<int> truth;
        for (double v : *series.factor("state_truth")) {
            truth.push_back(static_cast<int>(v));
        }

        train::FitConfig cfg;
        cfg.n_states = 3;
        cfg.max_iters = 200;
        cfg.seed = seed;
        const auto mixture = train::fit_mixture_hmm(obs, cfg);

        std::vector<int> perm;
        const double acc =
            permuted_accuracy(train::decode(mixture, obs).states, truth, 3, &perm);
        out.mean_mixture_acc += acc / 10.0;

        double max_row_l1 = 0.0;
        for (int i = 0; i < 3; ++i) {
            double l1 = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double truth_a = perm[i] == perm[j] ? 0.9 : 0.05;
                l1 += std::abs(mixture.chain.trans(i, j) - truth_a);
            }
            max_row_l1 = std::max(max_row_l1, l1);
        }
        if (max_row_l1 <= 0.1 && acc >= 0.9) {
            ++out.recovered;
        }
        out.secs3 = timer.seconds();

        train::FitConfig boosted_cfg = cfg;
        boosted_cfg.emission = train::EmissionKind::boosted;
        boosted_cfg.max_iters = 10;
        boosted_cfg.boosted.n_rounds = 40;
        const auto boosted = train::fit_boosted_hmm(obs, boosted_cfg);
        out.mean_boosted_acc +=
            permuted_accuracy(train::decode(boosted, obs).states, truth, 3) / 10.0;
    }
    return out;
}

// --- criterion 5: boosted-tree properties ---

void criterion_boosted_properties() {
    Timer timer;
    std::mt19937_64 rng(10005);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double worst_rise = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 50 + rng() % 100;
        const std::size_t d = 1 + rng() % 3;
        ObservationMatrix x(n, d);
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t c = 0; c < d; ++c) {
                x.at(t, c) = normal(rng);
            }
        }
        Matrix targets(n, 3);
        for (std::size_t t = 0; t < n; ++t) {
            double total = 0.0;
            for (int c = 0; c < 3; ++c) {
                targets(t, c) = unit(rng) + 1e-3;
                total += targets(t, c);
            }
            for (int c = 0; c < 3; ++c) {
                targets(t, c) /= total;
            }
        }
        gbt::BoostParams params;
        params.n_rounds = 25;
        const auto ensemble = gbt::fit_soft(x, targets, params);
        for (std::size_t r = 1; r < ensemble.train_loss.size(); ++r) {
            worst_rise = std::max(worst_rise,
                                  ensemble.train_loss[r] - ensemble.train_loss[r - 1]);
        }
    }

    int stumps_exact = 0;
    for (int rep = 0; rep < 20; ++rep) {
        std::uniform_real_distribution<double> low(0.0, 1.0), high(5.0, 6.0);
        std::vector<double> x;
        std::vector<double> g, h;
        Matrix targets(50, 2);
        for (int t = 0; t < 50; ++t) {
            const bool upper = t % 2 == 0;
            x.push_back(upper ? high(rng) : low(rng));
            targets(t, upper ? 1 : 0) = 1.0;
        }
        for (int t = 0; t < 50; ++t) {
            g.push_back(0.5 - targets(t, 0));
            h.push_back(0.25);
        }
        gbt::BoostParams params;
        params.n_rounds = 1;
        params.max_depth = 1;
        const auto ensemble =
            gbt::fit_soft(ObservationMatrix::from_columns({x}), targets, params);
        const auto& root = ensemble.rounds[0][0].nodes[0];
        const auto oracle = oracles::exhaustive_stump(x, g, h, params.reg_lambda);
        if (!root.is_leaf() && std::abs(root.threshold - oracle.threshold) < 1e-12) {
            ++stumps_exact;
        }
    }

    const double secs = timer.seconds();
    report(5, "boosted-tree properties", worst_rise <= 1e-10 && stumps_exact == 20,
           "worst loss increase = " + fmt(worst_rise) + ", stump thresholds exact " +
               std::to_string(stumps_exact) + "/20",
           secs);
}

// --- criterion 6: LSTM gradient check ---

void criterion_lstm_gradients() {
    Timer timer;
    std::mt19937_64 rng(10006);
    std::uniform_real_distribution<double> param_dist(-0.4, 0.4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double max_rel = 0.0;
    for (int point = 0; point < 10; ++point) {
        auto p = lstm::LstmParams::zeros(4, 3);
        for (Matrix* m : {&p.w_forget, &p.w_input, &p.w_cand, &p.w_output,
                          &p.w_readout}) {
            for (double& v : m->data()) {
                v = param_dist(rng);
            }
        }
        for (auto* b : {&p.b_forget, &p.b_input, &p.b_cand, &p.b_output,
                        &p.b_readout}) {
            for (double& v : *b) {
                v = param_dist(rng);
            }
        }
        lstm::StackedInput input;
        input.x = Matrix(4, 5);
        for (double& v : input.x.data()) {
            v = unit(rng);
        }
        input.targets.resize(5);
        input.defined.assign(5, 1);
        for (auto& y : input.targets) {
            y = static_cast<int>(rng() % 3) - 1;
        }

        const auto grads = lstm::lstm_gradients(p, input);
        std::vector<double*> cells;
        for (Matrix* m : {&p.w_forget, &p.w_input, &p.w_cand, &p.w_output,
                          &p.w_readout}) {
            for (double& v : m->data()) {
                cells.push_back(&v);
            }
        }
        for (auto* b : {&p.b_forget, &p.b_input, &p.b_cand, &p.b_output,
                        &p.b_readout}) {
            for (double& v : *b) {
                cells.push_back(&v);
            }
        }
        std::vector<const double*> grad_cells;
        for (const Matrix* m : {&grads.wrt.w_forget, &grads.wrt.w_input,
                                &grads.wrt.w_cand, &grads.wrt.w_output,
                                &grads.wrt.w_readout}) {
            for (const double& v : m->data()) {
                grad_cells.push_back(&v);
            }
        }
        for (const auto* b : {&grads.wrt.b_forget, &grads.wrt.b_input,
                              &grads.wrt.b_cand, &grads.wrt.b_output,
                              &grads.wrt.b_readout}) {
            for (const double& v : *b) {
                grad_cells.push_back(&v);
            }
        }

        const double step = 1e-5;
        for (std::size_t idx = 0; idx < cells.size(); ++idx) {
            const double saved = *cells[idx];
            *cells[idx] = saved + step;
            const double up = lstm::lstm_gradients(p, input).loss;
            *cells[idx] = saved - step;
            const double down = lstm::lstm_gradients(p, input).loss;
            *cells[idx] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = *grad_cells[idx];
            max_rel = std::max(max_rel,
                               std::abs(analytic - numeric) /
                                   std::max({std::abs(analytic), std::abs(numeric),
                                             1e-6}));
        }
    }
    report(6, "LSTM gradient check", max_rel < 1e-4,
           "10 points (k=4, hidden=3, T=5), max rel err = " + fmt(max_rel),
           timer.seconds());
}

// --- criterion 7: end-to-end synthetic pipeline ---

void criterion_end_to_end() {
    Timer timer;
    const fs::path dir = fs::temp_directory_path() / "regimehmm_acceptance_e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);

    int wins = 0;
    std::string per_seed;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto gen = pl::SynthConfig::default_three_state();
        gen.drift_scale = 2.0;  // state drift of +-2 return-vols
        gen.n_bars = 2200;
        gen.seed = 30000 + seed;
        const auto train_csv = dir / ("train_" + std::to_string(seed) + ".csv");
        pl::cmd_synth(gen, train_csv);
        gen.n_bars = 1100;
        gen.seed = 40000 + seed;
        const auto test_csv = dir / ("test_" + std::to_string(seed) + ".csv");
        pl::cmd_synth(gen, test_csv);

        pl::PipelineConfig config;
        config.seed = seed;
        config.groups = {{"g1", {"f1"}, ""}, {"g2", {"f2"}, ""}};
        config.fit.emission = train::EmissionKind::boosted;
        config.fit.max_iters = 8;
        config.fit.boosted.n_rounds = 30;
        config.lstm.epochs = 80;
        config.lstm.hidden_dim = 8;

        const auto ds_train = pl::load_dataset(train_csv, config);
        auto bundle = pl::train_groups(ds_train, config);
        pl::fit_lstm_head(bundle, ds_train);

        const fs::path model_path = dir / ("model_" + std::to_string(seed) + ".json");
        pl::save_bundle(model_path, bundle);
        const auto report_out =
            pl::cmd_eval(model_path, test_csv, dir / ("eval_" + std::to_string(seed)));

        const bool win = report_out.accuracy >= report_out.majority_baseline + 0.10;
        wins += win ? 1 : 0;
        per_seed += (per_seed.empty() ? "" : " ") + fmt(report_out.accuracy) + "/" +
                    fmt(report_out.majority_baseline);
    }
    fs::remove_all(dir);
    const double secs = timer.seconds();
    report(7, "end-to-end synthetic", wins >= 8 && secs < 300.0,
           std::to_string(wins) + "/10 seeds beat baseline+10pp [acc/base: " +
               per_seed + "]",
           secs);
}

// --- criterion 8: score-function exactness ---

void criterion_score_exactness() {
    Timer timer;
    using Counts = std::vector<std::array<std::int64_t, 3>>;
    const Counts perfect = {{{10, 0, 0}}, {{0, 20, 0}}, {{0, 0, 30}}};
    const Counts uniform = {{{5, 5, 5}}, {{5, 5, 5}}, {{5, 5, 5}}};
    const Counts two_state = {{{8, 2, 0}}, {{0, 1, 9}}};

    double worst = 0.0;
    for (const auto& counts : {perfect, uniform, two_state}) {
        regimehmm::scoring::CountMatrix m;
        m.counts = counts;
        const double direct = oracles::score_direct(counts);
        worst = std::max(worst, std::abs(regimehmm::scoring::score(m).total - direct));
    }
    regimehmm::scoring::CountMatrix perfect_m;
    perfect_m.counts = perfect;
    const bool anchors_ok =
        std::abs(regimehmm::scoring::score(perfect_m).total - 1.0) < 1e-12 &&
        std::abs(oracles::score_direct(uniform) -
                 (1.0 / 3.0) / (1.0 + std::log(3.0))) < 1e-9 &&
        std::abs(oracles::score_direct(two_state) - 0.6062) < 1e-3;
    report(8, "score exactness", worst < 1e-6 && anchors_ok,
           "3 worked matrices, max |impl - oracle| = " + fmt(worst), timer.seconds());
}

// --- criterion 9: labeler oracle ---

void criterion_labeler_oracle() {
    Timer timer;
    std::mt19937_64 rng(10009);
    std::normal_distribution<double> step(0.0, 0.02);
    std::uniform_real_distribution<double> wick(0.0, 0.02);

    regimehmm::labeling::BarrierConfig cfg;
    std::size_t mismatches = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        regimehmm::labeling::BarSeries series;
        std::vector<double> closes{100.0};
        for (int t = 1; t < 40; ++t) {
            closes.push_back(closes.back() * std::exp(step(rng)));
        }
        for (int t = 0; t < 40; ++t) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%04d-01-01", 1000 + t);
            series.timestamps.push_back(buf);
        }
        series.close = closes;
        series.high.resize(40);
        series.low.resize(40);
        for (int t = 0; t < 40; ++t) {
            series.high[t] = closes[t] * std::exp(wick(rng));
            series.low[t] = closes[t] * std::exp(-wick(rng));
        }

        const auto labels = regimehmm::labeling::triple_barrier(series, cfg);
        const auto sigma =
            regimehmm::labeling::ewma_volatility(series.close, cfg.vol_span);
        for (std::size_t t0 = 0; t0 + cfg.horizon < series.size(); ++t0) {
            const auto oracle = oracles::scan_barriers(series, sigma, t0, cfg);
            if (!labels.defined[t0] || labels.labels[t0] != oracle.label ||
                labels.touch_index[t0] != oracle.touch ||
                labels.barrier_hit[t0] != oracle.hit) {
                ++mismatches;
            }
        }
    }
    report(9, "labeler oracle", mismatches == 0,
           "1000 random walks, mismatches = " + std::to_string(mismatches),
           timer.seconds());
}

// --- criterion 10: byte-identical determinism ---

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void criterion_determinism() {
    Timer timer;
    const fs::path dir = fs::temp_directory_path() / "regimehmm_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);

    auto gen = pl::SynthConfig::default_three_state();
    gen.n_bars = 500;
    gen.seed = 777;
    const auto train_csv = dir / "train.csv";
    pl::cmd_synth(gen, train_csv);
    gen.n_bars = 300;
    gen.seed = 778;
    const auto test_csv = dir / "test.csv";
    pl::cmd_synth(gen, test_csv);

    pl::PipelineConfig config;
    config.seed = 31337;
    config.groups = {{"g1", {"f1"}, ""}, {"g2", {"f2"}, ""}};
    config.fit.emission = train::EmissionKind::boosted;
    config.fit.max_iters = 6;
    config.fit.boosted.n_rounds = 12;
    config.lstm.epochs = 20;
    config.lstm.hidden_dim = 6;

    auto run = [&](const char* tag) {
        const fs::path out = dir / tag;
        fs::create_directories(out);
        pl::cmd_train(train_csv, config, out);
        pl::cmd_train_lstm(out / "model.json", train_csv, out);
        (void)pl::cmd_eval(out / "model.json", test_csv, out);
    };
    run("a");
    run("b");

    bool identical = true;
    std::string detail;
    for (const char* name : {"model.json", "trace.csv", "eval.csv", "confusion.csv"}) {
        const auto a = slurp(dir / "a" / name);
        const bool same = !a.empty() && a == slurp(dir / "b" / name);
        identical = identical && same;
        if (!same) {
            detail += std::string(name) + " differs; ";
        }
    }
    fs::remove_all(dir);
    report(10, "determinism", identical,
           identical ? "model bundle and reports byte-identical across runs" : detail,
           timer.seconds());
}

}  // namespace

int main() {
    std::printf("acceptance suite (kernels: %s)\n",
                std::string(regimehmm::kernels::isa_name(regimehmm::kernels::active()))
                    .c_str());

    criterion_oracle_equivalence();
    criterion_em_monotonicity();

    {
        Timer timer;
        const auto outcome = run_recovery();
        report(3, "parameter recovery", outcome.recovered >= 9 && outcome.secs3 < 120.0,
               std::to_string(outcome.recovered) +
                   "/10 seeds within row-L1 0.1 and decode acc 0.9",
               outcome.secs3);
        report(4, "hybrid comparison",
               outcome.mean_boosted_acc >= outcome.mean_mixture_acc - 0.02,
               "mean decode acc: boosted " + fmt(outcome.mean_boosted_acc) +
                   " vs mixture " + fmt(outcome.mean_mixture_acc) + " - 0.02",
               timer.seconds());
    }

    criterion_boosted_properties();
    criterion_lstm_gradients();
    criterion_end_to_end();
    criterion_score_exactness();
    criterion_labeler_oracle();
    criterion_determinism();

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 10 criteria passed\n");
    return 0;
}
