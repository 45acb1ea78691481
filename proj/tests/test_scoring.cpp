#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "regimehmm/scoring.hpp"

using regimehmm::Error;
namespace hmm = regimehmm::hmm;
namespace labeling = regimehmm::labeling;
namespace scoring = regimehmm::scoring;

namespace {

scoring::CountMatrix counts_of(std::vector<std::array<std::int64_t, 3>> rows) {
    scoring::CountMatrix m;
    m.counts = std::move(rows);
    return m;
}

labeling::LabelSeries labels_from(const std::vector<int>& values) {
    labeling::LabelSeries labels;
    labels.labels = values;
    labels.defined.assign(values.size(), 1);
    labels.touch_index.assign(values.size(), 0);
    labels.barrier_hit.assign(values.size(), labeling::BarrierHit::vertical);
    return labels;
}

}  // namespace

TEST_CASE("count_matrix: worked cases") {
    SUBCASE("all state 0, all +1") {
        hmm::StatePath path;
        path.states.assign(10, 0);
        const auto m = scoring::count_matrix(path, labels_from(std::vector<int>(10, 1)));
        CHECK(m.counts[0][2] == 10);
        CHECK(m.counts[0][0] == 0);
        CHECK(m.counts[0][1] == 0);
    }
    SUBCASE("alternating states with parity-matched labels") {
        hmm::StatePath path;
        std::vector<int> labels;
        for (int t = 0; t < 12; ++t) {
            path.states.push_back(t % 2);
            labels.push_back(t % 2 == 0 ? 1 : -1);
        }
        const auto m = scoring::count_matrix(path, labels_from(labels));
        CHECK(m.counts[0][2] == 6);
        CHECK(m.counts[1][0] == 6);
        CHECK(m.counts[0][0] == 0);
        CHECK(m.counts[1][2] == 0);
    }
    SUBCASE("random instance equals the double-loop oracle") {
        std::mt19937_64 rng(50);
        hmm::StatePath path;
        labeling::LabelSeries labels;
        for (int t = 0; t < 50; ++t) {
            path.states.push_back(static_cast<int>(rng() % 3));
            labels.labels.push_back(static_cast<int>(rng() % 3) - 1);
            labels.defined.push_back(rng() % 4 != 0);
        }
        labels.touch_index.assign(50, 0);
        labels.barrier_hit.assign(50, labeling::BarrierHit::vertical);
        const auto m = scoring::count_matrix(path, labels);

        std::int64_t oracle[3][3] = {};
        for (int t = 0; t < 50; ++t) {
            if (labels.defined[t]) {
                oracle[path.states[t]][labels.labels[t] + 1] += 1;
            }
        }
        for (std::size_t i = 0; i < m.counts.size(); ++i) {
            for (int j = 0; j < 3; ++j) {
                CHECK(m.counts[i][j] == oracle[i][j]);
            }
        }
    }
    SUBCASE("all labels undefined is an error") {
        hmm::StatePath path;
        path.states.assign(5, 0);
        labeling::LabelSeries labels;
        labels.labels.assign(5, 0);
        labels.defined.assign(5, 0);
        labels.touch_index.assign(5, 0);
        labels.barrier_hit.assign(5, labeling::BarrierHit::none);
        CHECK_THROWS_AS((void)scoring::count_matrix(path, labels), Error);
    }
}

TEST_CASE("score: worked examples recomputed by the direct oracle") {
    SUBCASE("perfect separation scores 1") {
        const auto m = counts_of({{10, 0, 0}, {0, 20, 0}, {0, 0, 30}});
        const auto s = scoring::score(m);
        CHECK(s.total == doctest::Approx(1.0).epsilon(1e-12));
        for (int i = 0; i < 3; ++i) {
            CHECK(s.acc[i] == doctest::Approx(1.0));
            CHECK(s.entropy[i] == doctest::Approx(0.0));
        }
        CHECK(s.total == doctest::Approx(oracles::score_direct(m.counts)).epsilon(1e-12));
    }
    SUBCASE("uniform counts") {
        const auto m = counts_of({{5, 5, 5}, {5, 5, 5}, {5, 5, 5}});
        const auto s = scoring::score(m);
        const double expected = (1.0 / 3.0) / (1.0 + std::log(3.0));
        CHECK(s.total == doctest::Approx(expected).epsilon(1e-9));
        CHECK(s.total == doctest::Approx(oracles::score_direct(m.counts)).epsilon(1e-12));
        for (int i = 0; i < 3; ++i) {
            CHECK(s.acc[i] == doctest::Approx(1.0 / 3.0));
            CHECK(s.entropy[i] == doctest::Approx(std::log(3.0)));
        }
    }
    SUBCASE("two-state example from the row terms") {
        const auto m = counts_of({{8, 2, 0}, {0, 1, 9}});
        const auto s = scoring::score(m);
        CHECK(s.total == doctest::Approx(oracles::score_direct(m.counts)).epsilon(1e-12));
        CHECK(s.total == doctest::Approx(0.6062).epsilon(1e-3));
    }
    SUBCASE("weights sum to one over non-empty rows") {
        const auto m = counts_of({{3, 1, 0}, {0, 0, 0}, {2, 2, 2}});
        const auto s = scoring::score(m);
        CHECK(s.weight[0] + s.weight[1] + s.weight[2] == doctest::Approx(1.0));
        CHECK(s.weight[1] == 0.0);
    }
}

TEST_CASE("score invariances") {
    std::mt19937_64 rng(60);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<std::array<std::int64_t, 3>> rows(3);
        for (auto& row : rows) {
            for (auto& v : row) {
                v = static_cast<std::int64_t>(rng() % 20);
            }
        }
        rows[0][0] += 1;  // keep the matrix non-empty
        const double base = scoring::score(counts_of(rows)).total;

        auto scaled = rows;
        for (auto& row : scaled) {
            for (auto& v : row) {
                v *= 7;
            }
        }
        CHECK(scoring::score(counts_of(scaled)).total ==
              doctest::Approx(base).epsilon(1e-12));

        auto permuted = rows;
        std::swap(permuted[0], permuted[2]);
        CHECK(scoring::score(counts_of(permuted)).total ==
              doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("rank_features: leak feature wins, noise scores near baseline") {
    // Build a series whose labels are known, then plant a feature equal to
    // the label signal and a pure-noise feature.
    std::mt19937_64 rng(71);
    std::normal_distribution<double> step(0.0, 0.02);
    std::vector<double> closes{100.0};
    for (int t = 1; t < 700; ++t) {
        closes.push_back(closes.back() * std::exp(step(rng)));
    }
    labeling::BarSeries series;
    for (int t = 0; t < 700; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-01-01", 1000 + t);
        series.timestamps.push_back(buf);
    }
    series.close = closes;

    labeling::BarrierConfig barrier;
    barrier.use_high_low = false;
    const auto labels = labeling::triple_barrier(series, barrier);

    std::normal_distribution<double> jitter(0.0, 0.01);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto& leak = series.add_factor("leak");
    auto& iid = series.add_factor("iid_noise");
    for (std::size_t t = 0; t < series.size(); ++t) {
        leak[t] = (labels.defined[t] ? labels.labels[t] : 0) + jitter(rng);
        iid[t] = noise(rng);
    }

    regimehmm::train::FitConfig fit;
    fit.n_states = 3;
    fit.seed = 7;
    fit.max_iters = 80;
    const std::vector<std::string> names{"leak", "iid_noise"};
    const auto result = scoring::rank_features(series, names, barrier, fit);

    REQUIRE(result.ranked.size() == 2);
    CHECK(result.failures.empty());
    CHECK(result.ranked[0].name == "leak");
    CHECK(result.ranked[0].score.total > 0.9);

    // Baseline for a feature independent of labels: states see the label
    // marginals, so every row ratio is the marginal distribution.
    std::array<std::int64_t, 3> marginal{};
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels.defined[t]) {
            marginal[labels.labels[t] + 1] += 1;
        }
    }
    const double baseline = oracles::score_direct({marginal});
    CHECK(std::abs(result.ranked[1].score.total - baseline) < 0.15);
    CHECK(result.ranked[1].score.total < result.ranked[0].score.total - 0.3);
}

TEST_CASE("rank_features: duplicated columns tie and sort by name") {
    std::mt19937_64 rng(81);
    std::normal_distribution<double> step(0.0, 0.015);
    labeling::BarSeries series;
    std::vector<double> closes{100.0};
    for (int t = 1; t < 300; ++t) {
        closes.push_back(closes.back() * std::exp(step(rng)));
    }
    for (int t = 0; t < 300; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-01-01", 1000 + t);
        series.timestamps.push_back(buf);
    }
    series.close = closes;
    std::normal_distribution<double> noise(0.0, 1.0);
    auto& a = series.add_factor("alpha");
    for (auto& v : a) {
        v = noise(rng);
    }
    series.add_factor("beta") = *series.factor("alpha");

    labeling::BarrierConfig barrier;
    barrier.use_high_low = false;
    regimehmm::train::FitConfig fit;
    fit.seed = 3;
    fit.max_iters = 50;
    const std::vector<std::string> names{"beta", "alpha"};
    const auto result = scoring::rank_features(series, names, barrier, fit);
    REQUIRE(result.ranked.size() == 2);
    CHECK(result.ranked[0].score.total == result.ranked[1].score.total);
    CHECK(result.ranked[0].name == "alpha");  // tie broken by name
}

TEST_CASE("rank_features: fit failures are recorded, unknown columns are fatal") {
    labeling::BarSeries series;
    std::vector<double> closes;
    for (int t = 0; t < 50; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-01-01", 1000 + t);
        series.timestamps.push_back(buf);
        closes.push_back(100.0 + (t % 2));
    }
    series.close = closes;
    auto& bad = series.add_factor("has_nan");
    bad[10] = std::numeric_limits<double>::quiet_NaN();

    labeling::BarrierConfig barrier;
    barrier.use_high_low = false;
    regimehmm::train::FitConfig fit;
    fit.max_iters = 20;

    const std::vector<std::string> names{"has_nan"};
    const auto result = scoring::rank_features(series, names, barrier, fit);
    CHECK(result.ranked.empty());
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].first == "has_nan");

    const std::vector<std::string> missing{"absent"};
    CHECK_THROWS_AS((void)scoring::rank_features(series, missing, barrier, fit), Error);
}
