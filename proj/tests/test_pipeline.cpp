#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "regimehmm/csv.hpp"
#include "regimehmm/pipeline.hpp"

namespace fs = std::filesystem;
using regimehmm::Error;
using regimehmm::ErrorCode;
namespace io = regimehmm::io;
namespace pl = regimehmm::pipeline;
namespace labeling = regimehmm::labeling;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("regimehmm_test_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

pl::PipelineConfig synthetic_config(std::uint64_t seed) {
    pl::PipelineConfig config;
    config.seed = seed;
    config.groups = {{"g1", {"f1"}, ""}, {"g2", {"f2"}, ""}};
    config.fit.max_iters = 40;
    config.fit.emission = regimehmm::train::EmissionKind::boosted;
    config.fit.boosted.n_rounds = 15;
    config.lstm.epochs = 25;
    config.lstm.hidden_dim = 6;
    return config;
}

fs::path write_synth(const TempDir& dir, const char* name, std::uint64_t seed,
                     std::size_t bars) {
    auto cfg = pl::SynthConfig::default_three_state();
    cfg.seed = seed;
    cfg.n_bars = bars;
    const fs::path out = dir.path / name;
    pl::cmd_synth(cfg, out);
    return out;
}

}  // namespace

TEST_CASE("bar CSV round-trips bit-exactly") {
    TempDir dir("csv");
    auto cfg = pl::SynthConfig::default_three_state();
    cfg.n_bars = 60;
    cfg.seed = 5;
    const auto series = pl::synth(cfg);
    io::write_bar_csv(dir.path / "a.csv", series);
    const auto loaded = io::read_bar_csv(dir.path / "a.csv");

    REQUIRE(loaded.size() == series.size());
    CHECK(loaded.timestamps == series.timestamps);
    CHECK(loaded.close == series.close);
    CHECK(loaded.high == series.high);
    CHECK(loaded.volume == series.volume);
    REQUIRE(loaded.factors.size() == series.factors.size());
    for (std::size_t c = 0; c < series.factors.size(); ++c) {
        CHECK(loaded.factors[c].first == series.factors[c].first);
        CHECK(loaded.factors[c].second == series.factors[c].second);
    }

    io::write_bar_csv(dir.path / "b.csv", loaded);
    CHECK(slurp(dir.path / "a.csv") == slurp(dir.path / "b.csv"));
}

TEST_CASE("CSV parse errors carry the row index") {
    TempDir dir("csv_err");
    {
        std::ofstream out(dir.path / "bad.csv");
        out << "date,close\n2020-01-01,100\n2020-01-02,oops\n";
    }
    try {
        (void)io::read_bar_csv(dir.path / "bad.csv");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_failure);
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }

    {
        std::ofstream out(dir.path / "nan.csv");
        out << "date,close,f1\n2020-01-01,100,\n2020-01-02,101,nan\n2020-01-03,102,1\n";
    }
    const auto series = io::read_bar_csv(dir.path / "nan.csv");
    CHECK(std::isnan((*series.factor("f1"))[0]));
    CHECK(std::isnan((*series.factor("f1"))[1]));
    CHECK((*series.factor("f1"))[2] == 1.0);
}

TEST_CASE("derive_market_features matches direct formula evaluation") {
    labeling::BarSeries series;
    const double closes[] = {100.0, 102.0, 101.0, 104.0, 103.0, 106.0};
    for (int t = 0; t < 6; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "2020-02-%02d", t + 1);
        series.timestamps.push_back(buf);
        series.close.push_back(closes[t]);
        series.pre_close.push_back(t == 0 ? 99.0 : closes[t - 1]);
        series.open.push_back(series.pre_close.back() * 1.001);
        series.high.push_back(std::max(series.open.back(), closes[t]) * 1.01);
        series.low.push_back(std::min(series.open.back(), closes[t]) * 0.99);
    }
    pl::derive_market_features(series);

    const auto& ret5 = *series.factor("ret_5d_log");
    for (int t = 0; t < 5; ++t) {
        CHECK(std::isnan(ret5[t]));
    }
    CHECK(ret5[5] == doctest::Approx(std::log(106.0 / 100.0)).epsilon(1e-12));
    CHECK((*series.factor("hl_log_ratio"))[2] ==
          doctest::Approx(std::log(series.high[2] / series.low[2])).epsilon(1e-12));
    CHECK((*series.factor("close_over_preclose"))[3] ==
          doctest::Approx(104.0 / 101.0).epsilon(1e-12));
    CHECK((*series.factor("open_over_preclose"))[1] ==
          doctest::Approx(series.open[1] / 100.0).epsilon(1e-12));
    CHECK((*series.factor("high_over_preclose"))[4] ==
          doctest::Approx(series.high[4] / 104.0).epsilon(1e-12));
    CHECK((*series.factor("low_over_preclose"))[4] ==
          doctest::Approx(series.low[4] / 104.0).epsilon(1e-12));

    SUBCASE("constant prices give zero log ratios and unit price ratios") {
        labeling::BarSeries flat;
        for (int t = 0; t < 8; ++t) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "2020-03-%02d", t + 1);
            flat.timestamps.push_back(buf);
            flat.open.push_back(50.0);
            flat.high.push_back(50.0);
            flat.low.push_back(50.0);
            flat.close.push_back(50.0);
            flat.pre_close.push_back(50.0);
        }
        pl::derive_market_features(flat);
        CHECK((*flat.factor("ret_5d_log"))[6] == 0.0);
        CHECK((*flat.factor("hl_log_ratio"))[0] == 0.0);
        CHECK((*flat.factor("close_over_preclose"))[3] == 1.0);
        CHECK((*flat.factor("open_over_preclose"))[3] == 1.0);
    }
    SUBCASE("non-positive prices are rejected") {
        series.close[2] = -1.0;
        CHECK_THROWS_AS(pl::derive_market_features(series), Error);
    }
}

TEST_CASE("synth: absorbing chain, determinism, transition frequencies") {
    SUBCASE("identity transition matrix freezes the state") {
        auto cfg = pl::SynthConfig::default_three_state();
        cfg.n_bars = 200;
        cfg.seed = 3;
        cfg.trans = regimehmm::Matrix(3, 3);
        for (int i = 0; i < 3; ++i) {
            cfg.trans(i, i) = 1.0;
        }
        const auto series = pl::synth(cfg);
        const auto& truth = *series.factor("state_truth");
        for (double v : truth) {
            CHECK(v == truth[0]);
        }
    }
    SUBCASE("equal seeds produce identical series") {
        auto cfg = pl::SynthConfig::default_three_state();
        cfg.n_bars = 120;
        cfg.seed = 9;
        const auto a = pl::synth(cfg);
        const auto b = pl::synth(cfg);
        CHECK(a.close == b.close);
        CHECK(*a.factor("f1") == *b.factor("f1"));
        CHECK(*a.factor("state_truth") == *b.factor("state_truth"));
    }
    SUBCASE("empirical transition frequencies approach the generator") {
        auto cfg = pl::SynthConfig::default_three_state();
        cfg.n_bars = 50000;
        cfg.seed = 1;
        const auto series = pl::synth(cfg);
        const auto& truth = *series.factor("state_truth");
        double counts[3][3] = {};
        double row_totals[3] = {};
        for (std::size_t t = 1; t < truth.size(); ++t) {
            const int from = static_cast<int>(truth[t - 1]);
            const int to = static_cast<int>(truth[t]);
            counts[from][to] += 1.0;
            row_totals[from] += 1.0;
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double freq = counts[i][j] / row_totals[i];
                CHECK(std::abs(freq - cfg.trans(i, j)) < 0.01);
            }
        }
    }
}

TEST_CASE("model bundles round-trip through JSON and decode bit-for-bit") {
    TempDir dir("bundle");
    const auto train_csv = write_synth(dir, "train.csv", 21, 500);
    const auto config = synthetic_config(42);

    const auto ds = pl::load_dataset(train_csv, config);
    auto bundle = pl::train_groups(ds, config);
    pl::fit_lstm_head(bundle, ds);
    pl::save_bundle(dir.path / "model.json", bundle);
    const auto loaded = pl::load_bundle(dir.path / "model.json");

    REQUIRE(loaded.groups.size() == bundle.groups.size());
    for (std::size_t g = 0; g < bundle.groups.size(); ++g) {
        const auto a = regimehmm::train::decode(bundle.groups[g].model, ds.group_obs[g]);
        const auto b = regimehmm::train::decode(loaded.groups[g].model, ds.group_obs[g]);
        CHECK(a.states == b.states);
        CHECK(a.path_log_score == b.path_log_score);
    }
    const auto probs_a =
        regimehmm::lstm::lstm_forward(bundle.lstm_params,
                                      pl::stacked_input(bundle, ds, false).x);
    const auto probs_b =
        regimehmm::lstm::lstm_forward(loaded.lstm_params,
                                      pl::stacked_input(loaded, ds, false).x);
    CHECK(probs_a == probs_b);

    // Saving the loaded bundle reproduces the file byte-for-byte.
    pl::save_bundle(dir.path / "model2.json", loaded);
    CHECK(slurp(dir.path / "model.json") == slurp(dir.path / "model2.json"));

    SUBCASE("schema version mismatches are rejected") {
        auto text = slurp(dir.path / "model.json");
        const auto pos = text.find("\"schema_version\": 1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 19, "\"schema_version\": 9");
        std::ofstream(dir.path / "tampered.json") << text;
        CHECK_THROWS_AS((void)pl::load_bundle(dir.path / "tampered.json"), Error);
    }
}

TEST_CASE("train then decode reproduces the stored trace likelihood") {
    TempDir dir("roundtrip");
    const auto train_csv = write_synth(dir, "train.csv", 33, 400);
    auto config = synthetic_config(7);
    config.fit.emission = regimehmm::train::EmissionKind::mixture;

    pl::cmd_train(train_csv, config, dir.path / "model");
    const auto bundle = pl::load_bundle(dir.path / "model" / "model.json");
    const auto report =
        pl::cmd_decode(dir.path / "model" / "model.json", train_csv, dir.path / "dec");

    REQUIRE(report.log_likelihood.size() == bundle.groups.size());
    for (std::size_t g = 0; g < bundle.groups.size(); ++g) {
        const auto& trace = bundle.groups[g].model.trace.log_likelihood;
        REQUIRE(!trace.empty());
        CHECK(std::abs(report.log_likelihood[g] - trace.back()) < 1e-9);
    }
}

TEST_CASE("full pipeline is deterministic byte-for-byte") {
    TempDir dir("determinism");
    const auto train_csv = write_synth(dir, "train.csv", 11, 450);
    const auto test_csv = write_synth(dir, "test.csv", 12, 300);
    const auto config = synthetic_config(2718);

    auto run = [&](const char* tag) {
        const fs::path out = dir.path / tag;
        fs::create_directories(out);
        pl::cmd_train(train_csv, config, out);
        pl::cmd_train_lstm(out / "model.json", train_csv, out);
        (void)pl::cmd_eval(out / "model.json", test_csv, out);
        pl::cmd_export_plot(out / "model.json", test_csv, "g1", out / "plot.csv");
        (void)pl::cmd_decode(out / "model.json", test_csv, out);
        pl::cmd_predict(out / "model.json", test_csv, out / "pred.csv");
    };
    run("run1");
    run("run2");

    for (const char* name :
         {"model.json", "trace.csv", "eval.csv", "confusion.csv", "plot.csv",
          "decoded.csv", "decode_summary.csv", "pred.csv"}) {
        INFO("file: ", name);
        const auto a = slurp(dir.path / "run1" / name);
        CHECK(!a.empty());
        CHECK(a == slurp(dir.path / "run2" / name));
    }
}

TEST_CASE("predict is keyed by column name, not column order") {
    TempDir dir("permute");
    const auto train_csv = write_synth(dir, "train.csv", 51, 400);
    const auto config = synthetic_config(99);

    const fs::path model_dir = dir.path / "model";
    pl::cmd_train(train_csv, config, model_dir);
    pl::cmd_train_lstm(model_dir / "model.json", train_csv, model_dir);

    const auto test_csv = write_synth(dir, "test.csv", 52, 250);
    // Rewrite the test file with factor columns in reverse order.
    auto series = io::read_bar_csv(test_csv);
    std::reverse(series.factors.begin(), series.factors.end());
    const fs::path permuted_csv = dir.path / "test_permuted.csv";
    io::write_bar_csv(permuted_csv, series);

    pl::cmd_predict(model_dir / "model.json", test_csv, dir.path / "pred_a.csv");
    pl::cmd_predict(model_dir / "model.json", permuted_csv, dir.path / "pred_b.csv");
    CHECK(slurp(dir.path / "pred_a.csv") == slurp(dir.path / "pred_b.csv"));
}

TEST_CASE("eval reads only the test file") {
    TempDir dir("segregation");
    const auto train_csv = write_synth(dir, "train.csv", 61, 400);
    const auto test_csv = write_synth(dir, "test.csv", 62, 300);
    const auto config = synthetic_config(5);

    const fs::path model_dir = dir.path / "model";
    pl::cmd_train(train_csv, config, model_dir);
    pl::cmd_train_lstm(model_dir / "model.json", train_csv, model_dir);
    fs::remove(train_csv);

    const auto report = pl::cmd_eval(model_dir / "model.json", test_csv, dir.path / "e");
    CHECK(report.n_bars > 0);
    CHECK(report.accuracy >= 0.0);
    CHECK(report.accuracy <= 1.0);
    std::int64_t confusion_total = 0;
    for (const auto& row : report.confusion) {
        for (auto v : row) {
            confusion_total += v;
        }
    }
    CHECK(confusion_total == static_cast<std::int64_t>(report.n_bars));
}

TEST_CASE("dataset loading: missing columns and non-finite cells are reported") {
    TempDir dir("dataset_err");
    const auto csv = write_synth(dir, "train.csv", 71, 100);

    SUBCASE("missing group column") {
        pl::PipelineConfig config;
        config.groups = {{"g", {"no_such_column"}, ""}};
        CHECK_THROWS_AS((void)pl::load_dataset(csv, config), Error);
    }
    SUBCASE("interior NaN is rejected with its row index") {
        auto series = io::read_bar_csv(csv);
        (*const_cast<std::vector<double>*>(series.factor("f1")))[50] =
            std::numeric_limits<double>::quiet_NaN();
        io::write_bar_csv(dir.path / "holed.csv", series);
        pl::PipelineConfig config;
        config.groups = {{"g", {"f1"}, ""}};
        try {
            (void)pl::load_dataset(dir.path / "holed.csv", config);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::nonfinite_input);
            CHECK(std::string(e.what()).find("row 50") != std::string::npos);
        }
    }
    SUBCASE("prefix groups resolve and drop empties") {
        pl::PipelineConfig config;
        config.groups = {{"facs", {}, "f"}, {"nothing", {}, "zz_"}};
        const auto ds = pl::load_dataset(csv, config);
        REQUIRE(ds.groups.size() == 1);
        CHECK(ds.groups[0].columns.size() == 2);  // f1, f2
    }
}

TEST_CASE("score-features and label commands write their reports") {
    TempDir dir("cmd_reports");
    const auto csv = write_synth(dir, "data.csv", 81, 300);
    auto config = synthetic_config(1);
    config.fit.max_iters = 30;

    pl::cmd_label(csv, config, dir.path / "labels.csv");
    const auto labels_text = slurp(dir.path / "labels.csv");
    CHECK(labels_text.find("date,close,sigma,label,touch_index,barrier_hit") == 0);

    pl::cmd_score_features(csv, config, {"f1", "f2"}, dir.path / "scores.csv");
    const auto scores = slurp(dir.path / "scores.csv");
    CHECK(scores.find("feature,score") == 0);
    CHECK(scores.find("f1") != std::string::npos);
    CHECK(scores.find("f2") != std::string::npos);
}

TEST_CASE("default config resolves the derived market group") {
    TempDir dir("default_cfg");
    const auto csv = write_synth(dir, "data.csv", 91, 200);
    const auto ds = pl::load_dataset(csv, pl::PipelineConfig::defaults());
    REQUIRE(ds.groups.size() == 1);
    CHECK(ds.groups[0].name == "market");
    CHECK(ds.groups[0].columns.size() == 6);
    CHECK(ds.row_offset == 5);  // 5-bar return warm-up
    CHECK(ds.group_obs[0].n_rows() == 195);
}
