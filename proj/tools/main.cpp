#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regimehmm/csv.hpp"
#include "regimehmm/kernels.hpp"
#include "regimehmm/log.hpp"
#include "regimehmm/pipeline.hpp"

namespace {

namespace pl = regimehmm::pipeline;

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> emission;
};

pl::PipelineConfig resolve_config(const GlobalOpts& opts) {
    pl::PipelineConfig config = opts.config_path.empty()
                                    ? pl::PipelineConfig::defaults()
                                    : pl::load_config(opts.config_path);
    if (opts.seed) {
        config.seed = *opts.seed;
    }
    if (opts.emission) {
        if (*opts.emission == "gmm") {
            config.fit.emission = regimehmm::train::EmissionKind::mixture;
        } else if (*opts.emission == "boosted") {
            config.fit.emission = regimehmm::train::EmissionKind::boosted;
        } else {
            regimehmm::fail(regimehmm::ErrorCode::invalid_argument,
                            "--emission must be gmm or boosted");
        }
    }
    return config;
}

void add_common(CLI::App* cmd, GlobalOpts& opts, bool with_emission = false) {
    cmd->add_option("--config", opts.config_path, "pipeline config JSON");
    cmd->add_option("--seed", opts.seed, "master RNG seed");
    if (with_emission) {
        cmd->add_option("--emission", opts.emission, "emission model: gmm | boosted")
            ->check(CLI::IsMember({"gmm", "boosted"}));
    }
}

int error_exit(const regimehmm::Error& e) {
    const nlohmann::json record = {
        {"error",
         {{"code", std::string(regimehmm::error_code_name(e.code()))},
          {"message", e.what()}}}};
    std::cerr << record.dump() << '\n';
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Market regime toolkit: barrier labeling, feature scoring, "
                 "HMM training with mixture or boosted-tree emissions, and an "
                 "LSTM head over stacked state posteriors"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic bar CSV");
    pl::SynthConfig synth_cfg = pl::SynthConfig::default_three_state();
    std::string synth_out;
    std::uint64_t synth_seed = 0;
    std::size_t synth_bars = 2000;
    int synth_factors = 2;
    double synth_drift = 2.0;
    synth_cmd->add_option("--out", synth_out, "output CSV path")->required();
    synth_cmd->add_option("--bars", synth_bars, "number of bars");
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("--factor-cols", synth_factors, "factor columns to emit");
    synth_cmd->add_option("--drift-scale", synth_drift,
                          "state drift in return-vol units");

    // label
    auto* label_cmd = app.add_subcommand("label", "triple-barrier label a bar CSV");
    GlobalOpts label_opts;
    std::string label_in, label_out;
    add_common(label_cmd, label_opts);
    label_cmd->add_option("--input", label_in, "bar CSV")->required();
    label_cmd->add_option("--out", label_out, "output CSV path")->required();

    // score-features
    auto* score_cmd =
        app.add_subcommand("score-features", "rank factor columns by the state/label "
                                             "count-matrix score");
    GlobalOpts score_opts;
    std::string score_in, score_out;
    std::vector<std::string> score_features;
    add_common(score_cmd, score_opts);
    score_cmd->add_option("--input", score_in, "bar CSV")->required();
    score_cmd->add_option("--out", score_out, "output CSV path")->required();
    score_cmd->add_option("--features", score_features,
                          "columns to score (default: all factor columns)");

    // train
    auto* train_cmd = app.add_subcommand("train", "fit one model per factor group");
    GlobalOpts train_opts;
    std::string train_in, train_out;
    add_common(train_cmd, train_opts, true);
    train_cmd->add_option("--input", train_in, "training bar CSV")->required();
    train_cmd->add_option("--out", train_out, "output directory")->required();

    // decode
    auto* decode_cmd = app.add_subcommand("decode", "Viterbi-decode states per group");
    std::string decode_model, decode_in, decode_out;
    decode_cmd->add_option("--model", decode_model, "model.json path")->required();
    decode_cmd->add_option("--input", decode_in, "bar CSV")->required();
    decode_cmd->add_option("--out", decode_out, "output directory")->required();

    // train-lstm
    auto* tl_cmd = app.add_subcommand("train-lstm",
                                      "fit the LSTM head over stacked posteriors");
    std::string tl_model, tl_in, tl_out;
    tl_cmd->add_option("--model", tl_model, "model.json path")->required();
    tl_cmd->add_option("--input", tl_in, "training bar CSV")->required();
    tl_cmd->add_option("--out", tl_out, "output directory")->required();

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "per-bar class probabilities");
    std::string pred_model, pred_in, pred_out;
    pred_cmd->add_option("--model", pred_model, "model.json path")->required();
    pred_cmd->add_option("--input", pred_in, "bar CSV")->required();
    pred_cmd->add_option("--out", pred_out, "output CSV path")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "accuracy and confusion on a test CSV");
    std::string eval_model, eval_in, eval_out;
    eval_cmd->add_option("--model", eval_model, "model.json path")->required();
    eval_cmd->add_option("--input", eval_in, "test bar CSV")->required();
    eval_cmd->add_option("--out", eval_out, "output directory")->required();

    // export-plot
    auto* plot_cmd = app.add_subcommand("export-plot",
                                        "per-bar decode/posterior/label CSV for plotting");
    std::string plot_model, plot_in, plot_out, plot_group;
    plot_cmd->add_option("--model", plot_model, "model.json path")->required();
    plot_cmd->add_option("--input", plot_in, "bar CSV")->required();
    plot_cmd->add_option("--out", plot_out, "output CSV path")->required();
    plot_cmd->add_option("--group", plot_group, "factor group to export (default: first)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            synth_cfg.n_bars = synth_bars;
            synth_cfg.seed = synth_seed;
            synth_cfg.n_factor_cols = synth_factors;
            synth_cfg.drift_scale = synth_drift;
            pl::cmd_synth(synth_cfg, synth_out);
        } else if (label_cmd->parsed()) {
            pl::cmd_label(label_in, resolve_config(label_opts), label_out);
        } else if (score_cmd->parsed()) {
            pl::cmd_score_features(score_in, resolve_config(score_opts), score_features,
                                   score_out);
        } else if (train_cmd->parsed()) {
            pl::cmd_train(train_in, resolve_config(train_opts), train_out);
        } else if (decode_cmd->parsed()) {
            pl::cmd_decode(decode_model, decode_in, decode_out);
        } else if (tl_cmd->parsed()) {
            pl::cmd_train_lstm(tl_model, tl_in, tl_out);
        } else if (pred_cmd->parsed()) {
            pl::cmd_predict(pred_model, pred_in, pred_out);
        } else if (eval_cmd->parsed()) {
            const auto report = pl::cmd_eval(eval_model, eval_in, eval_out);
            std::cout << "accuracy=" << regimehmm::io::format_double(report.accuracy)
                      << " baseline="
                      << regimehmm::io::format_double(report.majority_baseline)
                      << " bars=" << report.n_bars << '\n';
        } else if (plot_cmd->parsed()) {
            pl::cmd_export_plot(plot_model, plot_in, plot_group, plot_out);
        }
    } catch (const regimehmm::Error& e) {
        return error_exit(e);
    } catch (const std::exception& e) {
        return error_exit(
            regimehmm::Error(regimehmm::ErrorCode::io_failure, e.what()));
    }
    return 0;
}
