#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "regimehmm/features.hpp"
#include "regimehmm/labeling.hpp"
#include "regimehmm/lstm.hpp"
#include "regimehmm/scoring.hpp"
#include "regimehmm/synth.hpp"
#include "regimehmm/trainers.hpp"

namespace regimehmm::pipeline {

// A named list of factor columns. Either an explicit column list or a header
// prefix resolved against the input file; prefix groups that match nothing
// are dropped.
struct FactorGroup {
    std::string name;
    std::vector<std::string> columns;
    std::string prefix;
};

struct PipelineConfig {
    std::vector<FactorGroup> groups;
    labeling::BarrierConfig barrier;
    train::FitConfig fit;
    lstm::FitHyper lstm;
    std::uint64_t seed = 0;

    // The taxonomy default: a market group over the derived price columns
    // plus seven prefix groups (quality_, income_risk_, value_, mood_,
    // index_, momentum_, rise_).
    static PipelineConfig defaults();
};

struct GroupModel {
    std::string name;
    std::vector<std::string> columns;
    train::RegimeModel model;
};

inline constexpr int kSchemaVersion = 1;

struct ModelBundle {
    int schema_version = kSchemaVersion;
    PipelineConfig config;
    std::vector<GroupModel> groups;
    bool has_lstm = false;
    lstm::LstmParams lstm_params;
    double lstm_train_accuracy = 0.0;
};

// Bars with derived market columns appended (when OHLC is present), resolved
// factor groups, and per-group observation matrices covering the rows
// [row_offset, T). row_offset skips the common warm-up rows whose derived
// cells are NaN.
struct Dataset {
    labeling::BarSeries series;
    std::vector<FactorGroup> groups;
    std::size_t row_offset = 0;
    std::vector<ObservationMatrix> group_obs;

    std::size_t n_bars() const noexcept { return series.size() - row_offset; }
};

Dataset load_dataset(const std::filesystem::path& csv_path, const PipelineConfig& config,
                     bool allow_nan_cells = false);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) noexcept;

ModelBundle train_groups(const Dataset& ds, const PipelineConfig& config);

// Stacks per-group state posteriors; with_labels attaches triple-barrier
// targets computed from the dataset prices.
lstm::StackedInput stacked_input(const ModelBundle& bundle, const Dataset& ds,
                                 bool with_labels);

void fit_lstm_head(ModelBundle& bundle, const Dataset& ds);

// --- persistence ---

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& config);

// --- command entry points (used by the CLI; each writes its report files) ---

void cmd_synth(const SynthConfig& config, const std::filesystem::path& out_csv);

void cmd_label(const std::filesystem::path& input, const PipelineConfig& config,
               const std::filesystem::path& out_csv);

void cmd_score_features(const std::filesystem::path& input, const PipelineConfig& config,
                        std::vector<std::string> feature_names,
                        const std::filesystem::path& out_csv);

void cmd_train(const std::filesystem::path& input, const PipelineConfig& config,
               const std::filesystem::path& out_dir);

struct DecodeReport {
    std::vector<std::string> group_names;
    std::vector<double> log_likelihood;
};

DecodeReport cmd_decode(const std::filesystem::path& model_path,
                        const std::filesystem::path& input,
                        const std::filesystem::path& out_dir);

void cmd_train_lstm(const std::filesystem::path& model_path,
                    const std::filesystem::path& input,
                    const std::filesystem::path& out_dir);

void cmd_predict(const std::filesystem::path& model_path,
                 const std::filesystem::path& input,
                 const std::filesystem::path& out_csv);

struct EvalReport {
    double accuracy = 0.0;
    double majority_baseline = 0.0;
    std::size_t n_bars = 0;
    std::array<std::array<std::int64_t, 3>, 3> confusion{};
};

EvalReport cmd_eval(const std::filesystem::path& model_path,
                    const std::filesystem::path& input,
                    const std::filesystem::path& out_dir);

void cmd_export_plot(const std::filesystem::path& model_path,
                     const std::filesystem::path& input, const std::string& group_name,
                     const std::filesystem::path& out_csv);

}  // namespace regimehmm::pipeline
