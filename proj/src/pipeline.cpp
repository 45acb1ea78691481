#include "regimehmm/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "regimehmm/csv.hpp"
#include "regimehmm/log.hpp"

namespace regimehmm::pipeline {

namespace {

using io::format_double;

constexpr std::uint64_t kLstmSeedSalt = 0x4c53544dULL;  // distinct stream for the head

std::vector<FactorGroup> resolve_groups(const labeling::BarSeries& series,
                                        const std::vector<FactorGroup>& configured) {
    std::vector<FactorGroup> resolved;
    for (const auto& group : configured) {
        FactorGroup g;
        g.name = group.name;
        g.columns = group.columns;
        for (const auto& column : group.columns) {
            if (series.factor(column) == nullptr) {
                fail(ErrorCode::invalid_argument, "group '" + group.name +
                                                      "' names missing column '" +
                                                      column + "'");
            }
        }
        if (!group.prefix.empty()) {
            for (const auto& [name, values] : series.factors) {
                if (name.starts_with(group.prefix) &&
                    std::find(g.columns.begin(), g.columns.end(), name) ==
                        g.columns.end()) {
                    g.columns.push_back(name);
                }
            }
        }
        if (g.columns.empty()) {
            logging::debug("dropping factor group '" + g.name + "': no matching columns");
            continue;
        }
        resolved.push_back(std::move(g));
    }
    if (resolved.empty()) {
        fail(ErrorCode::invalid_argument, "no factor group resolved to any column");
    }
    return resolved;
}

bool has_ohlc(const labeling::BarSeries& series) {
    const std::size_t n = series.size();
    return series.open.size() == n && series.high.size() == n &&
           series.low.size() == n && series.close.size() == n &&
           series.pre_close.size() == n;
}

labeling::LabelSeries labels_for(const Dataset& ds, const PipelineConfig& config) {
    return labeling::triple_barrier(ds.series, config.barrier);
}

std::string emission_name(train::EmissionKind kind) {
    return kind == train::EmissionKind::mixture ? "gmm" : "boosted";
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) noexcept {
    // splitmix64 over the combined value; decorrelates per-group streams.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

PipelineConfig PipelineConfig::defaults() {
    PipelineConfig c;
    c.groups.push_back({"market", market_feature_names(), ""});
    for (const char* name : {"quality", "income_risk", "value", "mood", "index",
                             "momentum", "rise"}) {
        c.groups.push_back({name, {}, std::string(name) + "_"});
    }
    return c;
}

Dataset load_dataset(const std::filesystem::path& csv_path, const PipelineConfig& config,
                     bool allow_nan_cells) {
    Dataset ds;
    ds.series = io::read_bar_csv(csv_path);
    if (has_ohlc(ds.series)) {
        derive_market_features(ds.series);
    }
    ds.groups = resolve_groups(ds.series, config.groups);

    const std::size_t n = ds.series.size();
    std::size_t offset = 0;
    for (const auto& group : ds.groups) {
        for (const auto& column : group.columns) {
            const auto& values = *ds.series.factor(column);
            std::size_t lead = 0;
            while (lead < n && std::isnan(values[lead])) {
                ++lead;
            }
            offset = std::max(offset, lead);
        }
    }
    if (offset >= n) {
        fail(ErrorCode::degenerate_input, "all rows fall inside the feature warm-up");
    }
    ds.row_offset = offset;

    for (const auto& group : ds.groups) {
        ObservationMatrix obs(n - offset, group.columns.size());
        for (std::size_t c = 0; c < group.columns.size(); ++c) {
            const auto& values = *ds.series.factor(group.columns[c]);
            for (std::size_t t = offset; t < n; ++t) {
                const double v = values[t];
                if (!allow_nan_cells && std::isnan(v)) {
                    fail(ErrorCode::nonfinite_input,
                         "column '" + group.columns[c] + "' has a missing cell at row " +
                             std::to_string(t));
                }
                if (!std::isnan(v) && !std::isfinite(v)) {
                    fail(ErrorCode::nonfinite_input,
                         "column '" + group.columns[c] + "' has a non-finite cell at row " +
                             std::to_string(t));
                }
                obs.at(t - offset, c) = v;
            }
        }
        ds.group_obs.push_back(std::move(obs));
    }
    return ds;
}

ModelBundle train_groups(const Dataset& ds, const PipelineConfig& config) {
    ModelBundle bundle;
    bundle.config = config;
    bundle.config.groups = ds.groups;  // freeze the resolved column lists
    for (std::size_t g = 0; g < ds.groups.size(); ++g) {
        train::FitConfig fit = config.fit;
        fit.seed = derive_seed(config.seed, g);
        logging::info("fitting group '" + ds.groups[g].name + "' (" +
                      emission_name(fit.emission) + " emission)");
        GroupModel group;
        group.name = ds.groups[g].name;
        group.columns = ds.groups[g].columns;
        group.model = fit.emission == train::EmissionKind::mixture
                          ? train::fit_mixture_hmm(ds.group_obs[g], fit)
                          : train::fit_boosted_hmm(ds.group_obs[g], fit);
        bundle.groups.push_back(std::move(group));
    }
    return bundle;
}

lstm::StackedInput stacked_input(const ModelBundle& bundle, const Dataset& ds,
                                 bool with_labels) {
    if (bundle.groups.size() != ds.group_obs.size()) {
        fail(ErrorCode::dimension_mismatch,
             "bundle groups do not match the dataset's factor groups");
    }
    std::vector<hmm::PosteriorMatrix> posteriors;
    posteriors.reserve(bundle.groups.size());
    for (std::size_t g = 0; g < bundle.groups.size(); ++g) {
        posteriors.push_back(train::state_proba(bundle.groups[g].model, ds.group_obs[g]));
    }
    lstm::StackedInput input = lstm::stack_state_probas(posteriors);
    if (with_labels) {
        lstm::attach_targets(input, labels_for(ds, bundle.config), ds.row_offset);
    }
    return input;
}

void fit_lstm_head(ModelBundle& bundle, const Dataset& ds) {
    lstm::StackedInput input = stacked_input(bundle, ds, true);
    lstm::FitHyper hyper = bundle.config.lstm;
    hyper.seed = derive_seed(bundle.config.seed, kLstmSeedSalt);
    const lstm::FitResult result = lstm::fit_lstm(input, hyper);
    bundle.has_lstm = true;
    bundle.lstm_params = result.params;
    bundle.lstm_train_accuracy = result.train_accuracy;
}

void cmd_synth(const SynthConfig& config, const std::filesystem::path& out_csv) {
    io::write_bar_csv(out_csv, synth(config));
}

void cmd_label(const std::filesystem::path& input, const PipelineConfig& config,
               const std::filesystem::path& out_csv) {
    const auto series = io::read_bar_csv(input);
    const auto labels = labeling::triple_barrier(series, config.barrier);
    const auto sigma = labeling::ewma_volatility(series.close, config.barrier.vol_span);

    io::Table table;
    table.header = {"date", "close", "sigma", "label", "touch_index", "barrier_hit"};
    for (std::size_t t = 0; t < series.size(); ++t) {
        std::vector<std::string> row = {series.timestamps[t],
                                        format_double(series.close[t]),
                                        format_double(sigma[t])};
        if (labels.defined[t]) {
            row.push_back(std::to_string(labels.labels[t]));
            row.push_back(std::to_string(labels.touch_index[t]));
            row.push_back(std::string(labeling::barrier_hit_name(labels.barrier_hit[t])));
        } else {
            row.insert(row.end(), {"", "", ""});
        }
        table.rows.push_back(std::move(row));
    }
    io::write_table(out_csv, table);
}

void cmd_score_features(const std::filesystem::path& input, const PipelineConfig& config,
                        std::vector<std::string> feature_names,
                        const std::filesystem::path& out_csv) {
    auto series = io::read_bar_csv(input);
    if (has_ohlc(series)) {
        derive_market_features(series);
    }
    if (feature_names.empty()) {
        for (const auto& [name, values] : series.factors) {
            if (name != "state_truth") {
                feature_names.push_back(name);
            }
        }
    }

    train::FitConfig fit = config.fit;
    fit.emission = train::EmissionKind::mixture;
    fit.seed = config.seed;
    const auto result = scoring::rank_features(series, feature_names, config.barrier, fit);

    const int n_states = config.fit.n_states;
    io::Table table;
    table.header = {"feature", "score"};
    for (int i = 0; i < n_states; ++i) {
        const auto suffix = std::to_string(i);
        table.header.push_back("acc_" + suffix);
        table.header.push_back("entropy_" + suffix);
        table.header.push_back("weight_" + suffix);
    }
    for (const auto& [name, score] : result.ranked) {
        std::vector<std::string> row = {name, format_double(score.total)};
        for (int i = 0; i < n_states; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            row.push_back(format_double(idx < score.acc.size() ? score.acc[idx] : 0.0));
            row.push_back(
                format_double(idx < score.entropy.size() ? score.entropy[idx] : 0.0));
            row.push_back(
                format_double(idx < score.weight.size() ? score.weight[idx] : 0.0));
        }
        table.rows.push_back(std::move(row));
    }
    io::write_table(out_csv, table);
    for (const auto& [name, reason] : result.failures) {
        logging::warn("feature '" + name + "' skipped: " + reason);
    }
}

void cmd_train(const std::filesystem::path& input, const PipelineConfig& config,
               const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const Dataset ds = load_dataset(input, config);
    const ModelBundle bundle = train_groups(ds, config);
    save_bundle(out_dir / "model.json", bundle);

    io::Table trace;
    trace.header = {"group", "iteration", "log_likelihood"};
    for (const auto& group : bundle.groups) {
        const auto& lls = group.model.trace.log_likelihood;
        for (std::size_t i = 0; i < lls.size(); ++i) {
            trace.rows.push_back(
                {group.name, std::to_string(i + 1), format_double(lls[i])});
        }
    }
    io::write_table(out_dir / "trace.csv", trace);
}

DecodeReport cmd_decode(const std::filesystem::path& model_path,
                        const std::filesystem::path& input,
                        const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const ModelBundle bundle = load_bundle(model_path);
    const Dataset ds = load_dataset(input, bundle.config,
                                    bundle.config.fit.emission ==
                                        train::EmissionKind::boosted);

    DecodeReport report;
    io::Table table;
    table.header = {"date"};
    std::vector<hmm::StatePath> paths;
    for (std::size_t g = 0; g < bundle.groups.size(); ++g) {
        table.header.push_back(bundle.groups[g].name + "_state");
        const auto logs = bundle.groups[g].model.emission_logs(ds.group_obs[g]);
        paths.push_back(hmm::viterbi(bundle.groups[g].model.chain, logs));
        report.group_names.push_back(bundle.groups[g].name);
        report.log_likelihood.push_back(
            hmm::forward(bundle.groups[g].model.chain, logs).log_likelihood);
    }
    for (std::size_t t = 0; t < ds.n_bars(); ++t) {
        std::vector<std::string> row = {ds.series.timestamps[ds.row_offset + t]};
        for (const auto& path : paths) {
            row.push_back(std::to_string(path.states[t]));
        }
        table.rows.push_back(std::move(row));
    }
    io::write_table(out_dir / "decoded.csv", table);

    io::Table summary;
    summary.header = {"group", "log_likelihood"};
    for (std::size_t g = 0; g < report.group_names.size(); ++g) {
        summary.rows.push_back(
            {report.group_names[g], format_double(report.log_likelihood[g])});
    }
    io::write_table(out_dir / "decode_summary.csv", summary);
    return report;
}

void cmd_train_lstm(const std::filesystem::path& model_path,
                    const std::filesystem::path& input,
                    const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    ModelBundle bundle = load_bundle(model_path);
    const Dataset ds = load_dataset(input, bundle.config);
    fit_lstm_head(bundle, ds);
    save_bundle(out_dir / "model.json", bundle);
}

void cmd_predict(const std::filesystem::path& model_path,
                 const std::filesystem::path& input,
                 const std::filesystem::path& out_csv) {
    const ModelBundle bundle = load_bundle(model_path);
    if (!bundle.has_lstm) {
        fail(ErrorCode::invalid_argument,
             "model bundle has no trained head; run train-lstm first");
    }
    const Dataset ds = load_dataset(input, bundle.config,
                                    bundle.config.fit.emission ==
                                        train::EmissionKind::boosted);
    const lstm::StackedInput stacked = stacked_input(bundle, ds, false);
    const Matrix probs = lstm::lstm_forward(bundle.lstm_params, stacked.x);

    io::Table table;
    table.header = {"date", "p_down", "p_flat", "p_up", "label_pred"};
    for (std::size_t t = 0; t < ds.n_bars(); ++t) {
        int best = 0;
        for (int k = 1; k < 3; ++k) {
            if (probs(k, t) > probs(best, t)) {
                best = k;
            }
        }
        table.rows.push_back({ds.series.timestamps[ds.row_offset + t],
                              format_double(probs(0, t)), format_double(probs(1, t)),
                              format_double(probs(2, t)),
                              std::to_string(lstm::class_to_label(best))});
    }
    io::write_table(out_csv, table);
}

EvalReport cmd_eval(const std::filesystem::path& model_path,
                    const std::filesystem::path& input,
                    const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const ModelBundle bundle = load_bundle(model_path);
    if (!bundle.has_lstm) {
        fail(ErrorCode::invalid_argument,
             "model bundle has no trained head; run train-lstm first");
    }
    const Dataset ds = load_dataset(input, bundle.config,
                                    bundle.config.fit.emission ==
                                        train::EmissionKind::boosted);
    const lstm::StackedInput stacked = stacked_input(bundle, ds, true);
    const lstm::Evaluation eval = lstm::evaluate(bundle.lstm_params, stacked);

    EvalReport report;
    report.accuracy = eval.accuracy;
    report.confusion = eval.confusion;
    std::array<std::int64_t, 3> class_counts{};
    for (std::size_t t = 0; t < stacked.steps(); ++t) {
        if (stacked.defined[t]) {
            class_counts[lstm::label_to_class(stacked.targets[t])] += 1;
            report.n_bars += 1;
        }
    }
    report.majority_baseline =
        static_cast<double>(*std::max_element(class_counts.begin(), class_counts.end())) /
        static_cast<double>(report.n_bars);

    io::Table metrics;
    metrics.header = {"metric", "value"};
    metrics.rows = {
        {"accuracy", format_double(report.accuracy)},
        {"majority_baseline", format_double(report.majority_baseline)},
        {"n_bars", std::to_string(report.n_bars)},
        {"lstm_train_accuracy", format_double(bundle.lstm_train_accuracy)},
    };
    io::write_table(out_dir / "eval.csv", metrics);

    io::Table confusion;
    confusion.header = {"true_label", "pred_down", "pred_flat", "pred_up"};
    for (int i = 0; i < 3; ++i) {
        confusion.rows.push_back({std::to_string(lstm::class_to_label(i)),
                                  std::to_string(report.confusion[i][0]),
                                  std::to_string(report.confusion[i][1]),
                                  std::to_string(report.confusion[i][2])});
    }
    io::write_table(out_dir / "confusion.csv", confusion);
    return report;
}

void cmd_export_plot(const std::filesystem::path& model_path,
                     const std::filesystem::path& input, const std::string& group_name,
                     const std::filesystem::path& out_csv) {
    const ModelBundle bundle = load_bundle(model_path);
    const Dataset ds = load_dataset(input, bundle.config,
                                    bundle.config.fit.emission ==
                                        train::EmissionKind::boosted);
    std::size_t g = 0;
    if (!group_name.empty()) {
        const auto it = std::find_if(bundle.groups.begin(), bundle.groups.end(),
                                     [&](const GroupModel& gm) {
                                         return gm.name == group_name;
                                     });
        if (it == bundle.groups.end()) {
            fail(ErrorCode::invalid_argument, "unknown group '" + group_name + "'");
        }
        g = static_cast<std::size_t>(it - bundle.groups.begin());
    }

    const auto& model = bundle.groups[g].model;
    const auto post = train::state_proba(model, ds.group_obs[g]);
    const auto path = train::decode(model, ds.group_obs[g]);
    const bool have_close = ds.series.close.size() == ds.series.size();
    labeling::LabelSeries labels;
    if (have_close) {
        labels = labels_for(ds, bundle.config);
    } else {
        labels.labels.assign(ds.series.size(), 0);
        labels.defined.assign(ds.series.size(), 0);
    }

    io::Table table;
    table.header = {"date", "close", "state"};
    for (int i = 0; i < model.chain.n_states; ++i) {
        table.header.push_back("p_state_" + std::to_string(i));
    }
    table.header.push_back("label");
    for (std::size_t t = 0; t < ds.n_bars(); ++t) {
        const std::size_t bar = ds.row_offset + t;
        std::vector<std::string> row = {
            ds.series.timestamps[bar],
            have_close ? format_double(ds.series.close[bar]) : "",
            std::to_string(path.states[t])};
        for (int i = 0; i < model.chain.n_states; ++i) {
            row.push_back(format_double(post.gamma(i, t)));
        }
        row.push_back(labels.defined[bar] ? std::to_string(labels.labels[bar]) : "");
        table.rows.push_back(std::move(row));
    }
    io::write_table(out_csv, table);
}

}  // namespace regimehmm::pipeline
