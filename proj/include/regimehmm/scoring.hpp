#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "regimehmm/hmm.hpp"
#include "regimehmm/labeling.hpp"
#include "regimehmm/trainers.hpp"

namespace regimehmm::scoring {

// counts[i][j]: co-occurrences of decoded state i with label j, columns in
// fixed order -1, 0, +1.
struct CountMatrix {
    std::vector<std::array<std::int64_t, 3>> counts;

    std::size_t n_states() const noexcept { return counts.size(); }
    std::int64_t total() const noexcept;
};

struct FeatureScore {
    std::vector<double> acc;      // max row ratio per state
    std::vector<double> entropy;  // natural-log entropy per state
    std::vector<double> weight;   // row mass / total
    double total = 0.0;           // sum_i acc_i * w_i / (1 + H_i)
};

CountMatrix count_matrix(const hmm::StatePath& states, const labeling::LabelSeries& labels);

FeatureScore score(const CountMatrix& counts);

struct RankedFeature {
    std::string name;
    FeatureScore score;
};

struct RankResult {
    std::vector<RankedFeature> ranked;  // descending by total, ties by name
    std::vector<std::pair<std::string, std::string>> failures;  // name -> reason
};

// Per feature: fit a 1-d mixture HMM, Viterbi-decode, cross-tabulate against
// triple-barrier labels, and score. Features whose fit fails are skipped and
// reported in failures.
RankResult rank_features(const labeling::BarSeries& series,
                         std::span<const std::string> feature_names,
                         const labeling::BarrierConfig& barrier_cfg,
                         const train::FitConfig& fit_cfg);

}  // namespace regimehmm::scoring
