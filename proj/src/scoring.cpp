#include "regimehmm/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace regimehmm::scoring {

std::int64_t CountMatrix::total() const noexcept {
    std::int64_t total = 0;
    for (const auto& row : counts) {
        total += row[0] + row[1] + row[2];
    }
    return total;
}

CountMatrix count_matrix(const hmm::StatePath& states,
                         const labeling::LabelSeries& labels) {
    if (states.states.size() != labels.size()) {
        fail(ErrorCode::dimension_mismatch,
             "state path and label series lengths differ");
    }
    int n_states = 0;
    for (int s : states.states) {
        n_states = std::max(n_states, s + 1);
    }
    CountMatrix m;
    m.counts.assign(static_cast<std::size_t>(n_states), {0, 0, 0});
    std::size_t used = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (!labels.defined[t]) {
            continue;
        }
        m.counts[states.states[t]][labels.labels[t] + 1] += 1;
        ++used;
    }
    if (used == 0) {
        fail(ErrorCode::degenerate_input, "no defined labels to count");
    }
    return m;
}

FeatureScore score(const CountMatrix& counts) {
    const auto total = static_cast<double>(counts.total());
    if (!(total > 0.0)) {
        fail(ErrorCode::degenerate_input, "count matrix is empty");
    }
    FeatureScore out;
    out.acc.assign(counts.n_states(), 0.0);
    out.entropy.assign(counts.n_states(), 0.0);
    out.weight.assign(counts.n_states(), 0.0);
    for (std::size_t i = 0; i < counts.n_states(); ++i) {
        const auto& row = counts.counts[i];
        const auto row_total = static_cast<double>(row[0] + row[1] + row[2]);
        if (row_total <= 0.0) {
            continue;  // empty state row: weight 0, term omitted
        }
        double acc = 0.0;
        double entropy = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double ratio = static_cast<double>(row[j]) / row_total;
            acc = std::max(acc, ratio);
            if (ratio > 0.0) {
                entropy -= ratio * std::log(ratio);
            }
        }
        out.acc[i] = acc;
        out.entropy[i] = entropy;
        out.weight[i] = row_total / total;
        out.total += acc * out.weight[i] / (1.0 + entropy);
    }
    return out;
}

namespace {

labeling::LabelSeries drop_leading(const labeling::LabelSeries& labels,
                                   std::size_t offset) {
    labeling::LabelSeries out;
    out.labels.assign(labels.labels.begin() + offset, labels.labels.end());
    out.defined.assign(labels.defined.begin() + offset, labels.defined.end());
    out.touch_index.assign(labels.touch_index.begin() + offset,
                           labels.touch_index.end());
    out.barrier_hit.assign(labels.barrier_hit.begin() + offset,
                           labels.barrier_hit.end());
    return out;
}

}  // namespace

RankResult rank_features(const labeling::BarSeries& series,
                         std::span<const std::string> feature_names,
                         const labeling::BarrierConfig& barrier_cfg,
                         const train::FitConfig& fit_cfg) {
    const auto labels = labeling::triple_barrier(series, barrier_cfg);

    RankResult out;
    for (const auto& name : feature_names) {
        const auto* column = series.factor(name);
        if (column == nullptr) {
            fail(ErrorCode::invalid_argument, "unknown factor column '" + name + "'");
        }
        try {
            // Warm-up rows (leading NaN from derived columns) are trimmed;
            // the labels are sliced to stay bar-aligned.
            std::size_t lead = 0;
            while (lead < column->size() && std::isnan((*column)[lead])) {
                ++lead;
            }
            const std::vector<double> trimmed(column->begin() + lead, column->end());
            const auto obs = ObservationMatrix::from_columns({trimmed});
            const auto model = train::fit_mixture_hmm(obs, fit_cfg);
            const auto path = train::decode(model, obs);
            out.ranked.push_back(
                {name, score(count_matrix(path, drop_leading(labels, lead)))});
        } catch (const Error& e) {
            out.failures.emplace_back(name, e.what());
        }
    }
    std::sort(out.ranked.begin(), out.ranked.end(),
              [](const RankedFeature& a, const RankedFeature& b) {
                  if (a.score.total != b.score.total) {
                      return a.score.total > b.score.total;
                  }
                  return a.name < b.name;
              });
    return out;
}

}  // namespace regimehmm::scoring
