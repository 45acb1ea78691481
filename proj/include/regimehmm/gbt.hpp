#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "regimehmm/matrix.hpp"

namespace regimehmm::gbt {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    bool default_left = true;  // route taken by missing (NaN) values
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(const ObservationMatrix& x, std::size_t row) const;
    double predict(std::span<const double> row) const;
};

struct BoostParams {
    int n_rounds = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    double reg_lambda = 1.0;
    double feature_subsample = 1.0;
    double min_split_gain = 1e-12;
    std::uint64_t seed = 0;
};

// Multi-class ensemble: one tree per class per round, softmax link.
struct BoostedEnsemble {
    int n_classes = 0;
    int n_features = 0;
    BoostParams params;
    std::vector<std::vector<RegressionTree>> rounds;  // [round][class]
    std::vector<double> train_loss;  // soft cross-entropy before each round, plus final

    Matrix raw_scores(const ObservationMatrix& features) const;
    Matrix predict_proba(const ObservationMatrix& features) const;
};

// Newton boosting against soft targets: per round and class, g = p - target,
// h = p(1-p), exact greedy splits over sorted unique values, leaf weight
// -G/(H+lambda). Missing feature values learn a per-node default direction.
BoostedEnsemble fit_soft(const ObservationMatrix& features, const Matrix& soft_targets,
                         const BoostParams& params);

}  // namespace regimehmm::gbt
