#include "regimehmm/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace regimehmm::gbt {

namespace {

constexpr double kLeafEps = 1e-12;

double leaf_weight(double g, double h, double reg_lambda) {
    return -g / (h + reg_lambda + kLeafEps);
}

double split_score(double g, double h, double reg_lambda) {
    return g * g / (h + reg_lambda + kLeafEps);
}

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
};

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
    int depth = 0;
    bool active = false;
};

struct ScanState {
    double gl = 0.0;
    double hl = 0.0;
    double prev = 0.0;
    bool has_prev = false;
};

class TreeBuilder {
  public:
    TreeBuilder(const ObservationMatrix& x,
                const std::vector<std::vector<int>>& sorted_idx,
                std::span<const double> g, std::span<const double> h,
                const BoostParams& params)
        : x_(x), sorted_idx_(sorted_idx), g_(g), h_(h), params_(params) {}

    RegressionTree build(const std::vector<int>& feature_set) {
        const std::size_t n = x_.n_rows();
        node_of_.assign(n, 0);

        RegressionTree tree;
        tree.nodes.push_back({});
        stats_.clear();
        NodeStats root;
        for (std::size_t t = 0; t < n; ++t) {
            root.g += g_[t];
            root.h += h_[t];
        }
        root.active = true;
        stats_.push_back(root);

        for (int depth = 0; depth < params_.max_depth; ++depth) {
            std::vector<int> active;
            for (std::size_t id = 0; id < stats_.size(); ++id) {
                if (stats_[id].active && stats_[id].depth == depth) {
                    active.push_back(static_cast<int>(id));
                }
            }
            if (active.empty()) {
                break;
            }
            const auto splits = find_splits(feature_set, active);
            if (!apply_splits(tree, active, splits)) {
                break;
            }
        }

        for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
            if (tree.nodes[id].is_leaf()) {
                tree.nodes[id].leaf_value =
                    leaf_weight(stats_[id].g, stats_[id].h, params_.reg_lambda);
            }
        }
        return tree;
    }

  private:
    std::vector<SplitCandidate> find_splits(const std::vector<int>& feature_set,
                                            const std::vector<int>& active) {
        std::vector<SplitCandidate> best(stats_.size());
        std::vector<double> present_g(stats_.size()), present_h(stats_.size());
        std::vector<ScanState> scan(stats_.size());

        for (int f : feature_set) {
            const auto& order = sorted_idx_[f];
            std::fill(present_g.begin(), present_g.end(), 0.0);
            std::fill(present_h.begin(), present_h.end(), 0.0);
            for (int t : order) {
                const int nd = node_of_[t];
                present_g[nd] += g_[t];
                present_h[nd] += h_[t];
            }
            for (int nd : active) {
                scan[nd] = ScanState{};
            }
            for (int t : order) {
                const int nd = node_of_[t];
                if (!stats_[nd].active) {
                    continue;
                }
                const double v = x_.at(t, f);
                auto& st = scan[nd];
                if (st.has_prev && v > st.prev) {
                    consider(best[nd], nd, f, 0.5 * (st.prev + v), st,
                             present_g[nd], present_h[nd]);
                }
                st.gl += g_[t];
                st.hl += h_[t];
                st.prev = v;
                st.has_prev = true;
            }
            // Boundary above the largest present value: only separates the
            // missing samples (routed right) from the present ones.
            for (int nd : active) {
                if (scan[nd].has_prev) {
                    consider(best[nd], nd, f, std::numeric_limits<double>::max(),
                             scan[nd], present_g[nd], present_h[nd]);
                }
            }
        }
        return best;
    }

    void consider(SplitCandidate& best, int nd, int feature, double threshold,
                  const ScanState& st, double present_g, double present_h) {
        const double g_total = stats_[nd].g;
        const double h_total = stats_[nd].h;
        const double g_miss = g_total - present_g;
        const double h_miss = h_total - present_h;
        const double parent = split_score(g_total, h_total, params_.reg_lambda);
        for (const bool default_left : {false, true}) {
            const double gl = st.gl + (default_left ? g_miss : 0.0);
            const double hl = st.hl + (default_left ? h_miss : 0.0);
            const double gr = g_total - gl;
            const double hr = h_total - hl;
            const double gain = 0.5 * (split_score(gl, hl, params_.reg_lambda) +
                                       split_score(gr, hr, params_.reg_lambda) - parent);
            if (gain > best.gain) {
                best = {gain, feature, threshold, default_left};
            }
        }
    }

    bool apply_splits(RegressionTree& tree, const std::vector<int>& active,
                      const std::vector<SplitCandidate>& splits) {
        bool any = false;
        std::vector<int> split_nodes;
        for (int nd : active) {
            const auto& s = splits[nd];
            stats_[nd].active = false;
            if (s.feature < 0 || s.gain <= params_.min_split_gain) {
                continue;
            }
            auto& node = tree.nodes[nd];
            node.feature = s.feature;
            node.threshold = s.threshold;
            node.default_left = s.default_left;
            node.left = static_cast<int>(tree.nodes.size());
            node.right = node.left + 1;
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            NodeStats child;
            child.depth = stats_[nd].depth + 1;
            child.active = child.depth < params_.max_depth;
            stats_.push_back(child);
            stats_.push_back(child);
            split_nodes.push_back(nd);
            any = true;
        }
        if (!any) {
            return false;
        }

        std::vector<std::size_t> left_count(stats_.size(), 0),
            right_count(stats_.size(), 0);
        for (std::size_t t = 0; t < node_of_.size(); ++t) {
            const int nd = node_of_[t];
            const auto& node = tree.nodes[nd];
            if (node.is_leaf()) {
                continue;
            }
            const double v = x_.at(t, node.feature);
            const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
            const int child = go_left ? node.left : node.right;
            node_of_[t] = child;
            stats_[child].g += g_[t];
            stats_[child].h += h_[t];
            (go_left ? left_count : right_count)[nd] += 1;
        }

        // Numerical near-ties in the gain scan can nominate splits where one
        // side ends up empty; demote those back to leaves.
        for (int nd : split_nodes) {
            if (left_count[nd] == 0 || right_count[nd] == 0) {
                auto& node = tree.nodes[nd];
                const int l = node.left;
                const int r = node.right;
                for (auto& assigned : node_of_) {
                    if (assigned == l || assigned == r) {
                        assigned = nd;
                    }
                }
                stats_[l].active = false;
                stats_[r].active = false;
                tree.nodes[l].feature = -2;  // orphaned; pruned below
                tree.nodes[r].feature = -2;
                node.feature = -1;
                node.left = node.right = -1;
            }
        }
        return true;
    }

    const ObservationMatrix& x_;
    const std::vector<std::vector<int>>& sorted_idx_;
    std::span<const double> g_;
    std::span<const double> h_;
    const BoostParams& params_;
    std::vector<NodeStats> stats_;
    std::vector<int> node_of_;
};

RegressionTree prune_orphans(RegressionTree tree) {
    // Rebuild the node array without orphaned children left by demoted splits.
    std::vector<int> remap(tree.nodes.size(), -1);
    RegressionTree out;
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        if (tree.nodes[id].feature == -2) {
            continue;
        }
        remap[id] = static_cast<int>(out.nodes.size());
        out.nodes.push_back(tree.nodes[id]);
    }
    for (auto& node : out.nodes) {
        if (!node.is_leaf()) {
            node.left = remap[node.left];
            node.right = remap[node.right];
        }
    }
    return out;
}

void softmax_rows(Matrix& scores, Matrix& probs) {
    for (std::size_t t = 0; t < scores.rows(); ++t) {
        double best = scores(t, 0);
        for (std::size_t c = 1; c < scores.cols(); ++c) {
            best = std::max(best, scores(t, c));
        }
        double denom = 0.0;
        for (std::size_t c = 0; c < scores.cols(); ++c) {
            probs(t, c) = std::exp(scores(t, c) - best);
            denom += probs(t, c);
        }
        for (std::size_t c = 0; c < scores.cols(); ++c) {
            probs(t, c) /= denom;
        }
    }
}

double soft_cross_entropy(const Matrix& targets, const Matrix& probs) {
    double loss = 0.0;
    for (std::size_t t = 0; t < targets.rows(); ++t) {
        for (std::size_t c = 0; c < targets.cols(); ++c) {
            if (targets(t, c) > 0.0) {
                loss -= targets(t, c) * std::log(std::max(probs(t, c), 1e-300));
            }
        }
    }
    return loss;
}

std::vector<std::vector<int>> presort_features(const ObservationMatrix& x) {
    std::vector<std::vector<int>> sorted(x.n_cols());
    for (std::size_t f = 0; f < x.n_cols(); ++f) {
        auto& order = sorted[f];
        order.reserve(x.n_rows());
        for (std::size_t t = 0; t < x.n_rows(); ++t) {
            if (!std::isnan(x.at(t, f))) {
                order.push_back(static_cast<int>(t));
            }
        }
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double va = x.at(a, f), vb = x.at(b, f);
            return va < vb || (va == vb && a < b);
        });
    }
    return sorted;
}

std::vector<int> pick_features(int n_features, double fraction, std::mt19937_64& rng) {
    std::vector<int> all(n_features);
    std::iota(all.begin(), all.end(), 0);
    if (fraction >= 1.0) {
        return all;
    }
    const int k = std::max(1, static_cast<int>(std::round(fraction * n_features)));
    std::vector<int> picked;
    picked.reserve(k);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), k, rng);
    return picked;
}

}  // namespace

double RegressionTree::predict(const ObservationMatrix& x, std::size_t row) const {
    int id = 0;
    while (!nodes[id].is_leaf()) {
        const auto& node = nodes[id];
        const double v = x.at(row, node.feature);
        id = (std::isnan(v) ? node.default_left : v < node.threshold) ? node.left
                                                                      : node.right;
    }
    return nodes[id].leaf_value;
}

double RegressionTree::predict(std::span<const double> row) const {
    int id = 0;
    while (!nodes[id].is_leaf()) {
        const auto& node = nodes[id];
        const double v = row[node.feature];
        id = (std::isnan(v) ? node.default_left : v < node.threshold) ? node.left
                                                                      : node.right;
    }
    return nodes[id].leaf_value;
}

Matrix BoostedEnsemble::raw_scores(const ObservationMatrix& features) const {
    if (features.n_cols() != static_cast<std::size_t>(n_features)) {
        fail(ErrorCode::dimension_mismatch,
             "feature dimension mismatch: expected " + std::to_string(n_features) +
                 ", got " + std::to_string(features.n_cols()));
    }
    Matrix scores(features.n_rows(), n_classes, 0.0);
    for (const auto& round : rounds) {
        for (int c = 0; c < n_classes; ++c) {
            for (std::size_t t = 0; t < features.n_rows(); ++t) {
                scores(t, c) += params.learning_rate * round[c].predict(features, t);
            }
        }
    }
    return scores;
}

Matrix BoostedEnsemble::predict_proba(const ObservationMatrix& features) const {
    Matrix scores = raw_scores(features);
    Matrix probs(scores.rows(), scores.cols());
    softmax_rows(scores, probs);
    return probs;
}

BoostedEnsemble fit_soft(const ObservationMatrix& features, const Matrix& soft_targets,
                         const BoostParams& params) {
    const std::size_t n = features.n_rows();
    if (n == 0 || features.n_cols() == 0) {
        fail(ErrorCode::invalid_argument, "empty training data");
    }
    if (soft_targets.rows() != n || soft_targets.cols() == 0) {
        fail(ErrorCode::dimension_mismatch, "soft target shape mismatch");
    }
    if (params.n_rounds < 0 || params.max_depth < 1) {
        fail(ErrorCode::invalid_argument, "invalid boosting parameters");
    }
    for (std::size_t t = 0; t < n; ++t) {
        double row_sum = 0.0;
        for (std::size_t c = 0; c < soft_targets.cols(); ++c) {
            const double v = soft_targets(t, c);
            if (!(v >= 0.0) || !std::isfinite(v)) {
                fail(ErrorCode::invalid_argument, "soft targets must be non-negative");
            }
            row_sum += v;
        }
        if (std::abs(row_sum - 1.0) > 1e-6) {
            fail(ErrorCode::invalid_argument,
                 "soft target row " + std::to_string(t) + " does not sum to 1");
        }
    }

    const int n_classes = static_cast<int>(soft_targets.cols());
    BoostedEnsemble ensemble;
    ensemble.n_classes = n_classes;
    ensemble.n_features = static_cast<int>(features.n_cols());
    ensemble.params = params;

    const auto sorted_idx = presort_features(features);
    std::mt19937_64 rng(params.seed);

    Matrix scores(n, n_classes, 0.0);
    Matrix probs(n, n_classes);
    std::vector<double> g(n), h(n);

    for (int round = 0; round < params.n_rounds; ++round) {
        softmax_rows(scores, probs);
        ensemble.train_loss.push_back(soft_cross_entropy(soft_targets, probs));

        std::vector<RegressionTree> round_trees;
        round_trees.reserve(n_classes);
        for (int c = 0; c < n_classes; ++c) {
            for (std::size_t t = 0; t < n; ++t) {
                const double p = probs(t, c);
                g[t] = p - soft_targets(t, c);
                h[t] = p * (1.0 - p);
            }
            const auto feature_set =
                pick_features(ensemble.n_features, params.feature_subsample, rng);
            TreeBuilder builder(features, sorted_idx, g, h, params);
            RegressionTree tree = prune_orphans(builder.build(feature_set));
            for (std::size_t t = 0; t < n; ++t) {
                scores(t, c) += params.learning_rate * tree.predict(features, t);
            }
            round_trees.push_back(std::move(tree));
        }
        ensemble.rounds.push_back(std::move(round_trees));
    }
    softmax_rows(scores, probs);
    ensemble.train_loss.push_back(soft_cross_entropy(soft_targets, probs));
    return ensemble;
}

}  // namespace regimehmm::gbt
