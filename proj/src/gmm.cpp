#include "regimehmm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "regimehmm/kernels.hpp"

namespace regimehmm::gmm {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kMinResponsibility = 1e-12;
constexpr double kMinWeight = 1e-12;

// log of the normalization constant plus the component's mixing weight.
double component_log_const(const MixtureEmission& e, int j, int k) {
    double acc = std::log(std::max(e.weights(j, k), kMinWeight));
    for (int d = 0; d < e.dim; ++d) {
        acc -= 0.5 * (kLogTwoPi + std::log(e.variances[j](k, d)));
    }
    return acc;
}

}  // namespace

void MixtureEmission::validate() const {
    if (n_states < 1 || n_components < 1 || dim < 1) {
        fail(ErrorCode::invalid_argument, "mixture shape parameters must be positive");
    }
    const auto n = static_cast<std::size_t>(n_states);
    const auto m = static_cast<std::size_t>(n_components);
    const auto d = static_cast<std::size_t>(dim);
    if (weights.rows() != n || weights.cols() != m || means.size() != n ||
        variances.size() != n) {
        fail(ErrorCode::dimension_mismatch, "mixture parameter shapes are inconsistent");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (means[j].rows() != m || means[j].cols() != d || variances[j].rows() != m ||
            variances[j].cols() != d) {
            fail(ErrorCode::dimension_mismatch, "mixture parameter shapes are inconsistent");
        }
        double row_sum = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            row_sum += weights(j, k);
            for (std::size_t dd = 0; dd < d; ++dd) {
                if (!(variances[j](k, dd) >= var_floor)) {
                    fail(ErrorCode::invalid_argument, "variance below floor");
                }
            }
        }
        if (std::abs(row_sum - 1.0) > 1e-9) {
            fail(ErrorCode::invalid_argument,
                 "mixture weights for state " + std::to_string(j) + " do not sum to 1");
        }
    }
}

double log_density(const MixtureEmission& emission, int state,
                   std::span<const double> obs) {
    if (obs.size() != static_cast<std::size_t>(emission.dim)) {
        fail(ErrorCode::dimension_mismatch, "observation dimension mismatch");
    }
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> comp(emission.n_components);
    for (int k = 0; k < emission.n_components; ++k) {
        double quad = 0.0;
        for (int d = 0; d < emission.dim; ++d) {
            const double diff = obs[d] - emission.means[state](k, d);
            quad += diff * diff / emission.variances[state](k, d);
        }
        comp[k] = component_log_const(emission, state, k) - 0.5 * quad;
        best = std::max(best, comp[k]);
    }
    double sum = 0.0;
    for (double c : comp) {
        sum += std::exp(c - best);
    }
    return std::max(best + std::log(sum), hmm::kEmissionLogFloor);
}

hmm::EmissionLogMatrix emission_log_matrix(const MixtureEmission& emission,
                                           const ObservationMatrix& obs) {
    emission.validate();
    if (obs.n_cols() != static_cast<std::size_t>(emission.dim)) {
        fail(ErrorCode::dimension_mismatch, "observation dimension mismatch");
    }
    if (!obs.all_finite()) {
        fail(ErrorCode::nonfinite_input, "observations contain non-finite cells");
    }
    const std::size_t steps = obs.n_rows();
    const auto m = static_cast<std::size_t>(emission.n_components);

    hmm::EmissionLogMatrix out;
    out.values = Matrix(emission.n_states, steps);
    Matrix comp(m, steps);
    for (int j = 0; j < emission.n_states; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
            auto quad = comp.row(k);
            std::fill(quad.begin(), quad.end(), 0.0);
            for (int d = 0; d < emission.dim; ++d) {
                kernels::acc_sq_dev(quad, obs.col(d), emission.means[j](k, d),
                                    1.0 / emission.variances[j](k, d));
            }
            const double log_const = component_log_const(emission, j,
                                                         static_cast<int>(k));
            for (std::size_t t = 0; t < steps; ++t) {
                quad[t] = log_const - 0.5 * quad[t];
            }
        }
        for (std::size_t t = 0; t < steps; ++t) {
            double best = comp(0, t);
            for (std::size_t k = 1; k < m; ++k) {
                best = std::max(best, comp(k, t));
            }
            double sum = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                sum += std::exp(comp(k, t) - best);
            }
            out.values(j, t) = std::max(best + std::log(sum), hmm::kEmissionLogFloor);
        }
    }
    return out;
}

MixtureEmission m_step(const MixtureEmission& emission, const ObservationMatrix& obs,
                       const Matrix& gamma) {
    emission.validate();
    const std::size_t steps = obs.n_rows();
    if (gamma.rows() != static_cast<std::size_t>(emission.n_states) ||
        gamma.cols() != steps) {
        fail(ErrorCode::dimension_mismatch, "gamma shape mismatch");
    }
    if (obs.n_cols() != static_cast<std::size_t>(emission.dim)) {
        fail(ErrorCode::dimension_mismatch, "observation dimension mismatch");
    }

    MixtureEmission next = emission;
    const auto m = static_cast<std::size_t>(emission.n_components);
    Matrix resp(m, steps);  // responsibilities for one state at a time
    for (int j = 0; j < emission.n_states; ++j) {
        const double state_mass = kernels::sum(gamma.row(j));
        if (state_mass < kMinResponsibility) {
            continue;  // no evidence: state parameters stay put
        }

        // Component responsibilities: gamma(j,t) * softmax_k of component logs.
        for (std::size_t k = 0; k < m; ++k) {
            auto row = resp.row(k);
            std::fill(row.begin(), row.end(), 0.0);
            for (int d = 0; d < emission.dim; ++d) {
                kernels::acc_sq_dev(row, obs.col(d), emission.means[j](k, d),
                                    1.0 / emission.variances[j](k, d));
            }
            const double log_const = component_log_const(emission, j,
                                                         static_cast<int>(k));
            for (std::size_t t = 0; t < steps; ++t) {
                row[t] = log_const - 0.5 * row[t];
            }
        }
        for (std::size_t t = 0; t < steps; ++t) {
            double best = resp(0, t);
            for (std::size_t k = 1; k < m; ++k) {
                best = std::max(best, resp(k, t));
            }
            double denom = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                resp(k, t) = std::exp(resp(k, t) - best);
                denom += resp(k, t);
            }
            const double scale = gamma(j, t) / denom;
            for (std::size_t k = 0; k < m; ++k) {
                resp(k, t) *= scale;
            }
        }

        double weight_sum = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double comp_mass = kernels::sum(resp.row(k));
            if (comp_mass < kMinResponsibility) {
                // Dead component: keep its parameters, floor its weight.
                next.weights(j, k) = kMinWeight;
                weight_sum += next.weights(j, k);
                continue;
            }
            for (int d = 0; d < emission.dim; ++d) {
                const double mean = kernels::dot(resp.row(k), obs.col(d)) / comp_mass;
                const double var =
                    kernels::weighted_sq_dev(resp.row(k), obs.col(d), mean) / comp_mass;
                next.means[j](static_cast<std::size_t>(k), d) = mean;
                next.variances[j](static_cast<std::size_t>(k), d) =
                    std::max(var, emission.var_floor);
            }
            next.weights(j, k) = std::max(comp_mass / state_mass, kMinWeight);
            weight_sum += next.weights(j, k);
        }
        for (std::size_t k = 0; k < m; ++k) {
            next.weights(j, k) /= weight_sum;
        }
    }
    return next;
}

MixtureEmission init_emission(const ObservationMatrix& obs, int n_states,
                              int n_components, std::uint64_t seed) {
    if (n_states < 1 || n_components < 1) {
        fail(ErrorCode::invalid_argument, "n_states and n_components must be >= 1");
    }
    const std::size_t steps = obs.n_rows();
    const std::size_t dim = obs.n_cols();
    const std::size_t n_centers =
        static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_components);
    if (steps < n_centers) {
        fail(ErrorCode::degenerate_input,
             "need at least n_states*n_components observations, got " +
                 std::to_string(steps));
    }
    if (dim == 0) {
        fail(ErrorCode::invalid_argument, "observations have zero columns");
    }
    if (!obs.all_finite()) {
        fail(ErrorCode::nonfinite_input, "observations contain non-finite cells");
    }

    std::mt19937_64 rng(seed);

    // k-means++ seeding over observation rows.
    std::vector<std::vector<double>> centers;
    centers.reserve(n_centers);
    std::uniform_int_distribution<std::size_t> first(0, steps - 1);
    centers.push_back(obs.row(first(rng)));

    std::vector<double> dist2(steps);
    while (centers.size() < n_centers) {
        double total = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) {
                double d2 = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = obs.at(t, d) - c[d];
                    d2 += diff * diff;
                }
                best = std::min(best, d2);
            }
            dist2[t] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (; pick + 1 < steps; ++pick) {
                target -= dist2[pick];
                if (target <= 0.0) {
                    break;
                }
            }
        } else {
            pick = first(rng);  // all points coincide with a center
        }
        centers.push_back(obs.row(pick));
    }

    // Lloyd refinement until assignments stabilize. A single center lands on
    // the sample mean; separated clusters each capture one center.
    std::vector<std::size_t> assign(steps, 0);
    for (int sweep = 0; sweep < 25; ++sweep) {
        bool moved = false;
        for (std::size_t t = 0; t < steps; ++t) {
            std::size_t best_c = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centers.size(); ++c) {
                double d2 = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = obs.at(t, d) - centers[c][d];
                    d2 += diff * diff;
                }
                if (d2 < best) {
                    best = d2;
                    best_c = c;
                }
            }
            if (assign[t] != best_c) {
                assign[t] = best_c;
                moved = true;
            }
        }
        if (!moved && sweep > 0) {
            break;
        }
        std::vector<std::vector<double>> sums(centers.size(),
                                              std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(centers.size(), 0);
        for (std::size_t t = 0; t < steps; ++t) {
            counts[assign[t]] += 1;
            for (std::size_t d = 0; d < dim; ++d) {
                sums[assign[t]][d] += obs.at(t, d);
            }
        }
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (counts[c] == 0) {
                continue;  // empty cluster keeps its seed
            }
            for (std::size_t d = 0; d < dim; ++d) {
                centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
    }
    std::sort(centers.begin(), centers.end());

    MixtureEmission e;
    e.n_states = n_states;
    e.n_components = n_components;
    e.dim = static_cast<int>(dim);
    e.weights = Matrix(n_states, n_components, 1.0 / n_components);
    e.means.assign(n_states, Matrix(n_components, dim));
    e.variances.assign(n_states, Matrix(n_components, dim));

    std::vector<double> global_var(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        const double mean = kernels::sum(obs.col(d)) / static_cast<double>(steps);
        double var = 0.0;
        for (std::size_t t = 0; t < steps; ++t) {
            const double diff = obs.at(t, d) - mean;
            var += diff * diff;
        }
        global_var[d] = std::max(var / static_cast<double>(steps), e.var_floor);
    }

    for (int j = 0; j < n_states; ++j) {
        for (int k = 0; k < n_components; ++k) {
            const auto& c = centers[static_cast<std::size_t>(j) * n_components + k];
            for (std::size_t d = 0; d < dim; ++d) {
                e.means[j](k, d) = c[d];
                e.variances[j](k, d) = global_var[d];
            }
        }
    }
    return e;
}

}  // namespace regimehmm::gmm
