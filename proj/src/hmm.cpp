#include "regimehmm/hmm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "regimehmm/kernels.hpp"

namespace regimehmm::hmm {

namespace {

constexpr double kStochasticTol = 1e-9;

void check_dims(const ChainParams& chain, const EmissionLogMatrix& emis) {
    chain.validate();
    if (emis.n_states() != static_cast<std::size_t>(chain.n_states)) {
        fail(ErrorCode::dimension_mismatch,
             "emission rows (" + std::to_string(emis.n_states()) +
                 ") do not match n_states (" + std::to_string(chain.n_states) + ")");
    }
    if (emis.n_steps() == 0) {
        fail(ErrorCode::invalid_argument, "empty observation sequence");
    }
    if (!emis.values.all_finite()) {
        fail(ErrorCode::nonfinite_input, "emission log matrix has non-finite entries");
    }
}

}  // namespace

void ChainParams::validate() const {
    if (n_states < 1) {
        fail(ErrorCode::invalid_argument, "n_states must be >= 1");
    }
    const auto n = static_cast<std::size_t>(n_states);
    if (pi.size() != n || trans.rows() != n || trans.cols() != n) {
        fail(ErrorCode::dimension_mismatch, "chain parameter shapes do not match n_states");
    }
    double pi_sum = 0.0;
    for (double p : pi) {
        if (!(p >= 0.0)) {
            fail(ErrorCode::invalid_argument, "pi has a negative or non-finite entry");
        }
        pi_sum += p;
    }
    if (std::abs(pi_sum - 1.0) > kStochasticTol) {
        fail(ErrorCode::invalid_argument, "pi does not sum to 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(trans(i, j) >= 0.0)) {
                fail(ErrorCode::invalid_argument, "transition matrix has a negative entry");
            }
            row_sum += trans(i, j);
        }
        if (std::abs(row_sum - 1.0) > kStochasticTol) {
            fail(ErrorCode::invalid_argument,
                 "transition row " + std::to_string(i) + " does not sum to 1");
        }
    }
}

ForwardResult forward(const ChainParams& chain, const EmissionLogMatrix& emis) {
    check_dims(chain, emis);
    const std::size_t n = emis.n_states();
    const std::size_t steps = emis.n_steps();

    ForwardResult out;
    out.alpha_hat = Matrix(n, steps);
    out.scalers.resize(steps);

    std::vector<double> cur(n);
    for (std::size_t i = 0; i < n; ++i) {
        cur[i] = chain.pi[i] * std::exp(emis.values(i, 0));
    }
    double ll = 0.0;
    std::vector<double> prev(n);
    for (std::size_t t = 0;; ++t) {
        const double mass = kernels::sum(cur);
        if (!(mass > 0.0) || !std::isfinite(mass)) {
            fail(ErrorCode::degenerate_input,
                 "zero or non-finite forward mass at step " + std::to_string(t));
        }
        const double scaler = 1.0 / mass;
        out.scalers[t] = scaler;
        ll -= std::log(scaler);
        for (std::size_t i = 0; i < n; ++i) {
            out.alpha_hat(i, t) = cur[i] * scaler;
        }
        if (t + 1 == steps) {
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            prev[i] = out.alpha_hat(i, t);
        }
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += prev[i] * chain.trans(i, j);
            }
            cur[j] = acc * std::exp(emis.values(j, t + 1));
        }
    }
    out.log_likelihood = ll;
    return out;
}

Matrix backward(const ChainParams& chain, const EmissionLogMatrix& emis,
                std::span<const double> scalers) {
    check_dims(chain, emis);
    const std::size_t n = emis.n_states();
    const std::size_t steps = emis.n_steps();
    if (scalers.size() != steps) {
        fail(ErrorCode::dimension_mismatch, "scalers length does not match sequence length");
    }

    Matrix beta_hat(n, steps);
    for (std::size_t i = 0; i < n; ++i) {
        beta_hat(i, steps - 1) = scalers[steps - 1];
    }
    std::vector<double> emitted(n);
    for (std::size_t t = steps - 1; t-- > 0;) {
        for (std::size_t j = 0; j < n; ++j) {
            emitted[j] = std::exp(emis.values(j, t + 1)) * beta_hat(j, t + 1);
        }
        for (std::size_t i = 0; i < n; ++i) {
            beta_hat(i, t) = scalers[t] * kernels::dot(chain.trans.row(i), emitted);
        }
    }
    return beta_hat;
}

PosteriorMatrix posteriors(const ChainParams& chain, const EmissionLogMatrix& emis) {
    const ForwardResult fwd = forward(chain, emis);
    const Matrix beta_hat = backward(chain, emis, fwd.scalers);
    const std::size_t n = emis.n_states();
    const std::size_t steps = emis.n_steps();

    PosteriorMatrix post;
    post.log_likelihood = fwd.log_likelihood;
    post.gamma = Matrix(n, steps);
    for (std::size_t t = 0; t < steps; ++t) {
        const double inv_scaler = 1.0 / fwd.scalers[t];
        for (std::size_t i = 0; i < n; ++i) {
            post.gamma(i, t) = fwd.alpha_hat(i, t) * beta_hat(i, t) * inv_scaler;
        }
    }

    // With Rabiner scaling the xi numerator needs no extra normalization:
    // alpha_hat(t) and beta_hat(t+1) already absorb 1/P{O|lambda}.
    post.xi.reserve(steps > 0 ? steps - 1 : 0);
    for (std::size_t t = 0; t + 1 < steps; ++t) {
        Matrix x(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            const double emitted = std::exp(emis.values(j, t + 1)) * beta_hat(j, t + 1);
            for (std::size_t i = 0; i < n; ++i) {
                x(i, j) = fwd.alpha_hat(i, t) * chain.trans(i, j) * emitted;
            }
        }
        post.xi.push_back(std::move(x));
    }
    return post;
}

StatePath viterbi(const ChainParams& chain, const EmissionLogMatrix& emis) {
    check_dims(chain, emis);
    const std::size_t n = emis.n_states();
    const std::size_t steps = emis.n_steps();

    Matrix delta(n, steps, -std::numeric_limits<double>::infinity());
    std::vector<std::vector<int>> argmax(steps, std::vector<int>(n, 0));

    std::vector<double> log_pi(n);
    Matrix log_trans(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        log_pi[i] = std::log(chain.pi[i]);
        for (std::size_t j = 0; j < n; ++j) {
            log_trans(i, j) = std::log(chain.trans(i, j));
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        delta(i, 0) = log_pi[i] + emis.values(i, 0);
    }
    for (std::size_t t = 1; t < steps; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            double best = delta(0, t - 1) + log_trans(0, j);
            int best_i = 0;
            for (std::size_t i = 1; i < n; ++i) {
                const double cand = delta(i, t - 1) + log_trans(i, j);
                if (cand > best) {
                    best = cand;
                    best_i = static_cast<int>(i);
                }
            }
            delta(j, t) = best + emis.values(j, t);
            argmax[t][j] = best_i;
        }
    }

    StatePath path;
    path.states.resize(steps);
    std::size_t last = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (delta(i, steps - 1) > delta(last, steps - 1)) {
            last = i;
        }
    }
    path.path_log_score = delta(last, steps - 1);
    path.states[steps - 1] = static_cast<int>(last);
    for (std::size_t t = steps - 1; t > 0; --t) {
        last = static_cast<std::size_t>(argmax[t][last]);
        path.states[t - 1] = static_cast<int>(last);
    }
    return path;
}

Matrix reestimate_transitions(const PosteriorMatrix& post) {
    const std::size_t n = post.gamma.rows();
    const std::size_t steps = post.gamma.cols();
    if (steps < 2) {
        fail(ErrorCode::invalid_argument, "transition re-estimation needs T >= 2");
    }
    if (post.xi.size() != steps - 1) {
        fail(ErrorCode::dimension_mismatch, "xi does not cover T-1 steps");
    }

    Matrix trans(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        for (std::size_t t = 0; t + 1 < steps; ++t) {
            denom += post.gamma(i, t);
        }
        if (denom <= 0.0) {
            for (std::size_t j = 0; j < n; ++j) {
                trans(i, j) = 1.0 / static_cast<double>(n);
            }
            continue;
        }
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double numer = 0.0;
            for (std::size_t t = 0; t + 1 < steps; ++t) {
                numer += post.xi[t](i, j);
            }
            trans(i, j) = numer / denom;
            row_sum += trans(i, j);
        }
        if (!(row_sum > 0.0)) {
            for (std::size_t j = 0; j < n; ++j) {
                trans(i, j) = 1.0 / static_cast<double>(n);
            }
            continue;
        }
        // Guard against drift from the xi/gamma consistency tolerance.
        for (std::size_t j = 0; j < n; ++j) {
            trans(i, j) /= row_sum;
        }
    }
    return trans;
}

}  // namespace regimehmm::hmm
