#pragma once

#include <span>
#include <vector>

#include "regimehmm/matrix.hpp"

namespace regimehmm::hmm {

// Hidden chain: initial distribution and row-stochastic transition matrix.
struct ChainParams {
    int n_states = 0;
    std::vector<double> pi;
    Matrix trans;  // n_states x n_states

    // Throws on negative entries or rows/pi off stochastic by more than 1e-9.
    void validate() const;
};

// N x T matrix of per-state observation log-densities. Emission models must
// floor entries at kEmissionLogFloor so every entry is finite.
struct EmissionLogMatrix {
    Matrix values;

    std::size_t n_states() const noexcept { return values.rows(); }
    std::size_t n_steps() const noexcept { return values.cols(); }
};

inline constexpr double kEmissionLogFloor = -700.0;

struct ForwardResult {
    Matrix alpha_hat;             // N x T, columns sum to 1
    std::vector<double> scalers;  // per-step normalizers c_t
    double log_likelihood = 0.0;  // -sum_t log c_t
};

struct PosteriorMatrix {
    Matrix gamma;            // N x T, columns sum to 1
    std::vector<Matrix> xi;  // T-1 matrices, N x N
    double log_likelihood = 0.0;
};

struct StatePath {
    std::vector<int> states;
    double path_log_score = 0.0;  // joint log-probability of (path, observations)
};

ForwardResult forward(const ChainParams& chain, const EmissionLogMatrix& emis);

// Scaled beta. beta_hat[.][T-1] equals scalers[T-1]; combine with alpha_hat as
// gamma(i,t) = alpha_hat(i,t) * beta_hat(i,t) / scalers[t].
Matrix backward(const ChainParams& chain, const EmissionLogMatrix& emis,
                std::span<const double> scalers);

PosteriorMatrix posteriors(const ChainParams& chain, const EmissionLogMatrix& emis);

// Max-probability path; ties broken toward the lower state index.
StatePath viterbi(const ChainParams& chain, const EmissionLogMatrix& emis);

// a_ij = sum_{t<=T-2} xi_t(i,j) / sum_{t<=T-2} gamma_t(i). Rows with zero
// mass become uniform.
Matrix reestimate_transitions(const PosteriorMatrix& post);

}  // namespace regimehmm::hmm
