#pragma once

#include <cstdint>
#include <vector>

#include "regimehmm/gbt.hpp"
#include "regimehmm/gmm.hpp"
#include "regimehmm/hmm.hpp"

namespace regimehmm::train {

enum class EmissionKind {
    mixture,
    boosted,
};

struct MixtureParams {
    int n_components = 2;
    double var_floor = 1e-6;
};

struct FitConfig {
    int n_states = 3;
    int max_iters = 500;
    double tol = 1e-6;  // minimum relative log-likelihood improvement
    std::uint64_t seed = 0;
    EmissionKind emission = EmissionKind::mixture;
    MixtureParams mixture;
    gbt::BoostParams boosted;

    void validate() const;
};

struct FitTrace {
    std::vector<double> log_likelihood;
    bool converged = false;
    int iterations = 0;
};

// A fitted chain plus its emission model. For boosted emissions the ensemble
// predicts state posteriors; emission logs are the scaled likelihoods
// log(gamma_hat) - log(state_prior).
struct RegimeModel {
    hmm::ChainParams chain;
    EmissionKind emission_kind = EmissionKind::mixture;
    gmm::MixtureEmission mixture;
    gbt::BoostedEnsemble ensemble;
    std::vector<double> state_priors;
    FitTrace trace;

    hmm::EmissionLogMatrix emission_logs(const ObservationMatrix& obs) const;
};

// Baum-Welch with Gaussian mixture emissions. Trace log-likelihood is
// non-decreasing up to numerical tolerance.
RegimeModel fit_mixture_hmm(const ObservationMatrix& obs, const FitConfig& config);

// Hybrid loop: mixture init, then alternate posterior computation, transition
// re-estimation, and boosted-tree emission refits. Keeps the best-likelihood
// iterate; the trace is not guaranteed monotone.
RegimeModel fit_boosted_hmm(const ObservationMatrix& obs, const FitConfig& config);

hmm::PosteriorMatrix state_proba(const RegimeModel& model, const ObservationMatrix& obs);

hmm::StatePath decode(const RegimeModel& model, const ObservationMatrix& obs);

}  // namespace regimehmm::train
