#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "regimehmm/hmm.hpp"
#include "regimehmm/matrix.hpp"

namespace regimehmm::gmm {

// Per-state diagonal Gaussian mixture.
struct MixtureEmission {
    int n_states = 0;
    int n_components = 0;
    int dim = 0;
    Matrix weights;                 // N x M, rows sum to 1
    std::vector<Matrix> means;      // per state: M x d
    std::vector<Matrix> variances;  // per state: M x d, entries >= var_floor
    double var_floor = 1e-6;

    void validate() const;
};

// Log mixture density of one observation under one state, clamped at
// hmm::kEmissionLogFloor.
double log_density(const MixtureEmission& emission, int state,
                   std::span<const double> obs);

// Evaluates log b_j(O_t) for every state and step. Hot path of EM; runs on
// the vector kernels column by column.
hmm::EmissionLogMatrix emission_log_matrix(const MixtureEmission& emission,
                                           const ObservationMatrix& obs);

// One EM update of weights/means/variances for fixed state posteriors gamma
// (N x T). States with total responsibility below 1e-12 are left unchanged.
MixtureEmission m_step(const MixtureEmission& emission, const ObservationMatrix& obs,
                       const Matrix& gamma);

// Deterministic k-means++ seeding over observation rows with Lloyd
// refinement; uniform weights, variances set to the global per-dimension
// sample variance. Centers are sorted and dealt to states in blocks of
// n_components.
MixtureEmission init_emission(const ObservationMatrix& obs, int n_states,
                              int n_components, std::uint64_t seed);

}  // namespace regimehmm::gmm
