#pragma once

#include <cstdint>
#include <vector>

#include "regimehmm/labeling.hpp"
#include "regimehmm/matrix.hpp"

namespace regimehmm::pipeline {

// Ground-truth generator: hidden chain with Gaussian factor columns and a
// close-price path whose log-return drift depends on the state, so barrier
// labels correlate with the hidden truth.
struct SynthConfig {
    int n_states = 3;
    std::size_t n_bars = 2000;
    std::vector<double> means;      // per-state factor mean
    std::vector<double> variances;  // per-state factor variance
    std::vector<double> pi;
    Matrix trans;
    int n_factor_cols = 2;
    double ret_vol = 0.01;
    double drift_scale = 2.0;  // extreme-state drift, in ret_vol units
    std::uint64_t seed = 0;

    // 3-state default: means -5/0/+5, unit variance, 0.9-diagonal chain.
    static SynthConfig default_three_state();
    void validate() const;
};

// Emits OHLCV bars, factor columns f1..fK, and a "state_truth" column.
labeling::BarSeries synth(const SynthConfig& config);

}  // namespace regimehmm::pipeline
