#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regimehmm/error.hpp"

namespace regimehmm::labeling {

// Per-bar OHLCV data plus arbitrary named factor columns, all aligned by bar.
// Factor columns live in a deque so references from add_factor stay valid as
// further columns are added.
struct BarSeries {
    std::vector<std::string> timestamps;  // ISO-8601 dates, strictly increasing
    std::vector<double> open, high, low, close, pre_close, volume;
    std::deque<std::pair<std::string, std::vector<double>>> factors;

    std::size_t size() const noexcept { return timestamps.size(); }
    const std::vector<double>* factor(std::string_view name) const;
    std::vector<double>& add_factor(std::string name);
    void validate() const;
};

struct BarrierConfig {
    double pt_mult = 2.0;  // profit-taking width in sigma units
    double sl_mult = 2.0;  // stop-loss width
    std::size_t horizon = 5;
    std::size_t vol_span = 20;
    bool use_high_low = true;

    void validate() const;
};

enum class BarrierHit : std::uint8_t {
    none,
    upper,
    lower,
    vertical,
    both,  // upper and lower touched within the same bar: ambiguous, label 0
};

std::string_view barrier_hit_name(BarrierHit hit) noexcept;

struct LabelSeries {
    std::vector<int> labels;  // -1 | 0 | +1 where defined
    std::vector<std::uint8_t> defined;
    std::vector<std::size_t> touch_index;  // first-touch bar t_i1
    std::vector<BarrierHit> barrier_hit;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t n_defined() const noexcept;
};

// RiskMetrics-style recursion: sigma_t = sqrt of the EWMA (alpha = 2/(span+1))
// of squared log-returns, seeded with the first squared return. sigma_0 = 0.
std::vector<double> ewma_volatility(std::span<const double> close, std::size_t span);

// Labels every bar t0 with t0 + horizon <= T-1 by the first barrier the price
// path touches. Barriers: close[t0] * (1 +- mult * sigma[t0]).
LabelSeries triple_barrier(const BarSeries& series, const BarrierConfig& cfg);

}  // namespace regimehmm::labeling
