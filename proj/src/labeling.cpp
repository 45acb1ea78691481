#include "regimehmm/labeling.hpp"

#include <algorithm>
#include <cmath>

namespace regimehmm::labeling {

const std::vector<double>* BarSeries::factor(std::string_view name) const {
    for (const auto& [col_name, values] : factors) {
        if (col_name == name) {
            return &values;
        }
    }
    return nullptr;
}

std::vector<double>& BarSeries::add_factor(std::string name) {
    for (auto& [col_name, values] : factors) {
        if (col_name == name) {
            return values;
        }
    }
    factors.emplace_back(std::move(name), std::vector<double>(size(), 0.0));
    return factors.back().second;
}

void BarSeries::validate() const {
    const std::size_t n = size();
    for (const auto* col : {&open, &high, &low, &close, &pre_close, &volume}) {
        if (!col->empty() && col->size() != n) {
            fail(ErrorCode::dimension_mismatch, "price column length mismatch");
        }
    }
    for (const auto& [name, values] : factors) {
        if (values.size() != n) {
            fail(ErrorCode::dimension_mismatch, "factor column '" + name +
                                                    "' length mismatch");
        }
    }
    for (std::size_t t = 1; t < n; ++t) {
        if (!(timestamps[t - 1] < timestamps[t])) {
            fail(ErrorCode::invalid_argument,
                 "timestamps must be strictly increasing at row " + std::to_string(t));
        }
    }
    if (!open.empty() && !high.empty() && !low.empty() && !close.empty()) {
        for (std::size_t t = 0; t < n; ++t) {
            const double o = open[t], h = high[t], l = low[t], c = close[t];
            if (std::isnan(o) || std::isnan(h) || std::isnan(l) || std::isnan(c)) {
                continue;
            }
            if (!(l <= std::min(o, c) && std::max(o, c) <= h)) {
                fail(ErrorCode::invalid_argument,
                     "OHLC ordering violated at row " + std::to_string(t));
            }
        }
    }
}

void BarrierConfig::validate() const {
    if (horizon < 1) {
        fail(ErrorCode::invalid_argument, "horizon must be >= 1");
    }
    if (vol_span < 2) {
        fail(ErrorCode::invalid_argument, "vol_span must be >= 2");
    }
    if (pt_mult < 0.0 || sl_mult < 0.0) {
        fail(ErrorCode::invalid_argument, "barrier multipliers must be non-negative");
    }
}

std::string_view barrier_hit_name(BarrierHit hit) noexcept {
    switch (hit) {
        case BarrierHit::none: return "none";
        case BarrierHit::upper: return "upper";
        case BarrierHit::lower: return "lower";
        case BarrierHit::vertical: return "vertical";
        case BarrierHit::both: return "both";
    }
    return "none";
}

std::size_t LabelSeries::n_defined() const noexcept {
    std::size_t n = 0;
    for (auto d : defined) {
        n += d;
    }
    return n;
}

std::vector<double> ewma_volatility(std::span<const double> close, std::size_t span) {
    if (span < 2) {
        fail(ErrorCode::invalid_argument, "vol_span must be >= 2");
    }
    if (close.size() < 2) {
        fail(ErrorCode::degenerate_input, "need at least 2 bars for volatility");
    }
    for (double p : close) {
        if (!(p > 0.0)) {
            fail(ErrorCode::invalid_argument, "non-positive price in close series");
        }
    }
    const double alpha = 2.0 / (static_cast<double>(span) + 1.0);
    std::vector<double> sigma(close.size(), 0.0);
    double ewma = 0.0;
    for (std::size_t t = 1; t < close.size(); ++t) {
        const double r = std::log(close[t] / close[t - 1]);
        ewma = (t == 1) ? r * r : (1.0 - alpha) * ewma + alpha * r * r;
        sigma[t] = std::sqrt(ewma);
    }
    return sigma;
}

LabelSeries triple_barrier(const BarSeries& series, const BarrierConfig& cfg) {
    cfg.validate();
    series.validate();
    const std::size_t n = series.size();
    if (series.close.size() != n || n < 2) {
        fail(ErrorCode::degenerate_input, "close series required for labeling");
    }
    if (cfg.use_high_low && (series.high.size() != n || series.low.size() != n)) {
        fail(ErrorCode::invalid_argument,
             "high/low columns required when use_high_low is set");
    }
    if (n < cfg.horizon + 1) {
        fail(ErrorCode::degenerate_input, "series shorter than the vertical barrier");
    }

    const auto sigma = ewma_volatility(series.close, cfg.vol_span);

    LabelSeries out;
    out.labels.assign(n, 0);
    out.defined.assign(n, 0);
    out.touch_index.assign(n, 0);
    out.barrier_hit.assign(n, BarrierHit::none);

    for (std::size_t t0 = 0; t0 + cfg.horizon <= n - 1; ++t0) {
        const double entry = series.close[t0];
        const double upper = entry * (1.0 + cfg.pt_mult * sigma[t0]);
        const double lower = entry * (1.0 - cfg.sl_mult * sigma[t0]);

        int label = 0;
        std::size_t touch = t0 + cfg.horizon;
        BarrierHit hit = BarrierHit::vertical;
        for (std::size_t s = t0 + 1; s <= t0 + cfg.horizon; ++s) {
            const double up_val = cfg.use_high_low ? series.high[s] : series.close[s];
            const double lo_val = cfg.use_high_low ? series.low[s] : series.close[s];
            const bool touched_upper = up_val >= upper;
            const bool touched_lower = lo_val <= lower;
            if (touched_upper && touched_lower) {
                label = 0;
                touch = s;
                hit = BarrierHit::both;
                break;
            }
            if (touched_upper) {
                label = 1;
                touch = s;
                hit = BarrierHit::upper;
                break;
            }
            if (touched_lower) {
                label = -1;
                touch = s;
                hit = BarrierHit::lower;
                break;
            }
        }
        out.labels[t0] = label;
        out.defined[t0] = 1;
        out.touch_index[t0] = touch;
        out.barrier_hit[t0] = hit;
    }
    return out;
}

}  // namespace regimehmm::labeling
