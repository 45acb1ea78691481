#include "regimehmm/features.hpp"

#include <cmath>
#include <limits>

namespace regimehmm::pipeline {

namespace {

constexpr std::size_t kReturnLag = 5;

void require_positive(const std::vector<double>& col, const char* name) {
    for (std::size_t t = 0; t < col.size(); ++t) {
        if (!(col[t] > 0.0)) {
            fail(ErrorCode::invalid_argument, std::string("non-positive ") + name +
                                                  " at row " + std::to_string(t));
        }
    }
}

}  // namespace

const std::vector<std::string>& market_feature_names() {
    static const std::vector<std::string> names = {
        "ret_5d_log",          "hl_log_ratio",        "close_over_preclose",
        "open_over_preclose",  "high_over_preclose",  "low_over_preclose",
    };
    return names;
}

void derive_market_features(labeling::BarSeries& series) {
    const std::size_t n = series.size();
    if (series.open.size() != n || series.high.size() != n || series.low.size() != n ||
        series.close.size() != n || series.pre_close.size() != n) {
        fail(ErrorCode::invalid_argument,
             "market features need open/high/low/close/pre_close columns");
    }
    require_positive(series.open, "open");
    require_positive(series.high, "high");
    require_positive(series.low, "low");
    require_positive(series.close, "close");
    require_positive(series.pre_close, "pre_close");

    auto& ret5 = series.add_factor("ret_5d_log");
    auto& hl = series.add_factor("hl_log_ratio");
    auto& c_pc = series.add_factor("close_over_preclose");
    auto& o_pc = series.add_factor("open_over_preclose");
    auto& h_pc = series.add_factor("high_over_preclose");
    auto& l_pc = series.add_factor("low_over_preclose");

    for (std::size_t t = 0; t < n; ++t) {
        ret5[t] = t < kReturnLag
                      ? std::numeric_limits<double>::quiet_NaN()
                      : std::log(series.close[t] / series.close[t - kReturnLag]);
        hl[t] = std::log(series.high[t] / series.low[t]);
        c_pc[t] = series.close[t] / series.pre_close[t];
        o_pc[t] = series.open[t] / series.pre_close[t];
        h_pc[t] = series.high[t] / series.pre_close[t];
        l_pc[t] = series.low[t] / series.pre_close[t];
    }
}

}  // namespace regimehmm::pipeline
