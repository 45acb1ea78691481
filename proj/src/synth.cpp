#include "regimehmm/synth.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <string>

namespace regimehmm::pipeline {

namespace {

std::string iso_date(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd(day);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int sample_index(std::span<const double> probs, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace

SynthConfig SynthConfig::default_three_state() {
    SynthConfig cfg;
    cfg.n_states = 3;
    cfg.means = {-5.0, 0.0, 5.0};
    cfg.variances = {1.0, 1.0, 1.0};
    cfg.pi = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    cfg.trans = Matrix(3, 3, 0.05);
    for (int i = 0; i < 3; ++i) {
        cfg.trans(i, i) = 0.9;
    }
    return cfg;
}

void SynthConfig::validate() const {
    if (n_states < 1 || n_bars < 2 || n_factor_cols < 1) {
        fail(ErrorCode::invalid_argument, "invalid synthetic generator shape");
    }
    const auto n = static_cast<std::size_t>(n_states);
    if (means.size() != n || variances.size() != n || pi.size() != n ||
        trans.rows() != n || trans.cols() != n) {
        fail(ErrorCode::dimension_mismatch, "generator parameter shapes mismatch");
    }
    double pi_sum = 0.0;
    for (double p : pi) {
        if (!(p >= 0.0)) {
            fail(ErrorCode::invalid_argument, "pi entries must be non-negative");
        }
        pi_sum += p;
    }
    if (std::abs(pi_sum - 1.0) > 1e-9) {
        fail(ErrorCode::invalid_argument, "pi must sum to 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(trans(i, j) >= 0.0)) {
                fail(ErrorCode::invalid_argument, "transition entries must be non-negative");
            }
            row_sum += trans(i, j);
        }
        if (std::abs(row_sum - 1.0) > 1e-9) {
            fail(ErrorCode::invalid_argument, "transition rows must sum to 1");
        }
    }
    for (double v : variances) {
        if (!(v > 0.0)) {
            fail(ErrorCode::invalid_argument, "variances must be positive");
        }
    }
    if (!(ret_vol > 0.0)) {
        fail(ErrorCode::invalid_argument, "ret_vol must be positive");
    }
}

labeling::BarSeries synth(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t n = config.n_bars;
    std::vector<int> states(n);
    states[0] = sample_index(config.pi, uniform(rng));
    for (std::size_t t = 1; t < n; ++t) {
        states[t] = sample_index(config.trans.row(states[t - 1]), uniform(rng));
    }

    std::vector<double> drift(config.n_states, 0.0);
    if (config.n_states > 1) {
        for (int s = 0; s < config.n_states; ++s) {
            const double position = 2.0 * s / (config.n_states - 1) - 1.0;
            drift[s] = config.drift_scale * config.ret_vol * position;
        }
    }

    labeling::BarSeries series;
    series.timestamps.reserve(n);
    series.open.resize(n);
    series.high.resize(n);
    series.low.resize(n);
    series.close.resize(n);
    series.pre_close.resize(n);
    series.volume.resize(n);

    std::vector<std::vector<double>> factors(config.n_factor_cols,
                                             std::vector<double>(n));
    const auto start = std::chrono::sys_days(std::chrono::year(2010) /
                                             std::chrono::January / 4);
    double prev_close = 100.0;
    for (std::size_t t = 0; t < n; ++t) {
        series.timestamps.push_back(iso_date(start + std::chrono::days(t)));
        const int s = states[t];
        const double r = drift[s] + config.ret_vol * normal(rng);
        const double close = t == 0 ? 100.0 : prev_close * std::exp(r);
        const double open = prev_close * std::exp(0.2 * config.ret_vol * normal(rng));
        const double wick_up = std::abs(normal(rng)) * 0.3 * config.ret_vol;
        const double wick_dn = std::abs(normal(rng)) * 0.3 * config.ret_vol;
        series.pre_close[t] = prev_close;
        series.open[t] = open;
        series.close[t] = close;
        series.high[t] = std::max(open, close) * std::exp(wick_up);
        series.low[t] = std::min(open, close) * std::exp(-wick_dn);
        series.volume[t] = 1e5 * std::exp(0.5 * normal(rng));
        for (auto& col : factors) {
            col[t] = config.means[s] + std::sqrt(config.variances[s]) * normal(rng);
        }
        prev_close = close;
    }

    for (int k = 0; k < config.n_factor_cols; ++k) {
        series.add_factor("f" + std::to_string(k + 1)) = std::move(factors[k]);
    }
    auto& truth = series.add_factor("state_truth");
    for (std::size_t t = 0; t < n; ++t) {
        truth[t] = states[t];
    }
    series.validate();
    return series;
}

}  // namespace regimehmm::pipeline
