#include "regimehmm/kernels.hpp"

// Reference lane. Plain left-to-right loops; every SIMD lane is tested for
// equivalence against these.

namespace regimehmm::kernels::detail {

namespace {

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i] * y[i];
    }
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += a * x[i];
    }
}

double weighted_sq_dev_scalar(const double* w, const double* x, double center,
                              std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - center;
        acc += w[i] * d * d;
    }
    return acc;
}

void acc_sq_dev_scalar(double* acc, const double* x, double mean, double inv_var,
                       std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        acc[i] += inv_var * d * d;
    }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable table{
        sum_scalar, dot_scalar, axpy_scalar, weighted_sq_dev_scalar, acc_sq_dev_scalar,
    };
    return table;
}

}  // namespace regimehmm::kernels::detail
