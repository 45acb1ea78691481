#include "regimehmm/kernels.hpp"

// NEON lane for aarch64 builds. float64x2 throughout; tails fall back to
// scalar arithmetic.

#if defined(__aarch64__)

#include <arm_neon.h>

namespace regimehmm::kernels::detail {

namespace {

double sum_neon(const double* x, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        acc += x[i] * y[i];
    }
    return acc;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += a * x[i];
    }
}

double weighted_sq_dev_neon(const double* w, const double* x, double center,
                            std::size_t n) {
    const float64x2_t vc = vdupq_n_f64(center);
    float64x2_t acc0 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vc);
        acc0 = vfmaq_f64(acc0, vmulq_f64(vld1q_f64(w + i), d), d);
    }
    double acc = vaddvq_f64(acc0);
    for (; i < n; ++i) {
        const double d = x[i] - center;
        acc += w[i] * d * d;
    }
    return acc;
}

void acc_sq_dev_neon(double* acc, const double* x, double mean, double inv_var,
                     std::size_t n) {
    const float64x2_t vm = vdupq_n_f64(mean);
    const float64x2_t viv = vdupq_n_f64(inv_var);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vm);
        vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), vmulq_f64(viv, d), d));
    }
    for (; i < n; ++i) {
        const double d = x[i] - mean;
        acc[i] += inv_var * d * d;
    }
}

}  // namespace

const KernelTable& neon_table() noexcept {
    static const KernelTable table{
        sum_neon, dot_neon, axpy_neon, weighted_sq_dev_neon, acc_sq_dev_neon,
    };
    return table;
}

}  // namespace regimehmm::kernels::detail

#endif  // aarch64
