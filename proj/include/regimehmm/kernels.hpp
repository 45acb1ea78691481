#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace regimehmm::kernels {

// Instruction set used by the vector kernels. Resolved once per process:
// best lane the CPU supports, unless REGIME_HMM_KERNELS forces one of
// "scalar", "avx2", "neon". The scalar lane is the reference; the SIMD
// lanes differ from it only by floating-point reassociation.
enum class Isa {
    scalar,
    avx2,
    neon,
};

Isa active() noexcept;
std::string_view isa_name(Isa isa) noexcept;

double sum(std::span<const double> x) noexcept;
double dot(std::span<const double> x, std::span<const double> y) noexcept;

// y[i] += a * x[i]
void axpy(double a, std::span<const double> x, std::span<double> y) noexcept;

// sum_i w[i] * (x[i] - center)^2
double weighted_sq_dev(std::span<const double> w, std::span<const double> x,
                       double center) noexcept;

// acc[i] += inv_var * (x[i] - mean)^2
void acc_sq_dev(std::span<double> acc, std::span<const double> x, double mean,
                double inv_var) noexcept;

namespace detail {

struct KernelTable {
    double (*sum)(const double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    double (*weighted_sq_dev)(const double*, const double*, double, std::size_t);
    void (*acc_sq_dev)(double*, const double*, double, double, std::size_t);
};

const KernelTable& scalar_table() noexcept;
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(__aarch64__)
const KernelTable& neon_table() noexcept;
#endif

// Table for an explicit lane; used by the equivalence tests.
const KernelTable& table_for(Isa isa) noexcept;

}  // namespace detail

}  // namespace regimehmm::kernels
