#include "regimehmm/kernels.hpp"

#include <cstdlib>
#include <string>

namespace regimehmm::kernels {

namespace {

using detail::KernelTable;

Isa best_supported() noexcept {
#if defined(__aarch64__)
    return Isa::neon;
#elif defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return Isa::avx2;
    }
    return Isa::scalar;
#else
    return Isa::scalar;
#endif
}

Isa resolve() noexcept {
    const char* env = std::getenv("REGIME_HMM_KERNELS");
    if (env != nullptr) {
        const std::string want(env);
        if (want == "scalar") {
            return Isa::scalar;
        }
        if (want == "avx2" && best_supported() == Isa::avx2) {
            return Isa::avx2;
        }
        if (want == "neon" && best_supported() == Isa::neon) {
            return Isa::neon;
        }
        // Unknown or unsupported names fall through to auto detection.
    }
    return best_supported();
}

const KernelTable& active_table() noexcept {
    static const KernelTable& table = detail::table_for(active());
    return table;
}

}  // namespace

Isa active() noexcept {
    static const Isa isa = resolve();
    return isa;
}

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

namespace detail {

const KernelTable& table_for(Isa isa) noexcept {
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::avx2: return avx2_table();
#endif
#if defined(__aarch64__)
        case Isa::neon: return neon_table();
#endif
        default: return scalar_table();
    }
}

}  // namespace detail

double sum(std::span<const double> x) noexcept {
    return active_table().sum(x.data(), x.size());
}

double dot(std::span<const double> x, std::span<const double> y) noexcept {
    return active_table().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
    active_table().axpy(a, x.data(), y.data(), x.size());
}

double weighted_sq_dev(std::span<const double> w, std::span<const double> x,
                       double center) noexcept {
    return active_table().weighted_sq_dev(w.data(), x.data(), center, x.size());
}

void acc_sq_dev(std::span<double> acc, std::span<const double> x, double mean,
                double inv_var) noexcept {
    active_table().acc_sq_dev(acc.data(), x.data(), mean, inv_var, x.size());
}

}  // namespace regimehmm::kernels
