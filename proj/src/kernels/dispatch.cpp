#include <atomic>
#include <cstdlib>
#include <cstring>

#include "pharm/kernels.hpp"

namespace pharm::kernels {

namespace {

Isa detect() {
    if (const char* env = std::getenv("PHARM_SIMD"); env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    return avx2_supported() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

bool avx2_supported() {
#if defined(PHARM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

Isa selected_isa() { return current().load(std::memory_order_relaxed); }

void select_isa(Isa isa) {
    if (isa == Isa::Avx2 && !avx2_supported()) isa = Isa::Scalar;
    current().store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

#if !defined(PHARM_HAVE_AVX2)
double energy_avx2(const EnergyInput& in, double* grad, double* diag) { return energy_scalar(in, grad, diag); }
#endif

double energy(const EnergyInput& in, double* grad, double* diag) {
    return selected_isa() == Isa::Avx2 ? energy_avx2(in, grad, diag) : energy_scalar(in, grad, diag);
}

}  // namespace pharm::kernels
