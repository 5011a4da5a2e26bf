#include <cstdlib>
#include <stdexcept>
#include <string>

#include "paneitz/simd/kernels.hpp"

namespace paneitz::simd {

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(PANEITZ_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(PANEITZ_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& kernels(Isa isa) {
    if (!isa_supported(isa))
        throw std::invalid_argument("kernel ISA not available: " + std::string(isa_name(isa)));
    switch (isa) {
#if defined(PANEITZ_HAVE_AVX2)
        case Isa::Avx2: return detail::avx2_table();
#endif
#if defined(PANEITZ_HAVE_NEON)
        case Isa::Neon: return detail::neon_table();
#endif
        default: return detail::scalar_table();
    }
}

namespace {

Isa select_isa() {
    if (const char* env = std::getenv("PANEITZ_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return Isa::Scalar;
        if (want == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
        if (want == "neon" && isa_supported(Isa::Neon)) return Isa::Neon;
        return Isa::Scalar;
    }
    if (isa_supported(Isa::Avx2)) return Isa::Avx2;
    if (isa_supported(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

}  // namespace

const KernelTable& kernels() {
    static const KernelTable& table = kernels(select_isa());
    return table;
}

}  // namespace paneitz::simd
