#pragma once
// Data-parallel inner loops used by every solver in the library.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// chosen once at first use from the running CPU; PANEITZ_SIMD=scalar|avx2|neon
// forces a specific table (unsupported requests fall back to scalar).
//
// Vector variants reorder floating-point sums, so results agree with the
// scalar reference to rounding, not bit-for-bit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace paneitz::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;
    /// sum_i x_i y_i
    double (*dot)(const double* x, const double* y, std::size_t n);
    /// sum_i x_i y_i z_i
    double (*dot3)(const double* x, const double* y, const double* z, std::size_t n);
    /// y += a x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    /// y = x + a y
    void (*xpay)(const double* x, double a, double* y, std::size_t n);
    /// max_i x_i; -inf for n == 0
    double (*max)(const double* x, std::size_t n);
    /// max_i |x_i|
    double (*max_abs)(const double* x, std::size_t n);
    /// sum_i weight_i exp(scale x_i - shift)
    double (*exp_sum)(const double* weight, const double* x, double scale, double shift,
                      std::size_t n);
    /// out_i = exp(scale x_i - shift)
    void (*exp_map)(const double* x, double scale, double shift, double* out, std::size_t n);
    /// y = A x for a CSR matrix with `rows` rows
    void (*csr_spmv)(const std::int32_t* row_ptr, const std::int32_t* cols, const double* vals,
                     std::size_t rows, const double* x, double* y);
};

bool isa_supported(Isa isa);

/// Kernel table for a specific ISA; throws std::invalid_argument if the ISA
/// is not compiled in or not supported by this CPU.
const KernelTable& kernels(Isa isa);

/// Kernel table selected for this process.
const KernelTable& kernels();

// Span conveniences over the active table.

inline double dot(std::span<const double> x, std::span<const double> y) {
    return kernels().dot(x.data(), y.data(), x.size());
}
inline double dot3(std::span<const double> x, std::span<const double> y,
                   std::span<const double> z) {
    return kernels().dot3(x.data(), y.data(), z.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    kernels().axpy(a, x.data(), y.data(), x.size());
}
inline void xpay(std::span<const double> x, double a, std::span<double> y) {
    kernels().xpay(x.data(), a, y.data(), x.size());
}
inline double max(std::span<const double> x) { return kernels().max(x.data(), x.size()); }
inline double max_abs(std::span<const double> x) {
    return kernels().max_abs(x.data(), x.size());
}
inline double exp_sum(std::span<const double> weight, std::span<const double> x, double scale,
                      double shift) {
    return kernels().exp_sum(weight.data(), x.data(), scale, shift, x.size());
}
inline void exp_map(std::span<const double> x, double scale, double shift,
                    std::span<double> out) {
    kernels().exp_map(x.data(), scale, shift, out.data(), x.size());
}

namespace detail {
const KernelTable& scalar_table();
#if defined(PANEITZ_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(PANEITZ_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace paneitz::simd
