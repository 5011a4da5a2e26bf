// NEON variants for aarch64. The exponential is left to libm; only the
// reductions and the sparse product are vectorized.
#include "paneitz/simd/kernels.hpp"

#include <arm_neon.h>

#include <cmath>
#include <limits>

namespace paneitz::simd::detail {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
        a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(a0, a1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double dot3(const double* x, const double* y, const double* z, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)), vld1q_f64(z + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i] * y[i] * z[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(x + i), av, vld1q_f64(y + i)));
    for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

double vmax(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 2) {
        float64x2_t acc = vld1q_f64(x);
        for (i = 2; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vld1q_f64(x + i));
        m = vmaxvq_f64(acc);
    }
    for (; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

double max_abs(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vabsq_f64(vld1q_f64(x + i)));
    double m = vmaxvq_f64(acc);
    for (; i < n; ++i) m = std::abs(x[i]) > m ? std::abs(x[i]) : m;
    return m;
}

double exp_sum(const double* w, const double* x, double scale, double shift, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * std::exp(scale * x[i] - shift);
    return s;
}

void exp_map(const double* x, double scale, double shift, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(scale * x[i] - shift);
}

void csr_spmv(const std::int32_t* row_ptr, const std::int32_t* cols, const double* vals,
              std::size_t rows, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        std::int32_t k = row_ptr[r];
        const std::int32_t end = row_ptr[r + 1];
        float64x2_t acc = vdupq_n_f64(0.0);
        for (; k + 2 <= end; k += 2) {
            const double g[2] = {x[cols[k]], x[cols[k + 1]]};
            acc = vfmaq_f64(acc, vld1q_f64(vals + k), vld1q_f64(g));
        }
        double s = vaddvq_f64(acc);
        for (; k < end; ++k) s += vals[k] * x[cols[k]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{Isa::Neon, dot,     dot3,    axpy,    xpay,
                                   vmax,      max_abs, exp_sum, exp_map, csr_spmv};
    return table;
}

}  // namespace paneitz::simd::detail
