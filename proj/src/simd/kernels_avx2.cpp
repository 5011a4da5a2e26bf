// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// is only entered after a runtime CPU check.
#include "paneitz/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace paneitz::simd::detail {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

// exp(x): x = k ln2 + r with |r| <= ln2/2, degree-13 Taylor polynomial in r
// (truncation < 2e-17 relative), then scale by 2^k. Below -708 the result is
// flushed to zero and above 709.78 it is +inf.
inline __m256d exp_pd(__m256d x_in) {
    const __m256d lo = _mm256_set1_pd(-708.0);
    const __m256d hi = _mm256_set1_pd(709.0);
    const __m256d under = _mm256_cmp_pd(x_in, lo, _CMP_LT_OQ);
    const __m256d over = _mm256_cmp_pd(x_in, _mm256_set1_pd(709.782712893384), _CMP_GT_OQ);
    __m256d x = _mm256_max_pd(_mm256_min_pd(x_in, hi), lo);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);

    __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
    r = _mm256_fnmadd_pd(k, ln2_lo, r);

    // Horner on 1/13! ... 1/0!
    static constexpr double c[] = {
        1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
        1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
        1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
        1.0,                1.0};
    __m256d p = _mm256_set1_pd(c[0]);
    for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[i]));

    __m128i ki = _mm256_cvtpd_epi32(k);
    __m256i e = _mm256_cvtepi32_epi64(ki);
    e = _mm256_add_epi64(e, _mm256_set1_epi64x(1023));
    e = _mm256_slli_epi64(e, 52);
    const __m256d y = _mm256_andnot_pd(under, _mm256_mul_pd(p, _mm256_castsi256_pd(e)));
    return _mm256_blendv_pd(y, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    }
    for (; i + 4 <= n; i += 4)
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    double s = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double dot3(const double* x, const double* y, const double* z, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xy = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_fmadd_pd(xy, _mm256_loadu_pd(z + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i] * z[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

double vmax(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d acc = _mm256_loadu_pd(x);
        for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
        m = hmax(acc);
    }
    for (; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

double max_abs(const double* x, std::size_t n) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(x + i)));
    double m = hmax(acc);
    for (; i < n; ++i) m = std::abs(x[i]) > m ? std::abs(x[i]) : m;
    return m;
}

double exp_sum(const double* w, const double* x, double scale, double shift, std::size_t n) {
    const __m256d sv = _mm256_set1_pd(scale);
    const __m256d hv = _mm256_set1_pd(shift);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d arg = _mm256_fmsub_pd(sv, _mm256_loadu_pd(x + i), hv);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), exp_pd(arg), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += w[i] * std::exp(scale * x[i] - shift);
    return s;
}

void exp_map(const double* x, double scale, double shift, double* out, std::size_t n) {
    const __m256d sv = _mm256_set1_pd(scale);
    const __m256d hv = _mm256_set1_pd(shift);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, exp_pd(_mm256_fmsub_pd(sv, _mm256_loadu_pd(x + i), hv)));
    for (; i < n; ++i) out[i] = std::exp(scale * x[i] - shift);
}

void csr_spmv(const std::int32_t* row_ptr, const std::int32_t* cols, const double* vals,
              std::size_t rows, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        std::int32_t k = row_ptr[r];
        const std::int32_t end = row_ptr[r + 1];
        __m256d acc = _mm256_setzero_pd();
        for (; k + 4 <= end; k += 4) {
            __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(cols + k));
            __m256d xv = _mm256_i32gather_pd(x, idx, 8);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(vals + k), xv, acc);
        }
        double s = hsum(acc);
        for (; k < end; ++k) s += vals[k] * x[cols[k]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{Isa::Avx2, dot,     dot3,    axpy,    xpay,
                                   vmax,      max_abs, exp_sum, exp_map, csr_spmv};
    return table;
}

}  // namespace paneitz::simd::detail
