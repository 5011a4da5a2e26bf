#include "paneitz/simd/kernels.hpp"

#include <cmath>
#include <limits>

namespace paneitz::simd::detail {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double dot3(const double* x, const double* y, const double* z, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i] * z[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

double vmax(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

double max_abs(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::abs(x[i]) > m ? std::abs(x[i]) : m;
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
        double s = 0.0;
        for (std::int32_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += vals[k] * x[cols[k]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Isa::Scalar, dot,     dot3,    axpy,    xpay,
                                   vmax,        max_abs, exp_sum, exp_map, csr_spmv};
    return table;
}

}  // namespace paneitz::simd::detail
