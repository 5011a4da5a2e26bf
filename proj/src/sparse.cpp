#include "paneitz/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "paneitz/simd/kernels.hpp"

namespace paneitz {

CsrMatrix::CsrMatrix(std::size_t n) : rows_(n), cols_(n), row_ptr_(n + 1, 0) {}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::span<const Triplet> triplets)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {
    std::vector<Triplet> sorted(triplets.begin(), triplets.end());
    for (const auto& t : sorted) {
        if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= rows ||
            static_cast<std::size_t>(t.col) >= cols)
            throw std::out_of_range("triplet index outside matrix shape");
    }
    std::sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    cols_idx_.reserve(sorted.size());
    vals_.reserve(sorted.size());
    for (std::size_t k = 0; k < sorted.size();) {
        const auto r = sorted[k].row;
        const auto c = sorted[k].col;
        double v = 0.0;
        for (; k < sorted.size() && sorted[k].row == r && sorted[k].col == c; ++k) v += sorted[k].value;
        cols_idx_.push_back(c);
        vals_.push_back(v);
        ++row_ptr_[r + 1];
    }
    for (std::size_t r = 0; r < rows; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    std::vector<double> ones(n, 1.0);
    return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> d) {
    CsrMatrix m(d.size());
    m.cols_idx_.resize(d.size());
    m.vals_.assign(d.begin(), d.end());
    for (std::size_t i = 0; i < d.size(); ++i) {
        m.cols_idx_[i] = static_cast<std::int32_t>(i);
        m.row_ptr_[i + 1] = static_cast<std::int32_t>(i + 1);
    }
    return m;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != cols_ || y.size() != rows_)
        throw std::invalid_argument("CsrMatrix::multiply: dimension mismatch");
    simd::kernels().csr_spmv(row_ptr_.data(), cols_idx_.data(), vals_.data(), rows_, x.data(),
                             y.data());
}

std::vector<double> CsrMatrix::operator*(std::span<const double> x) const {
    std::vector<double> y(rows_);
    multiply(x, y);
    return y;
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
    const auto first = cols_idx_.begin() + row_ptr_[r];
    const auto last = cols_idx_.begin() + row_ptr_[r + 1];
    const auto it = std::lower_bound(first, last, static_cast<std::int32_t>(c));
    return (it != last && *it == static_cast<std::int32_t>(c)) ? vals_[it - cols_idx_.begin()] : 0.0;
}

std::vector<double> CsrMatrix::diagonal_values() const {
    std::vector<double> d(std::min(rows_, cols_));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
}

std::vector<Triplet> CsrMatrix::triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r)
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            out.push_back({static_cast<std::int32_t>(r), cols_idx_[k], vals_[k]});
    return out;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<Triplet> t = triplets();
    for (auto& e : t) std::swap(e.row, e.col);
    return CsrMatrix(cols_, rows_, t);
}

CsrMatrix CsrMatrix::scaled(double alpha) const {
    CsrMatrix m = *this;
    for (auto& v : m.vals_) v *= alpha;
    return m;
}

CsrMatrix CsrMatrix::row_scaled(std::span<const double> d) const {
    if (d.size() != rows_) throw std::invalid_argument("row_scaled: dimension mismatch");
    CsrMatrix m = *this;
    for (std::size_t r = 0; r < rows_; ++r)
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) m.vals_[k] *= d[r];
    return m;
}

double CsrMatrix::asymmetry() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < rows_; ++r)
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            worst = std::max(worst, std::abs(vals_[k] - at(cols_idx_[k], r)));
    return worst;
}

double CsrMatrix::max_abs() const { return simd::max_abs(vals_); }

bool CsrMatrix::all_finite() const {
    return std::all_of(vals_.begin(), vals_.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> CsrMatrix::to_dense() const {
    std::vector<double> d(rows_ * cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d[r * cols_ + cols_idx_[k]] = vals_[k];
    return d;
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha, double beta) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("add: shape mismatch");
    std::vector<Triplet> t;
    t.reserve(a.nnz() + b.nnz());
    for (auto e : a.triplets()) t.push_back({e.row, e.col, alpha * e.value});
    for (auto e : b.triplets()) t.push_back({e.row, e.col, beta * e.value});
    return CsrMatrix(a.rows(), a.cols(), t);
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: shape mismatch");
    const auto ap = a.row_ptr();
    const auto ac = a.col_idx();
    const auto av = a.values();
    const auto bp = b.row_ptr();
    const auto bc = b.col_idx();
    const auto bv = b.values();

    std::vector<double> acc(b.cols(), 0.0);
    std::vector<std::int32_t> mark(b.cols(), -1);
    std::vector<std::int32_t> touched;
    std::vector<Triplet> out;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        touched.clear();
        for (auto k = ap[r]; k < ap[r + 1]; ++k) {
            const auto mid = ac[k];
            for (auto l = bp[mid]; l < bp[mid + 1]; ++l) {
                const auto c = bc[l];
                if (mark[c] != static_cast<std::int32_t>(r)) {
                    mark[c] = static_cast<std::int32_t>(r);
                    acc[c] = 0.0;
                    touched.push_back(c);
                }
                acc[c] += av[k] * bv[l];
            }
        }
        for (auto c : touched) out.push_back({static_cast<std::int32_t>(r), c, acc[c]});
    }
    return CsrMatrix(a.rows(), b.cols(), out);
}

}  // namespace paneitz
