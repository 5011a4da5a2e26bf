#pragma once
// Compressed sparse row storage for the bilinear-form matrices.

#include <cstdint>
#include <span>
#include <vector>

namespace paneitz {

struct Triplet {
    std::int32_t row;
    std::int32_t col;
    double value;
};

class CsrMatrix {
public:
    CsrMatrix() = default;
    /// Square zero matrix.
    explicit CsrMatrix(std::size_t n);
    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// explicit zeros produced by cancellation are kept.
    CsrMatrix(std::size_t rows, std::size_t cols, std::span<const Triplet> triplets);

    static CsrMatrix identity(std::size_t n);
    static CsrMatrix diagonal(std::span<const double> d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return vals_.size(); }

    std::span<const std::int32_t> row_ptr() const { return row_ptr_; }
    std::span<const std::int32_t> col_idx() const { return cols_idx_; }
    std::span<const double> values() const { return vals_; }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> operator*(std::span<const double> x) const;

    double at(std::size_t r, std::size_t c) const;
    std::vector<double> diagonal_values() const;
    std::vector<Triplet> triplets() const;

    CsrMatrix transpose() const;
    CsrMatrix scaled(double alpha) const;
    /// diag(d) A
    CsrMatrix row_scaled(std::span<const double> d) const;

    /// max |A_ij - A_ji|
    double asymmetry() const;
    /// max |A_ij|
    double max_abs() const;
    bool all_finite() const;

    /// Dense row-major copy; intended for small matrices and tests.
    std::vector<double> to_dense() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::int32_t> row_ptr_{0};
    std::vector<std::int32_t> cols_idx_;
    std::vector<double> vals_;
};

/// alpha A + beta B
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha = 1.0, double beta = 1.0);
/// A B (Gustavson row-by-row product)
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);

}  // namespace paneitz
