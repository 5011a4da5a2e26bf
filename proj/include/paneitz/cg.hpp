#pragma once
// Preconditioned conjugate gradients for symmetric positive (semi)definite
// operators given matrix-free.

#include <functional>
#include <span>
#include <vector>

namespace paneitz {

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct CgOptions {
    double rel_tol = 1e-13;
    double abs_tol = 0.0;
    int max_iter = 0;  // 0: 10 n
    /// Keep residuals orthogonal to the constants (for operators whose kernel
    /// is exactly the constants, with a right-hand side summing to zero).
    bool deflate_constants = false;
};

struct CgResult {
    int iterations = 0;
    double residual = 0.0;  // ||b - A x||_2 (recursively updated)
    bool converged = false;
};

/// Solves A x = b starting from the contents of x. `inv_diag`, when non-empty,
/// is a Jacobi preconditioner (entrywise inverse diagonal).
CgResult conjugate_gradient(const LinearOperator& a, std::span<const double> b, std::span<double> x,
                            const CgOptions& opts = {}, std::span<const double> inv_diag = {});

}  // namespace paneitz
