#include "paneitz/cg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "paneitz/simd/kernels.hpp"

namespace paneitz {
namespace {

void remove_mean(std::span<double> r) {
    const double m = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    for (auto& v : r) v -= m;
}

}  // namespace

CgResult conjugate_gradient(const LinearOperator& a, std::span<const double> b, std::span<double> x,
                            const CgOptions& opts, std::span<const double> inv_diag) {
    const std::size_t n = b.size();
    CgResult res;
    if (n == 0) {
        res.converged = true;
        return res;
    }
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * n + 10);

    std::vector<double> r(n), z(n), p(n), ap(n);
    auto apply_precond = [&](std::span<const double> in, std::span<double> out) {
        if (inv_diag.empty()) {
            std::copy(in.begin(), in.end(), out.begin());
        } else {
            for (std::size_t i = 0; i < n; ++i) out[i] = inv_diag[i] * in[i];
        }
        if (opts.deflate_constants) remove_mean(out);
    };
    auto true_residual = [&]() {
        a(x, ap);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
        if (opts.deflate_constants) remove_mean(r);
    };

    const double bnorm = std::sqrt(simd::dot(b, b));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }
    const double target = std::max(opts.abs_tol, opts.rel_tol * bnorm);

    true_residual();
    double rnorm = std::sqrt(simd::dot(r, r));
    if (rnorm <= target) {
        res.residual = rnorm;
        res.converged = true;
        return res;
    }
    apply_precond(r, z);
    std::copy(z.begin(), z.end(), p.begin());
    double rz = simd::dot(r, z);

    int since_restart = 0;
    for (int it = 1; it <= max_iter; ++it) {
        a(p, ap);
        const double pap = simd::dot(p, ap);
        if (!(pap > 0.0)) {
            res.iterations = it;
            break;
        }
        const double alpha = rz / pap;
        simd::axpy(alpha, p, x);
        simd::axpy(-alpha, ap, r);
        if (opts.deflate_constants) remove_mean(r);
        rnorm = std::sqrt(simd::dot(r, r));
        res.iterations = it;
        if (rnorm <= target) {
            // Confirm against the true residual before accepting.
            true_residual();
            rnorm = std::sqrt(simd::dot(r, r));
            if (rnorm <= target) {
                res.converged = true;
                break;
            }
            since_restart = 0;
            apply_precond(r, z);
            std::copy(z.begin(), z.end(), p.begin());
            rz = simd::dot(r, z);
            continue;
        }
        apply_precond(r, z);
        const double rz_new = simd::dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        simd::xpay(z, beta, p);
        if (++since_restart > static_cast<int>(n) + 50) {
            // Periodic restart from the true residual limits drift.
            true_residual();
            apply_precond(r, z);
            std::copy(z.begin(), z.end(), p.begin());
            rz = simd::dot(r, z);
            since_restart = 0;
        }
    }
    res.residual = rnorm;
    return res;
}

}  // namespace paneitz
