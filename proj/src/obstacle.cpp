#include "paneitz/obstacle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "paneitz/errors.hpp"
#include "paneitz/simd/kernels.hpp"

namespace paneitz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Multiplier for the equality constraint when no free row pins it down:
// lambda_i = g_i + mu c_i >= 0 on the working set is a one-dimensional LP.
double lp_equality_multiplier(std::span<const double> g, std::span<const double> c,
                              const std::vector<char>& in_w) {
    double lo = -kInf, hi = kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!in_w[i] || c[i] == 0.0) continue;
        const double bound = -g[i] / c[i];
        if (c[i] > 0.0)
            lo = std::max(lo, bound);
        else
            hi = std::min(hi, bound);
    }
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(hi)) return hi;
    return 0.0;
}

class ActiveSetSolver {
public:
    ActiveSetSolver(const DiscreteManifold& m, std::span<const double> u, const ObstacleOptions& opts)
        : m_(m), b_(m.form()), c_(m.qw()), u_(u.begin(), u.end()), opts_(opts), n_(m.n()) {
        diag_ = b_.diagonal_values();
        double cmax2 = 0.0;
        for (double ci : c_) cmax2 = std::max(cmax2, ci * ci);
        const double dmax = *std::max_element(diag_.begin(), diag_.end());
        sigma_ = cmax2 > 0.0 ? std::max(dmax, 1e-300) / cmax2 : 0.0;
        scale_u_ = 1.0 + simd::max_abs(u_);
    }

    ObstacleSolution run() {
        bool has_pos = false, has_neg = false;
        for (double ci : c_) {
            has_pos |= ci > 0.0;
            has_neg |= ci < 0.0;
        }
        const bool mixed = has_pos && has_neg;

        // Feasible start strictly above u wherever the constraint allows it.
        pinned_.assign(n_, 0);
        std::vector<double> lift(n_, 0.0);
        if (mixed) {
            double sp = 0.0, sn = 0.0;
            for (double ci : c_) (ci > 0.0 ? sp : sn) += std::abs(ci);
            for (std::size_t i = 0; i < n_; ++i) {
                if (c_[i] > 0.0)
                    lift[i] = 1.0 / sp;
                else if (c_[i] < 0.0)
                    lift[i] = 1.0 / sn;
                else
                    lift[i] = 1.0;
            }
            const double lmax = simd::max(lift);
            for (auto& l : lift) l /= lmax;
        } else {
            for (std::size_t i = 0; i < n_; ++i) {
                if (c_[i] != 0.0)
                    pinned_[i] = 1;
                else
                    lift[i] = 1.0;
            }
        }
        v_ = u_;
        simd::axpy(0.1 * scale_u_, lift, v_);
        in_w_ = pinned_;

        const int max_iter = opts_.max_iter > 0 ? opts_.max_iter : static_cast<int>(10 * n_ + 100);
        bool bland = false;
        bool at_subproblem_min = false;
        double mu = 0.0;
        std::vector<double> target(n_), bv(n_);

        for (int it = 1; it <= max_iter; ++it) {
            iterations_ = it;
            if (!at_subproblem_min) {
                mu = solve_subproblem(target);
                std::vector<double> p(n_);
                for (std::size_t i = 0; i < n_; ++i) p[i] = target[i] - v_[i];
                const double step = simd::max_abs(p);
                if (step > 1e-12 * (1.0 + simd::max_abs(v_))) {
                    // Ratio test over free indices moving down.
                    double alpha = 1.0;
                    std::ptrdiff_t block = -1;
                    for (std::size_t i = 0; i < n_; ++i) {
                        if (in_w_[i] || p[i] >= 0.0) continue;
                        const double a = std::max(0.0, (u_[i] - v_[i]) / p[i]);
                        if (a < alpha || (a == alpha && block >= 0 && !bland && p[i] < p[block])) {
                            alpha = a;
                            block = static_cast<std::ptrdiff_t>(i);
                        }
                    }
                    if (block < 0) {
                        v_ = target;
                        at_subproblem_min = true;
                    } else {
                        simd::axpy(alpha, p, v_);
                        v_[block] = u_[block];
                        in_w_[block] = 1;
                        if (alpha <= 1e-14) bland = true;
                        at_subproblem_min = false;
                        continue;
                    }
                } else {
                    v_ = target;
                    at_subproblem_min = true;
                }
            }

            // At the minimizer of the current subproblem: check multipliers.
            b_.multiply(v_, bv);
            for (auto& x : bv) x *= 2.0;
            if (!has_free_constraint()) mu = lp_equality_multiplier(bv, c_, in_w_);
            double gscale = simd::max_abs(bv) + std::abs(mu) * simd::max_abs(c_);
            const double thresh = -opts_.multiplier_rel * std::max(gscale, 1e-300);
            std::ptrdiff_t drop = -1;
            double worst = thresh;
            for (std::size_t i = 0; i < n_; ++i) {
                if (!in_w_[i] || pinned_[i]) continue;
                const double lam = bv[i] + mu * c_[i];
                if (lam < thresh) {
                    if (bland) {
                        drop = static_cast<std::ptrdiff_t>(i);
                        break;
                    }
                    if (lam < worst) {
                        worst = lam;
                        drop = static_cast<std::ptrdiff_t>(i);
                    }
                }
            }
            if (drop < 0) return finish(mu, bv);
            in_w_[drop] = 0;
            at_subproblem_min = false;
        }
        std::ostringstream os;
        os << "obstacle active-set did not terminate in " << max_iter << " iterations";
        throw SolverError(os.str(), v_, iterations_);
    }

private:
    bool has_free_constraint() const {
        for (std::size_t i = 0; i < n_; ++i)
            if (!in_w_[i] && c_[i] != 0.0) return true;
        return false;
    }

    // Minimizes v^T B v with v_W = u_W (and the equality constraint when a
    // free index carries it). Writes the minimizer to `out` and returns mu.
    double solve_subproblem(std::vector<double>& out) {
        const bool eq = has_free_constraint();
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < n_; ++i)
            if (!in_w_[i]) free.push_back(i);
        out = u_;
        if (free.empty()) return 0.0;

        std::vector<double> fixed(n_, 0.0), bfixed(n_);
        double r = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            if (in_w_[i]) {
                fixed[i] = u_[i];
                r -= c_[i] * u_[i];
            }
        b_.multiply(fixed, bfixed);

        const std::size_t nf = free.size();
        std::vector<double> cf(nf), inv_diag(nf), rhs1(nf), y1(nf), y2(nf, 0.0);
        for (std::size_t k = 0; k < nf; ++k) {
            const auto i = free[k];
            cf[k] = c_[i];
            const double d = diag_[i] + (eq ? sigma_ * c_[i] * c_[i] : 0.0);
            inv_diag[k] = d > 0.0 ? 1.0 / d : 1.0;
            rhs1[k] = -bfixed[i] + (eq ? sigma_ * r * c_[i] : 0.0);
            y1[k] = v_[i];
        }

        std::vector<double> full(n_), bfull(n_);
        LinearOperator op = [&](std::span<const double> x, std::span<double> y) {
            std::fill(full.begin(), full.end(), 0.0);
            for (std::size_t k = 0; k < nf; ++k) full[free[k]] = x[k];
            b_.multiply(full, bfull);
            const double cx = eq ? simd::dot(cf, x) : 0.0;
            for (std::size_t k = 0; k < nf; ++k) y[k] = bfull[free[k]] + sigma_ * cx * cf[k];
        };
        cg_solve(op, rhs1, y1, inv_diag);

        double mu = 0.0;
        if (eq) {
            cg_solve(op, cf, y2, inv_diag);
            const double cy2 = simd::dot(cf, y2);
            mu = 2.0 * (simd::dot(cf, y1) - r) / cy2;
            simd::axpy(-0.5 * mu, y2, y1);
            // Restore the constraint exactly along y2.
            const double defect = r - simd::dot(cf, y1);
            simd::axpy(defect / cy2, y2, y1);
        }
        for (std::size_t k = 0; k < nf; ++k) out[free[k]] = y1[k];
        return mu;
    }

    void cg_solve(const LinearOperator& op, std::span<const double> rhs, std::span<double> x,
                  std::span<const double> inv_diag) {
        const auto res = conjugate_gradient(op, rhs, x, opts_.cg, inv_diag);
        const double bnorm = std::sqrt(simd::dot(rhs, rhs));
        if (!res.converged && res.residual > 1e-9 * std::max(bnorm, 1e-300)) {
            std::ostringstream os;
            os << "obstacle subproblem CG stalled (residual " << res.residual << ")";
            throw SolverError(os.str(), v_, iterations_);
        }
    }

    ObstacleSolution finish(double mu, std::span<const double> two_bv) {
        ObstacleSolution sol;
        sol.v = v_;
        sol.mu = mu;
        sol.lambda.assign(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            if (in_w_[i]) sol.lambda[i] = std::max(0.0, two_bv[i] + mu * c_[i]);
        sol.iterations = iterations_;
        certify(m_, u_, sol, opts_.clamp_rel);
        return sol;
    }

    const DiscreteManifold& m_;
    const CsrMatrix& b_;
    std::span<const double> c_;
    std::vector<double> u_;
    const ObstacleOptions& opts_;
    std::size_t n_;
    std::vector<double> diag_;
    double sigma_ = 0.0;
    double scale_u_ = 1.0;
    std::vector<double> v_;
    std::vector<char> in_w_;
    std::vector<char> pinned_;
    int iterations_ = 0;
};

void check_obstacle_preconditions(const DiscreteManifold& m) {
    if (m.kappa() == 0.0)
        throw ScopeError("obstacle projection needs nonzero total Q-curvature");
}

}  // namespace

void certify(const DiscreteManifold& m, std::span<const double> u, ObstacleSolution& sol,
             double clamp_rel) {
    const std::size_t n = m.n();
    const auto bv = m.form() * std::span<const double>(sol.v);
    sol.objective = simd::dot(sol.v, bv);
    sol.kkt_residual = 0.0;
    sol.feasibility = 0.0;
    sol.complementarity = 0.0;
    sol.min_lambda = n ? kInf : 0.0;
    sol.active.clear();
    for (std::size_t i = 0; i < n; ++i) {
        const double stat = 2.0 * bv[i] - sol.lambda[i] + sol.mu * m.qw()[i];
        sol.kkt_residual = std::max(sol.kkt_residual, std::abs(stat));
        sol.feasibility = std::max(sol.feasibility, u[i] - sol.v[i]);
        sol.complementarity = std::max(sol.complementarity, std::abs(sol.lambda[i] * (sol.v[i] - u[i])));
        sol.min_lambda = std::min(sol.min_lambda, sol.lambda[i]);
        if (std::abs(sol.v[i] - u[i]) <= clamp_rel * (1.0 + std::abs(u[i])))
            sol.active.push_back(static_cast<std::int32_t>(i));
    }
    sol.constraint = std::abs(simd::dot(m.qw(), sol.v));
}

ObstacleSolution solve_obstacle(const DiscreteManifold& m, std::span<const double> u,
                                const ObstacleOptions& opts) {
    m.check_field(u, "obstacle");
    check_obstacle_preconditions(m);
    const auto uq = enforce_hq(m, u, opts.hq);
    ActiveSetSolver solver(m, uq, opts);
    return solver.run();
}

ObstacleSolution brute_force_obstacle(const DiscreteManifold& m, std::span<const double> u_in,
                                      const ObstacleOptions& opts) {
    const std::size_t n = m.n();
    if (n > 12) throw std::invalid_argument("brute_force_obstacle: n must be at most 12");
    m.check_field(u_in, "obstacle");
    check_obstacle_preconditions(m);
    const auto u = enforce_hq(m, u_in, opts.hq);

    const auto dense = m.form().to_dense();
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> bmat(
        dense.data(), n, n);
    const auto c = m.qw();
    const double scale = 1.0 + simd::max_abs(u);

    ObstacleSolution best;
    best.objective = kInf;
    bool found = false;
    std::vector<char> in_a(n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> fr, ac;
        for (std::size_t i = 0; i < n; ++i) {
            in_a[i] = (mask >> i) & 1u;
            (in_a[i] ? ac : fr).push_back(static_cast<int>(i));
        }
        bool eq = false;
        for (int i : fr) eq |= c[i] != 0.0;

        Eigen::VectorXd v(n);
        for (std::size_t i = 0; i < n; ++i) v(i) = u[i];
        double mu = 0.0;
        if (!fr.empty()) {
            const int nf = static_cast<int>(fr.size());
            const int dim = nf + (eq ? 1 : 0);
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
            for (int a = 0; a < nf; ++a) {
                for (int b = 0; b < nf; ++b) kkt(a, b) = 2.0 * bmat(fr[a], fr[b]);
                double s = 0.0;
                for (int j : ac) s += bmat(fr[a], j) * u[j];
                rhs(a) = -2.0 * s;
                if (eq) kkt(a, nf) = kkt(nf, a) = c[fr[a]];
            }
            if (eq) {
                double s = 0.0;
                for (int j : ac) s += c[j] * u[j];
                rhs(nf) = -s;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
            if (!lu.isInvertible()) continue;
            const Eigen::VectorXd sol = lu.solve(rhs);
            for (int a = 0; a < nf; ++a) v(fr[a]) = sol(a);
            if (eq) mu = sol(nf);
        }
        const Eigen::VectorXd g = 2.0 * (bmat * v);
        std::vector<double> gv(g.data(), g.data() + n);
        if (!eq) mu = lp_equality_multiplier(gv, c, in_a);

        bool ok = true;
        const double gscale = g.cwiseAbs().maxCoeff() + std::abs(mu) * simd::max_abs(c);
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (in_a[i]) {
                ok = g(i) + mu * c[i] >= -1e-9 * std::max(gscale, 1.0);
            } else {
                ok = v(i) >= u[i] - opts.tol * scale;
            }
        }
        double cv = 0.0;
        for (std::size_t i = 0; i < n; ++i) cv += c[i] * v(i);
        ok = ok && std::abs(cv) <= 1e-8 * scale * std::max(1.0, simd::max_abs(c));
        if (!ok) continue;

        const double obj = v.dot(bmat * v);
        if (!found || obj < best.objective) {
            found = true;
            best.v.assign(v.data(), v.data() + n);
            best.mu = mu;
            best.lambda.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                if (in_a[i]) best.lambda[i] = std::max(0.0, g(i) + mu * c[i]);
            best.objective = obj;
        }
    }
    if (!found) throw SolverError("brute-force oracle found no KKT point", u, 1 << n);
    best.iterations = 1 << n;
    certify(m, u, best, opts.clamp_rel);
    return best;
}

double check_idempotent(const DiscreteManifold& m, std::span<const double> u,
                        const ObstacleOptions& opts) {
    const auto first = solve_obstacle(m, u, opts);
    const auto second = solve_obstacle(m, first.v, opts);
    double d = 0.0;
    for (std::size_t i = 0; i < m.n(); ++i) d = std::max(d, std::abs(second.v[i] - first.v[i]));
    return d;
}

VertexField sample_feasible(const DiscreteManifold& m, std::span<const double> u,
                            std::mt19937_64& rng, double magnitude) {
    m.check_field(u);
    const auto c = m.qw();
    std::exponential_distribution<double> ex(1.0);
    std::bernoulli_distribution keep(0.5);
    std::vector<double> d(m.n(), 0.0);
    double sp = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < m.n(); ++i) {
        if (!keep(rng)) continue;
        d[i] = magnitude * ex(rng);
        if (c[i] > 0.0) sp += c[i] * d[i];
        if (c[i] < 0.0) sn -= c[i] * d[i];
    }
    // Balance the two signs of c so the lift is Q-orthogonal.
    for (std::size_t i = 0; i < m.n(); ++i) {
        if (c[i] > 0.0 && sp > 0.0) d[i] *= (sn > 0.0 ? std::min(1.0, sn / sp) : 0.0);
        if (c[i] < 0.0 && sn > 0.0) d[i] *= (sp > 0.0 ? std::min(1.0, sp / sn) : 0.0);
    }
    VertexField z(u.begin(), u.end());
    for (std::size_t i = 0; i < m.n(); ++i) z[i] += d[i];
    return z;
}

}  // namespace paneitz
