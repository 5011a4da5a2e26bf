#include "paneitz/functionals.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "paneitz/cg.hpp"
#include "paneitz/errors.hpp"
#include "paneitz/simd/kernels.hpp"

namespace paneitz {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_t(double t) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in (0, 1]");
}

// p = K w e^{4u} / sum K w e^{4u}
std::vector<double> exp_weights(const DiscreteManifold& m, std::span<const double> u) {
    const double shift = 4.0 * simd::max(u);
    std::vector<double> p(m.n());
    simd::exp_map(u, 4.0, shift, p);
    for (std::size_t i = 0; i < m.n(); ++i) p[i] *= m.kw()[i];
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= s;
    return p;
}

double max_scaled(std::span<const double> g, std::span<const double> w) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r = std::max(r, std::abs(g[i]) / (2.0 * w[i]));
    return r;
}

void recentre(const DiscreteManifold& m, std::vector<double>& u) {
    const double c = simd::dot(m.qw(), u) / m.kappa();
    for (auto& x : u) x -= c;
}

struct Evaluator {
    const DiscreteManifold& m;
    double t;
    int evaluations = 0;

    double value(std::span<const double> u) {
        ++evaluations;
        return J_t(m, u, t);
    }
    double value_grad(std::span<const double> u, std::vector<double>& g) {
        ++evaluations;
        g = grad_J_t(m, u, t);
        return J_t(m, u, t);
    }
};

// Armijo backtracking along d from x; returns the accepted step or 0.
double armijo(Evaluator& ev, const DiscreteManifold& m, const std::vector<double>& x, double f,
              double slope, const std::vector<double>& d, double alpha0, std::vector<double>& x_new,
              double& f_new) {
    double alpha = alpha0;
    x_new.resize(x.size());
    for (int k = 0; k < 60; ++k) {
        for (std::size_t i = 0; i < x.size(); ++i) x_new[i] = x[i] + alpha * d[i];
        recentre(m, x_new);
        f_new = ev.value(x_new);
        if (std::isfinite(f_new) && f_new <= f + 1e-4 * alpha * slope) return alpha;
        alpha *= 0.5;
    }
    return 0.0;
}

}  // namespace

VertexField grad_J_t(const DiscreteManifold& m, std::span<const double> u, double t) {
    m.check_field(u);
    check_t(t);
    auto g = m.form() * u;
    const auto p = exp_weights(m, u);
    const double tk = 4.0 * t * m.kappa();
    for (std::size_t i = 0; i < m.n(); ++i) g[i] = 2.0 * g[i] + 4.0 * t * m.qw()[i] - tk * p[i];
    return g;
}

double el_residual(const DiscreteManifold& m, std::span<const double> u, double t) {
    return max_scaled(grad_J_t(m, u, t), m.w());
}

double prescribed_residual(const DiscreteManifold& m, std::span<const double> u, double t) {
    m.check_field(u);
    check_t(t);
    const auto bu = m.form() * u;
    double r = 0.0;
    for (std::size_t i = 0; i < m.n(); ++i) {
        const double lhs = bu[i] / m.w()[i] + 2.0 * t * m.q()[i];
        r = std::max(r, std::abs(lhs - 2.0 * t * m.k()[i] * std::exp(4.0 * u[i])));
    }
    return r;
}

FunctionalReport eval_I_t(const DiscreteManifold& m, std::span<const double> u_in, double t,
                          const ObstacleOptions& opts) {
    m.check_field(u_in);
    check_t(t);
    const auto u = enforce_hq(m, u_in, opts.hq);
    auto r = eval_J_t(m, u, t);
    r.tolerances = opts.hq;
    const auto sol = solve_obstacle(m, u, opts);
    const auto& tu = sol.v;
    const double tk = t * m.kappa();
    r.log_term_Tu = log_exp4_sum(m.kw(), tu);
    r.I_t = r.quadratic_term - tk * r.log_term_Tu;
    const double tu_energy = inner(m, tu, tu);
    r.I_t_of_Tu = tu_energy - tk * r.log_term_Tu;  // T(Tu) = Tu
    r.J_t_of_Tu = J_t(m, tu, t);
    r.gap_J = r.J_t - r.J_t_of_Tu;
    r.gap_I = r.I_t - r.I_t_of_Tu;
    r.energy_drop = r.quadratic_term - tu_energy;
    r.has_obstacle_terms = true;
    return r;
}

double I_t(const DiscreteManifold& m, std::span<const double> u, double t,
           const ObstacleOptions& opts) {
    return eval_I_t(m, u, t, opts).I_t;
}

namespace {

struct Descent {
    double f = 0.0;
    double res = 0.0;
    int iterations = 0;
    bool stalled = false;
};

// Quasi-Newton descent from x (in place), then Newton-CG polish.
Descent descend(const DiscreteManifold& m, double t, std::vector<double>& x, const MinimizeOptions& opts) {
    const std::size_t n = m.n();
    recentre(m, x);
    Evaluator ev{m, t};
    std::vector<double> g, g_new, x_new, d(n);
    double f = ev.value_grad(x, g);
    double res = max_scaled(g, m.w());

    std::deque<std::pair<std::vector<double>, std::vector<double>>> hist;
    std::deque<double> rho;
    int it = 0;
    bool stalled = false;

    const double lbfgs_target = opts.newton_polish ? std::max(opts.tol, opts.newton_switch) : opts.tol;
    for (; it < opts.max_iter && res > lbfgs_target; ++it) {
        // Two-loop recursion.
        d = g;
        std::vector<double> alpha(hist.size());
        for (std::size_t k = hist.size(); k-- > 0;) {
            alpha[k] = rho[k] * simd::dot(hist[k].first, d);
            simd::axpy(-alpha[k], hist[k].second, d);
        }
        if (!hist.empty()) {
            const auto& [s, y] = hist.back();
            const double gamma = simd::dot(s, y) / simd::dot(y, y);
            for (auto& v : d) v *= gamma;
        }
        for (std::size_t k = 0; k < hist.size(); ++k) {
            const double beta = rho[k] * simd::dot(hist[k].second, d);
            simd::axpy(alpha[k] - beta, hist[k].first, d);
        }
        for (auto& v : d) v = -v;
        double slope = simd::dot(g, d);
        if (!(slope < 0.0)) {
            hist.clear();
            rho.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            slope = simd::dot(g, d);
        }
        const double alpha0 = hist.empty() ? std::min(1.0, 1.0 / std::max(simd::max_abs(g), 1e-300)) : 1.0;
        double f_new = 0.0;
        double step = armijo(ev, m, x, f, slope, d, alpha0, x_new, f_new);
        if (step == 0.0) {
            if (hist.empty()) {
                stalled = true;
                break;
            }
            hist.clear();
            rho.clear();
            continue;
        }
        g_new = grad_J_t(m, x_new, t);
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        const double sy = simd::dot(s, y);
        if (sy > 1e-12 * std::sqrt(simd::dot(s, s) * simd::dot(y, y))) {
            hist.emplace_back(std::move(s), std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(hist.size()) > opts.memory) {
                hist.pop_front();
                rho.pop_front();
            }
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        res = max_scaled(g, m.w());
    }

    // Newton-CG polish: H = 2B - 16 t kappa (diag p - p p^T).
    if (opts.newton_polish && res > opts.tol) {
        const auto bdiag = m.form().diagonal_values();
        for (int k = 0; k < opts.newton_iter && res > opts.tol; ++k, ++it) {
            const auto p = exp_weights(m, x);
            const double c16 = 16.0 * t * m.kappa();
            std::vector<double> bv(n);
            LinearOperator hess = [&](std::span<const double> v, std::span<double> hv) {
                m.form().multiply(v, bv);
                const double pv = simd::dot(p, v);
                for (std::size_t i = 0; i < n; ++i)
                    hv[i] = 2.0 * bv[i] - c16 * (p[i] * v[i] - p[i] * pv);
            };
            std::vector<double> inv_diag(n), rhs(n);
            for (std::size_t i = 0; i < n; ++i) {
                inv_diag[i] = 1.0 / std::max(2.0 * bdiag[i], 1e-300);
                rhs[i] = -g[i];
            }
            std::fill(d.begin(), d.end(), 0.0);
            CgOptions cg{.rel_tol = 1e-12, .abs_tol = 0.0, .max_iter = static_cast<int>(4 * n + 50),
                         .deflate_constants = true};
            conjugate_gradient(hess, rhs, d, cg, inv_diag);
            double slope = simd::dot(g, d);
            if (!(slope < 0.0)) {
                for (std::size_t i = 0; i < n; ++i) d[i] = -inv_diag[i] * g[i];
                slope = simd::dot(g, d);
            }
            // Full step first when it lowers the residual: near the minimum the
            // decrease in J sinks below rounding and Armijo takes tiny steps.
            double f_new = 0.0;
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + d[i];
            recentre(m, x_new);
            g_new = grad_J_t(m, x_new, t);
            if (max_scaled(g_new, m.w()) < 0.5 * res) {
                f_new = ev.value(x_new);
            } else {
                const double step = armijo(ev, m, x, f, slope, d, 1.0, x_new, f_new);
                if (step == 0.0) {
                    stalled = true;
                    break;
                }
                g_new = grad_J_t(m, x_new, t);
            }
            x.swap(x_new);
            g.swap(g_new);
            f = f_new;
            res = max_scaled(g, m.w());
        }
    }

    return {f, res, it, stalled};
}

}  // namespace

HessianEigen hessian_min_eigenpair(const DiscreteManifold& m, std::span<const double> u, double t) {
    m.check_field(u);
    const auto n = static_cast<Eigen::Index>(m.n());
    const auto dense = m.form().to_dense();
    Eigen::MatrixXd h = 2.0 * Eigen::Map<const Eigen::MatrixXd>(dense.data(), n, n);
    const auto p = exp_weights(m, u);
    const Eigen::Map<const Eigen::VectorXd> pv(p.data(), n);
    const double c16 = 16.0 * t * m.kappa();
    h -= c16 * Eigen::MatrixXd(pv.asDiagonal());
    h += c16 * pv * pv.transpose();
    h = 0.5 * (h + h.transpose()).eval();

    // Orthonormal basis of the complement of Q w.
    const Eigen::MatrixXd cm = Eigen::Map<const Eigen::VectorXd>(m.qw().data(), n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(cm);
    const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd z = full.rightCols(n - 1);
    const Eigen::MatrixXd r = z.transpose() * h * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
    HessianEigen out;
    out.value = es.eigenvalues()(0);
    const Eigen::VectorXd v = z * es.eigenvectors().col(0);
    out.vector.assign(v.data(), v.data() + n);
    return out;
}

double hessian_min_eigenvalue(const DiscreteManifold& m, std::span<const double> u, double t) {
    return hessian_min_eigenpair(m, u, t).value;
}

MinimizeResult minimize_J_t(const DiscreteManifold& m, double t,
                            std::optional<std::span<const double>> u0, const MinimizeOptions& opts) {
    check_t(t);
    if (!(m.kappa() > 0.0)) throw ScopeError("minimization needs positive total Q-curvature");
    if (t * m.kappa() > kCriticalKappa * (1.0 + opts.scope_slack)) {
        std::ostringstream os;
        os << "t kappa = " << t * m.kappa() << " exceeds 8 pi^2";
        throw ScopeError(os.str());
    }
    const std::size_t n = m.n();
    std::vector<double> x(n, 0.0);
    if (u0) {
        m.check_field(*u0, "initial guess");
        x.assign(u0->begin(), u0->end());
    }
    auto run = descend(m, t, x, opts);
    int it = run.iterations;
    MinimizeResult out;
    out.t = t;
    out.hessian_min = kNaN;

    // A stationary point with negative curvature on H^2_Q is a saddle: step
    // off along the eigenvector and descend again.
    if (opts.second_order && n <= opts.second_order_limit) {
        for (int k = 0; k <= opts.max_escapes; ++k) {
            if (run.res > opts.tol) break;
            const auto eig = hessian_min_eigenpair(m, x, t);
            out.hessian_min = eig.value;
            if (eig.value >= -opts.curvature_tol || k == opts.max_escapes) break;
            const double vmax = simd::max_abs(eig.vector);
            bool moved = false;
            for (double alpha : {0.1, -0.1, 0.5, -0.5, 0.02, -0.02}) {
                std::vector<double> y = x;
                simd::axpy(alpha / vmax, eig.vector, y);
                auto trial = descend(m, t, y, opts);
                it += trial.iterations;
                if (trial.res <= opts.tol && trial.f < run.f - 1e-12 * (1.0 + std::abs(run.f))) {
                    x.swap(y);
                    run = trial;
                    moved = true;
                    ++out.saddle_escapes;
                    break;
                }
            }
            if (!moved) break;
        }
    }
    const double f = run.f, res = run.res;
    const bool stalled = run.stalled;

    out.u_min = x;
    out.J_value = f;
    out.el_residual = res;
    out.iterations = it;
    out.converged = res <= opts.tol;
    out.u_c = normalize_solution(m, x);
    std::ostringstream msg;
    if (out.converged)
        msg << "converged";
    else if (stalled)
        msg << "line search stalled at residual " << res;
    else
        msg << "iteration limit reached at residual " << res;
    out.message = msg.str();

    out.I_value = kNaN;
    out.fixed_point_defect = kNaN;
    if (opts.fixed_point) {
        try {
            const auto sol = solve_obstacle(m, x, opts.obstacle);
            double defect = 0.0;
            for (std::size_t i = 0; i < n; ++i) defect = std::max(defect, std::abs(sol.v[i] - x[i]));
            out.fixed_point_defect = defect;
            out.I_value = inner(m, x, x) - t * m.kappa() * log_exp4_sum(m.kw(), sol.v);
        } catch (const SolverError& e) {
            out.message += std::string("; obstacle solve failed: ") + e.what();
        }
    }
    return out;
}

IMinimizeResult minimize_I(const DiscreteManifold& m, const MinimizeOptions& opts,
                           const ICertificateOptions& cert) {
    IMinimizeResult out;
    auto mopts = opts;
    mopts.fixed_point = true;
    out.result = minimize_J_t(m, cert.t, std::nullopt, mopts);
    const auto& r = out.result;
    auto& c = out.certificate;
    c.fixed_point_defect = r.fixed_point_defect;
    c.i_minus_j = std::abs(r.I_value - r.J_value);

    std::mt19937_64 rng(cert.seed);
    std::normal_distribution<double> normal;
    const std::size_t n = m.n();
    double worst = std::numeric_limits<double>::infinity();
    const int per_mag = cert.magnitudes.empty() ? 0 : cert.probes / static_cast<int>(cert.magnitudes.size());
    for (std::size_t mi = 0; mi < cert.magnitudes.size(); ++mi) {
        const double mag = cert.magnitudes[mi];
        const int count = mi + 1 == cert.magnitudes.size()
                              ? cert.probes - per_mag * static_cast<int>(mi)
                              : per_mag;
        for (int k = 0; k < count; ++k) {
            // Alternate between probes around the minimizer and around zero.
            std::vector<double> z(n);
            for (std::size_t i = 0; i < n; ++i) z[i] = mag * normal(rng) + (k % 2 == 0 ? r.u_min[i] : 0.0);
            z = project_hq(m, z);
            ++c.probes;
            try {
                worst = std::min(worst, I_t(m, z, cert.t, opts.obstacle) - r.I_value);
            } catch (const SolverError&) {
                ++c.probe_failures;
            }
        }
    }
    c.worst_probe_margin = c.probes > 0 ? worst : 0.0;

    if (r.converged) {
        std::ostringstream os;
        if (!(c.fixed_point_defect <= 10.0 * cert.tol))
            os << "minimizer is not a fixed point of the obstacle projection (defect "
               << c.fixed_point_defect << "); ";
        if (!(c.i_minus_j <= cert.tol)) os << "I and J differ at the minimizer by " << c.i_minus_j << "; ";
        if (c.worst_probe_margin < -cert.tol)
            os << "a probe undercuts I(u_min) by " << -c.worst_probe_margin << "; ";
        if (!os.str().empty()) throw CertificateError(os.str());
    }
    return out;
}

VertexField normalize_solution(const DiscreteManifold& m, std::span<const double> u_min) {
    m.check_field(u_min);
    const double shift = 0.25 * (std::log(m.kappa()) - log_exp4_sum(m.kw(), u_min));
    VertexField out(u_min.begin(), u_min.end());
    for (auto& v : out) v += shift;
    return out;
}

DiscreteManifold conformal_change(const DiscreteManifold& m, std::span<const double> u) {
    m.check_field(u);
    const auto bu = m.form() * u;
    std::vector<double> w(m.n()), q(m.n());
    for (std::size_t i = 0; i < m.n(); ++i) {
        const double e = std::exp(4.0 * u[i]);
        w[i] = m.w()[i] * e;
        q[i] = 0.5 * (bu[i] / m.w()[i] + 2.0 * m.q()[i]) / e;
    }
    return m.with_metric(std::move(w), std::move(q));
}

std::vector<double> default_schedule(int steps, double eps0, double rho) {
    std::vector<double> s(static_cast<std::size_t>(std::max(steps, 0)));
    for (int l = 0; l < steps; ++l) s[l] = eps0 * std::pow(rho, l);
    return s;
}

ContinuationTrace continuation_minimize(const DiscreteManifold& m, const ContinuationOptions& opts) {
    const auto schedule = opts.schedule.empty() ? default_schedule(opts.steps, opts.eps0, opts.rho)
                                                : opts.schedule;
    for (std::size_t l = 0; l < schedule.size(); ++l) {
        if (!(schedule[l] > 0.0 && schedule[l] < 1.0))
            throw std::invalid_argument("continuation schedule entries must lie in (0, 1)");
        if (l > 0 && !(schedule[l] < schedule[l - 1]))
            throw std::invalid_argument("continuation schedule must be strictly decreasing");
    }
    ContinuationTrace trace;
    std::vector<double> u(m.n(), 0.0);
    const std::vector<double> zero(m.n(), 0.0);
    bool all_converged = true;
    for (std::size_t l = 0; l < schedule.size(); ++l) {
        ContinuationStep step;
        step.eps = schedule[l];
        step.t = 1.0 - schedule[l];
        step.result = minimize_J_t(m, step.t, std::span<const double>(u), opts.minimize);
        all_converged = all_converged && step.result.converged;
        step.deficit = step.result.J_value - J_t(m, zero, step.t);
        step.monitor = simd::max(step.result.u_c);
        double drift = 0.0;
        for (std::size_t i = 0; i < m.n(); ++i)
            drift = std::max(drift, std::abs(step.result.u_min[i] - u[i]));
        step.drift = drift;
        step.hessian_min = !std::isnan(step.result.hessian_min) ? step.result.hessian_min
                           : m.n() <= opts.hessian_limit    ? hessian_min_eigenvalue(m, step.result.u_min, step.t)
                                                            : kNaN;
        u = step.result.u_min;
        trace.steps.push_back(std::move(step));
        const auto& s = trace.steps;
        if (s.size() >= 4 && s.back().monitor - s[s.size() - 4].monitor > opts.bubble_threshold)
            trace.bubbling_suspected = true;
    }
    bool decaying = true;
    const auto& s = trace.steps;
    for (std::size_t l = s.size() >= 3 ? s.size() - 3 : 1; l < s.size(); ++l)
        if (l > 0 && s[l].drift > s[l - 1].drift * (1.0 + 1e-3) + opts.stable_drift) decaying = false;
    trace.converged_smoothly = all_converged && !trace.bubbling_suspected && decaying;
    if (trace.bubbling_suspected)
        trace.status = "bubbling suspected";
    else if (trace.converged_smoothly)
        trace.status = "converged smoothly";
    else if (!all_converged)
        trace.status = "inner minimization did not converge at some step";
    else
        trace.status = "not stabilized";
    return trace;
}

}  // namespace paneitz
