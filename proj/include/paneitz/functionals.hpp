#pragma once
// Gradient, I_t evaluation, minimization of J_t over H^2_Q, the continuation
// in t -> 1, normalization of minimizers and conformal change of metric.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paneitz/manifold.hpp"
#include "paneitz/obstacle.hpp"

namespace paneitz {

/// g = 2 B u + 4t Q w - 4t kappa K w e^{4u} / sum K w e^{4u}
VertexField grad_J_t(const DiscreteManifold& m, std::span<const double> u, double t);

/// Euler-Lagrange defect max_i |g_i| / (2 w_i), i.e. the pointwise residual of
/// B u / w + 2t Q = 2t kappa K e^{4u} / sum K w e^{4u}.
double el_residual(const DiscreteManifold& m, std::span<const double> u, double t);

/// max_i |(B u)_i / w_i + 2t Q_i - 2t K_i e^{4 u_i}|
double prescribed_residual(const DiscreteManifold& m, std::span<const double> u, double t);

/// Both sides: J-side fields for u, plus T(u), I_t(u), I_t(Tu), J_t(Tu) and
/// the gaps. u must lie in H^2_Q (drift is projected per opts.hq).
FunctionalReport eval_I_t(const DiscreteManifold& m, std::span<const double> u, double t,
                          const ObstacleOptions& opts = {});

/// I_t(u) alone (one obstacle solve).
double I_t(const DiscreteManifold& m, std::span<const double> u, double t,
           const ObstacleOptions& opts = {});

struct MinimizeOptions {
    double tol = 1e-9;        // el_residual target
    int max_iter = 5000;      // quasi-Newton iterations
    int newton_iter = 50;     // Newton-CG polish iterations
    int memory = 12;
    bool newton_polish = true;
    /// Residual at which the quasi-Newton phase hands over to Newton-CG.
    double newton_switch = 1e-5;
    /// Relative slack on t kappa <= 8 pi^2 before raising ScopeError.
    double scope_slack = kCriticalSlack;
    bool fixed_point = true;  // compute ||u - T u|| with the obstacle solver
    /// Check the Hessian on H^2_Q at the stationary point (dense, n at most
    /// second_order_limit) and escape saddles along negative directions.
    bool second_order = true;
    std::size_t second_order_limit = 1200;
    int max_escapes = 8;
    double curvature_tol = 1e-8;
    ObstacleOptions obstacle{};
};

struct MinimizeResult {
    VertexField u_min;
    VertexField u_c;
    double t = 1.0;
    double J_value = 0.0;
    double I_value = 0.0;
    double el_residual = 0.0;
    double fixed_point_defect = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
    /// Smallest Hessian eigenvalue on H^2_Q at u_min (NaN when not checked).
    double hessian_min = 0.0;
    int saddle_escapes = 0;
};

/// Projected L-BFGS with Armijo backtracking, followed by a Newton-CG polish.
/// Throws ScopeError if t kappa exceeds 8 pi^2; non-convergence is reported
/// through `converged` and `message`.
MinimizeResult minimize_J_t(const DiscreteManifold& m, double t,
                            std::optional<std::span<const double>> u0 = std::nullopt,
                            const MinimizeOptions& opts = {});

struct ICertificateOptions {
    double t = 1.0;
    int probes = 1000;
    std::vector<double> magnitudes{0.1, 1.0, 10.0};
    std::uint64_t seed = 1;
    double tol = 1e-8;
};

struct ICertificate {
    double fixed_point_defect = 0.0;
    double i_minus_j = 0.0;        // |I(u_min) - J(u_min)|
    int probes = 0;
    double worst_probe_margin = 0.0;  // min over probes of I(z) - I(u_min)
    int probe_failures = 0;           // probes where the obstacle solve failed
};

struct IMinimizeResult {
    MinimizeResult result;
    ICertificate certificate;
};

/// Minimizes I_t through J_t (same minimizers) and certifies: u = T u,
/// I = J at u_min, and no probe in H^2_Q beats I(u_min). Throws
/// CertificateError when a certificate fails for a converged minimizer.
IMinimizeResult minimize_I(const DiscreteManifold& m, const MinimizeOptions& opts = {},
                           const ICertificateOptions& cert = {});

/// u - 1/4 log sum K w e^{4u} + 1/4 log kappa
VertexField normalize_solution(const DiscreteManifold& m, std::span<const double> u_min);

/// w' = w e^{4u}, Q' = e^{-4u} ((B u)/w + 2 Q) / 2, same B and K.
DiscreteManifold conformal_change(const DiscreteManifold& m, std::span<const double> u);

struct ContinuationOptions {
    int steps = 12;
    double eps0 = 0.5;
    double rho = 0.6;
    std::vector<double> schedule;  // overrides eps0/rho/steps when non-empty
    double bubble_threshold = 2.0;  // rise of max u_c over three steps
    double stable_drift = 1e-4;
    MinimizeOptions minimize{};
    /// Dense projected-Hessian eigenvalue at each step when n is at most this.
    std::size_t hessian_limit = 1200;
};

struct ContinuationStep {
    double eps = 0.0;
    double t = 0.0;
    MinimizeResult result;
    double deficit = 0.0;   // J_t(u_min) - J_t(0)
    double monitor = 0.0;   // max_i u_c(i)
    double drift = 0.0;     // ||u^l - u^{l-1}||_max
    double hessian_min = 0.0;  // smallest eigenvalue of the Hessian on H^2_Q (NaN if skipped)
};

struct ContinuationTrace {
    std::vector<ContinuationStep> steps;
    bool bubbling_suspected = false;
    bool converged_smoothly = false;
    std::string status;
};

std::vector<double> default_schedule(int steps = 12, double eps0 = 0.5, double rho = 0.6);

ContinuationTrace continuation_minimize(const DiscreteManifold& m,
                                        const ContinuationOptions& opts = {});

/// Hessian of J_t at u: 2B - 16 t kappa (diag p - p p^T), p = K w e^{4u}/S.
/// Returns its smallest eigenvalue restricted to H^2_Q (dense; small n).
double hessian_min_eigenvalue(const DiscreteManifold& m, std::span<const double> u, double t);

struct HessianEigen {
    double value = 0.0;
    VertexField vector;  // unit Euclidean norm, in the complement of Q w
};
HessianEigen hessian_min_eigenpair(const DiscreteManifold& m, std::span<const double> u, double t);

}  // namespace paneitz
