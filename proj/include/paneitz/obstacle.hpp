#pragma once
// Paneitz obstacle projection:
//
//   T(u) = argmin { v^T B v : v >= u pointwise, sum_i Q_i w_i v_i = 0 }
//
// for u in the zero-Q-mean subspace. The minimizer is unique because B is
// positive definite on that subspace whenever kappa != 0.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "paneitz/cg.hpp"
#include "paneitz/manifold.hpp"

namespace paneitz {

struct ObstacleOptions {
    /// Feasibility tolerance for v >= u and the equality constraint.
    double tol = 1e-10;
    /// Active classification: |v_i - u_i| <= clamp_rel (1 + |u_i|).
    double clamp_rel = 1e-9;
    /// Multipliers below -multiplier_rel * scale trigger a drop.
    double multiplier_rel = 1e-11;
    int max_iter = 0;  // 0: 10 n + 100
    CgOptions cg{.rel_tol = 1e-14, .abs_tol = 0.0, .max_iter = 0, .deflate_constants = false};
    Tolerances hq{};
};

struct ObstacleSolution {
    VertexField v;                    // T(u)
    std::vector<std::int32_t> active;  // indices with v_i = u_i (clamp classification)
    std::vector<double> lambda;       // multipliers for v >= u, zero off the working set
    double mu = 0.0;                  // multiplier for sum Q w v = 0
    double objective = 0.0;           // v^T B v
    double kkt_residual = 0.0;        // max |2 B v - lambda + mu Q w|
    double feasibility = 0.0;         // max(0, max_i (u_i - v_i))
    double constraint = 0.0;          // |sum Q w v|
    double complementarity = 0.0;     // max_i |lambda_i (v_i - u_i)|
    double min_lambda = 0.0;
    int iterations = 0;
};

/// Primal active-set method. Reduced equality-constrained subproblems are
/// solved by conjugate gradients on B_FF + sigma c_F c_F^T, where c = Q w and F
/// is the free set. Drops the most negative multiplier and adds the first
/// blocking bound; after a degenerate (zero-length) step both choices switch to
/// the lowest index.
///
/// Throws ConstraintError if u is not in H^2_Q (after drift projection),
/// ScopeError if kappa == 0, and SolverError (carrying the best feasible
/// iterate) when max_iter is exhausted.
ObstacleSolution solve_obstacle(const DiscreteManifold& m, std::span<const double> u,
                                const ObstacleOptions& opts = {});

/// Exhaustive reference: enumerates all 2^n candidate active sets, solves each
/// equality-constrained problem densely and keeps the best KKT point.
/// Test oracle only; throws std::invalid_argument for n > 12.
ObstacleSolution brute_force_obstacle(const DiscreteManifold& m, std::span<const double> u,
                                      const ObstacleOptions& opts = {});

/// ||T(T(u)) - T(u)||_max
double check_idempotent(const DiscreteManifold& m, std::span<const double> u,
                        const ObstacleOptions& opts = {});

/// Fills the certificate fields of `sol` (kkt_residual, feasibility,
/// constraint, complementarity, min_lambda, objective, active) from v,
/// lambda and mu.
void certify(const DiscreteManifold& m, std::span<const double> u, ObstacleSolution& sol,
             double clamp_rel = 1e-9);

/// A random point z with z >= u and sum Q w z = sum Q w u. `magnitude` scales
/// the lift z - u.
VertexField sample_feasible(const DiscreteManifold& m, std::span<const double> u,
                            std::mt19937_64& rng, double magnitude);

}  // namespace paneitz
