#pragma once
// Discrete conformal 4-manifold: vertex volumes w, the Paneitz bilinear form
// <u,v> = u^T B v, vertex Q-curvature and a positive prescription K.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "paneitz/sparse.hpp"

namespace paneitz {

/// Vertex function on a manifold; its length must equal the vertex count.
using VertexField = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;
/// Total Q-curvature of the round 4-sphere; the critical threshold.
inline constexpr double kCriticalKappa = 8.0 * kPi * kPi;
/// Relative slack when comparing kappa against the critical threshold.
inline constexpr double kCriticalSlack = 1e-6;

struct SphereGeometry {
    std::vector<std::array<double, 5>> vertices;
    std::vector<std::array<std::int32_t, 5>> cells;
    int level = 0;
    CsrMatrix stiffness;                   // S, int grad u . grad v
    std::vector<double> scalar_curvature;  // R at vertices (12 on the unit sphere)
    double mean_edge = 0.0;                // mean chordal edge length
};

struct TorusGeometry {
    int res = 0;
    double spacing = 0.0;
};

struct SyntheticGeometry {
    std::uint64_t seed = 0;
    double kappa_target = 0.0;
};

using Geometry = std::variant<std::monostate, SphereGeometry, TorusGeometry, SyntheticGeometry>;

class DiscreteManifold {
public:
    /// Throws ValidationError on non-finite data, w_i <= 0, K_i <= 0 or
    /// inconsistent sizes.
    DiscreteManifold(std::vector<double> w, CsrMatrix form, std::vector<double> q,
                     std::vector<double> k, Geometry geometry = {});

    std::size_t n() const { return w_.size(); }
    std::span<const double> w() const { return w_; }
    const CsrMatrix& form() const { return *form_; }
    std::span<const double> q() const { return q_; }
    std::span<const double> k() const { return k_; }
    /// Q_i w_i, the row of the zero-Q-mean constraint.
    std::span<const double> qw() const { return qw_; }
    /// K_i w_i
    std::span<const double> kw() const { return kw_; }
    /// sum_i Q_i w_i
    double kappa() const { return kappa_; }
    double volume() const { return volume_; }
    const Geometry& geometry() const { return *geometry_; }
    const SphereGeometry* sphere() const { return std::get_if<SphereGeometry>(geometry_.get()); }

    /// Same geometry and form, new prescription.
    DiscreteManifold with_prescription(std::vector<double> k) const;
    /// Same form, geometry and prescription, new volumes and Q.
    DiscreteManifold with_metric(std::vector<double> w, std::vector<double> q) const;
    /// Same everything except the bilinear form.
    DiscreteManifold with_form(CsrMatrix form) const;

    void check_field(std::span<const double> u, const char* what = "field") const;

private:
    DiscreteManifold(std::vector<double> w, std::shared_ptr<const CsrMatrix> form,
                     std::vector<double> q, std::vector<double> k,
                     std::shared_ptr<const Geometry> geometry);
    void init();

    std::vector<double> w_;
    std::shared_ptr<const CsrMatrix> form_;
    std::vector<double> q_;
    std::vector<double> k_;
    std::shared_ptr<const Geometry> geometry_;
    std::vector<double> qw_;
    std::vector<double> kw_;
    double kappa_ = 0.0;
    double volume_ = 0.0;
};

enum class Scope { Subcritical, Critical, OutOfScope };
std::string scope_name(Scope s);
Scope classify_scope(double kappa);

struct Diagnostics {
    std::size_t n = 0;
    double symmetry_defect = 0.0;  // max |B - B^T|
    double constant_defect = 0.0;  // max |B 1|
    double lambda_min = 0.0;       // smallest eigenvalue of B (estimate for large n)
    double lambda_second = 0.0;    // second smallest
    bool eigen_exact = true;       // dense solve vs iterative estimate
    double kappa = 0.0;
    double min_w = 0.0;
    double min_k = 0.0;
    Scope scope = Scope::OutOfScope;
};

struct ValidateOptions {
    double symmetry_tol = 1e-9;   // relative to max |B_ij|
    double eigen_tol = 1e-9;      // relative to max |B_ij|
    std::size_t dense_limit = 1600;
};

/// Checks the standing hypotheses on B. Throws ValidationError on asymmetry,
/// B 1 != 0, a negative eigenvalue, or a kernel larger than the constants.
Diagnostics validate(const DiscreteManifold& m, const ValidateOptions& opts = {});

/// Smallest `count` eigenvalues of the pencil (A, diag w); dense up to
/// dense_limit, Lanczos estimates beyond.
std::vector<double> pencil_eigenvalues(const CsrMatrix& a, std::span<const double> w,
                                       std::size_t count, std::size_t dense_limit = 1600);

/// (1/kappa) sum_i Q_i w_i u_i; ConstraintError when kappa == 0.
double q_mean(const DiscreteManifold& m, std::span<const double> u);

/// u - q_mean(u)
VertexField project_hq(const DiscreteManifold& m, std::span<const double> u);

/// u^T B v
double inner(const DiscreteManifold& m, std::span<const double> u, std::span<const double> v);

/// log(sum_i c_i exp(4 u_i)) with a max shift; c_i > 0.
double log_exp4_sum(std::span<const double> c, std::span<const double> u);

struct Tolerances {
    double constraint = 1e-10;  // |q_mean| for H^2_Q membership
    double energy = 1e-8;       // functional identities
    double drift = 1e-6;        // largest q_mean silently projected away
    bool strict = false;        // reject instead of projecting drift
};

/// Enforces H^2_Q membership: returns u projected when |q_mean(u)| is within
/// drift tolerance (exact when already within the constraint tolerance);
/// throws ConstraintError otherwise or, in strict mode, above the constraint
/// tolerance.
VertexField enforce_hq(const DiscreteManifold& m, std::span<const double> u,
                       const Tolerances& tol = {});

struct FunctionalReport {
    double t = 1.0;
    double J_t = 0.0;
    double I_t = 0.0;
    double quadratic_term = 0.0;  // <u,u>
    double linear_term = 0.0;     // 4 t sum Q w u
    double log_term_u = 0.0;      // log sum K w e^{4u}
    double log_term_Tu = 0.0;     // log sum K w e^{4 T u}
    double gap_J = 0.0;           // J_t(u) - J_t(Tu)
    double gap_I = 0.0;           // I_t(u) - I_t(Tu)
    double energy_drop = 0.0;     // <u,u> - <Tu,Tu>
    double J_t_of_Tu = 0.0;
    double I_t_of_Tu = 0.0;
    bool has_obstacle_terms = false;
    Tolerances tolerances;
};

/// J_t(u) = <u,u> + 4t sum Q w u - t kappa log sum K w e^{4u}; J-side fields.
FunctionalReport eval_J_t(const DiscreteManifold& m, std::span<const double> u, double t);

/// Scalar J_t without the report.
double J_t(const DiscreteManifold& m, std::span<const double> u, double t);

}  // namespace paneitz
