#include "paneitz/bubbles.hpp"

#include <cmath>
#include <stdexcept>

#include "paneitz/errors.hpp"
#include "paneitz/simd/kernels.hpp"

namespace paneitz {

namespace {

const SphereGeometry& require_sphere(const DiscreteManifold& m) {
    const auto* s = m.sphere();
    if (!s) throw ScopeError("bubble experiments need the sphere backend");
    return *s;
}

}  // namespace

Bubble make_bubble(const DiscreteManifold& m, const std::array<double, 5>& center, double t) {
    const auto& geo = require_sphere(m);
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("bubble scale must be positive");
    double nrm = 0.0;
    for (double c : center) nrm += c * c;
    if (std::abs(std::sqrt(nrm) - 1.0) > 1e-9) throw std::invalid_argument("bubble center must be a unit vector");

    Bubble b;
    b.center = center;
    b.t = t;
    const std::size_t n = m.n();
    b.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (int a = 0; a < 5; ++a) d += geo.vertices[i][a] * center[a];
        // |s|^2 = (1 - d) / (1 + d); cleared of the denominator so the
        // antipode stays finite.
        b.v[i] = std::log(2.0 * t / ((1.0 + d) + t * t * (1.0 - d)));
    }
    b.w = q_normalize(m, b.v);

    const auto bv = m.form() * std::span<const double>(b.v);
    double l2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = bv[i] / m.w()[i] + 6.0 - 6.0 * std::exp(4.0 * b.v[i]);
        b.pde_residual = std::max(b.pde_residual, std::abs(r));
        l2 += m.w()[i] * r * r;
        b.residual_pairing += b.v[i] * m.w()[i] * r;
    }
    b.pde_residual_l2 = std::sqrt(l2 / m.volume());
    return b;
}

VertexField q_normalize(const DiscreteManifold& m, std::span<const double> v) { return project_hq(m, v); }

OnofriReport onofri_gap(const DiscreteManifold& m, std::span<const double> u, const ObstacleOptions& opts) {
    require_sphere(m);
    for (double k : m.k())
        if (k != 1.0) throw ScopeError("Onofri deficits are defined for K = 1");
    m.check_field(u);
    OnofriReport r;
    r.J = J_t(m, u, 1.0);
    r.J_zero = -m.kappa() * std::log(m.volume());
    r.deficit = r.J - r.J_zero;

    const double scale = 1.0 + simd::max_abs(u);
    if (std::abs(q_mean(m, u)) <= opts.hq.drift * scale) {
        const auto uq = enforce_hq(m, u, opts.hq);
        const auto sol = solve_obstacle(m, uq, opts);
        r.has_obstacle_gap = true;
        r.obstacle_gap = inner(m, uq, uq) / m.kappa() - (log_exp4_sum(m.w(), sol.v) - std::log(m.volume()));
        for (std::size_t i = 0; i < m.n(); ++i)
            r.projection_defect = std::max(r.projection_defect, std::abs(sol.v[i] - uq[i]));
    }
    return r;
}

double mesh_tolerance(const DiscreteManifold& m) {
    const auto& geo = require_sphere(m);
    return m.kappa() * geo.mean_edge * geo.mean_edge;
}

}  // namespace paneitz
