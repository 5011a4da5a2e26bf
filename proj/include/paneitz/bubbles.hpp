#pragma once
// Standard bubbles on the sphere backend and the Moser-Trudinger-Onofri
// deficits.

#include <array>

#include "paneitz/manifold.hpp"
#include "paneitz/obstacle.hpp"

namespace paneitz {

struct Bubble {
    std::array<double, 5> center{};
    double t = 1.0;
    VertexField v;  // log(t (1 + |s|^2) / (1 + t^2 |s|^2)), s stereographic from -center
    VertexField w;  // v - q_mean(v)
    double pde_residual = 0.0;     // max_i |(B v)_i / w_i + 6 - 6 e^{4 v_i}|
    double pde_residual_l2 = 0.0;  // sqrt(sum_i w_i r_i^2 / sum_i w_i)
    /// sum_i v_i w_i r_i: the part of <v,v> carried by the residual.
    double residual_pairing = 0.0;
};

/// Throws std::invalid_argument for t <= 0 or a center off the unit sphere,
/// ScopeError without the sphere backend.
Bubble make_bubble(const DiscreteManifold& m, const std::array<double, 5>& center, double t);

/// v - q_mean(v)
VertexField q_normalize(const DiscreteManifold& m, std::span<const double> v);

struct OnofriReport {
    double J = 0.0;        // J(u) with K = 1
    double J_zero = 0.0;   // J(0) = -kappa log Vol
    double deficit = 0.0;  // J(u) - J(0)
    bool has_obstacle_gap = false;
    /// (1/kappa) <u,u> - log(sum w e^{4 T u} / Vol)
    double obstacle_gap = 0.0;
    double projection_defect = 0.0;  // ||T u - u||_max
};

/// Needs the sphere backend with K = 1. The obstacle gap is evaluated when u
/// lies in H^2_Q.
OnofriReport onofri_gap(const DiscreteManifold& m, std::span<const double> u,
                        const ObstacleOptions& opts = {});

/// Mesh tolerance for the equality cases: kappa h^2 with h the mean chordal
/// edge length.
double mesh_tolerance(const DiscreteManifold& m);

}  // namespace paneitz
