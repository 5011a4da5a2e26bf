#pragma once
// Green's function of the Paneitz form on the sphere backend, its regular
// part, and the critical-case functionals F_K, F^a and L_K.

#include <string>
#include <vector>

#include "paneitz/manifold.hpp"

namespace paneitz {

struct GreenOptions {
    /// Reject kappa away from 8 pi^2 instead of using the 2 kappa mass.
    bool strict = false;
    double cg_tol = 1e-12;
};

struct GreenData {
    std::size_t anchor = 0;
    VertexField G;
    VertexField H;              // empty until regular_part
    double H_aa = 0.0;
    double F_K_a = 0.0;
    double L_K_a = 0.0;
    double cutoff_radius = 0.0;
    double delta_mass = 0.0;    // mass placed at the anchor
    bool permissive = false;    // kappa differs from 8 pi^2; mass 2 kappa used
    double residual = 0.0;      // ||B G - rhs||_2 / ||rhs||_2
    double q_normalization = 0.0;  // |sum Q w G|
    int cg_iterations = 0;
};

/// Solves B G = 2 kappa e_a - 2 Q w on the complement of constants, then
/// shifts so sum Q w G = 0. Needs the sphere backend.
GreenData solve_green(const DiscreteManifold& m, std::size_t anchor, const GreenOptions& opts = {});

/// Cutoff chi_delta: s on [0, delta/2], delta on [delta, inf), C^1 cubic blend
/// between.
double cutoff(double s, double delta);

/// H_i = G_i + 2 log chi_delta(d(a, x_i)); H at the anchor is the diagonal
/// estimate: the volume-weighted mean of G + 2 log(2 sin(d/2)) over the
/// annulus 1.2 delta <= d <= pi - delta. Throws std::invalid_argument for
/// delta outside (0, pi/2].
void regular_part(const DiscreteManifold& m, GreenData& gd, double delta = 0.5);

/// F_K(a) = 2 (H(a,a) + 1/2 log K(a)); stores into gd.
double f_k(const DiscreteManifold& m, GreenData& gd);

/// F^a_i = exp(H_i + 1/4 log K_i)
VertexField f_a(const DiscreteManifold& m, const GreenData& gd);

/// L_K(a) = -F^a(a) (L F^a)(a), L = M^{-1} S + R/6; stores into gd.
double l_k(const DiscreteManifold& m, GreenData& gd);

/// Max over equal-distance shells (relative width 1e-9) around the anchor of
/// the population variance of G. Shells with one vertex are skipped.
struct ShellSymmetry {
    double max_variance = 0.0;
    std::size_t shells = 0;
};
ShellSymmetry shell_symmetry(const DiscreteManifold& m, const GreenData& gd);

/// Full pipeline for one anchor.
GreenData green_at(const DiscreteManifold& m, std::size_t anchor, double delta = 0.5,
                   const GreenOptions& opts = {});

enum class CriticalType { Regular, Max, Min, Flat };
std::string critical_name(CriticalType t);

struct CriticalPoint {
    std::size_t vertex = 0;
    CriticalType type = CriticalType::Regular;
    double F = 0.0;
    double L = 0.0;
    int L_sign = 0;
};

struct CriticalReport {
    std::vector<CriticalType> types;      // per anchor in `anchors`
    std::vector<CriticalPoint> critical;  // Max / Min vertices
    bool degenerate = false;              // F numerically flat
    /// "holds", "fails" or "inconclusive"
    std::string positive_hypothesis;  // every critical point has L_K > 0
    std::string nonzero_hypothesis;   // every critical point has L_K != 0
    double flat_tol = 0.0;
    double zero_tol = 0.0;
};

/// Neighbour comparison over mesh edges. `anchors` lists the vertices where F
/// and L were evaluated (all vertices when empty); only edges between
/// evaluated vertices count.
CriticalReport classify_critical(const DiscreteManifold& m, const std::vector<double>& F,
                                 const std::vector<double>& L, const std::vector<std::size_t>& anchors = {},
                                 double flat_tol = 1e-6, double zero_tol = 1e-9);

}  // namespace paneitz
