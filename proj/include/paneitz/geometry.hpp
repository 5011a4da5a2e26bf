#pragma once
// Manifold builders: seeded synthetic graphs, the flat 4-torus and a
// simplicial finite-element round 4-sphere.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "paneitz/manifold.hpp"

namespace paneitz {

struct SyntheticOptions {
    /// Total volume sum w (the round S^4 value by default).
    double volume = kCriticalKappa / 3.0;
    /// First nonzero eigenvalue of (B, diag w) after rescaling.
    double spectral_gap = 48.0;
    /// Extra random edges per vertex on top of the ring.
    double chord_ratio = 1.0;
};

/// B = L^T D L for a weighted graph Laplacian L of a connected random graph
/// (ring plus chords), D positive diagonal; random w > 0; sign-changing Q
/// scaled so sum Q w = kappa_target; K log-uniform in [0.5, 2].
/// Deterministic in `seed`.
DiscreteManifold build_synthetic(std::size_t n, double kappa_target, std::uint64_t seed,
                                 const SyntheticOptions& opts = {});

/// Boundary of the 5-orthoplex refined `subdiv` times (edgewise 2x
/// subdivision, midpoints pushed to the sphere). P1 elements with lumped mass;
/// B = S^T M^{-1} S + 2 S; Q = 3; K = 1 unless given.
DiscreteManifold build_sphere(int subdiv, std::span<const double> k = {});

/// Flat torus (2 pi periodic) with res^4 vertices, w = h^4; B = A^T A for the
/// 9-point Laplacian stencil A; Q = 0, so kappa = 0 (out of scope).
DiscreteManifold build_torus(int res);

/// Eigenvalue of B on the plane wave with integer wave vector k; divide by
/// h^4 for the eigenvalue relative to the volumes.
double torus_eigenvalue(const TorusGeometry& g, const std::array<int, 4>& k);

/// Linear index of a torus vertex.
std::size_t torus_index(const TorusGeometry& g, const std::array<int, 4>& x);

/// Degree 1: x_j (5 fields). Degree 2: x_i x_j - delta_ij / 5 for i <= j (15 fields).
std::vector<VertexField> harmonic_samples(const SphereGeometry& g, int degree);

/// arccos(a . b) clamped.
double geodesic_distance(const std::array<double, 5>& a, const std::array<double, 5>& b);

/// Distances from vertex a to all vertices.
std::vector<double> distances_from(const SphereGeometry& g, std::size_t a);

/// Number of 3-faces not shared by exactly two cells (0 for a closed mesh).
std::size_t open_face_count(const SphereGeometry& g);

/// Unique mesh edges (i < j).
std::vector<std::pair<std::int32_t, std::int32_t>> mesh_edges(const SphereGeometry& g);

/// Grundmann-Moller rule on the reference 4-simplex: barycentric points and
/// weights normalized to sum 1. Exact for polynomials up to degree 2s+1.
struct SimplexRule {
    std::vector<std::array<double, 5>> points;
    std::vector<double> weights;
};
SimplexRule grundmann_moller(int s);

}  // namespace paneitz
