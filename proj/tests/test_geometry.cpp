#include <doctest.h>

#include <cmath>
#include <numeric>

#include "paneitz/errors.hpp"
#include "paneitz/geometry.hpp"

using namespace paneitz;

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

TEST_CASE("Grundmann-Moller rules integrate monomials exactly") {
    // Mean of prod lambda_i^a_i over the 4-simplex is (prod a_i!) 4! / (|a| + 4)!.
    for (int s = 0; s <= 3; ++s) {
        const auto rule = grundmann_moller(s);
        CHECK(std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
        const int deg = 2 * s + 1;
        for (int a0 = 0; a0 <= deg; ++a0)
            for (int a1 = 0; a0 + a1 <= deg; ++a1)
                for (int a2 = 0; a0 + a1 + a2 <= deg; ++a2) {
                    const std::array<int, 5> a{a0, a1, a2, 0, deg - a0 - a1 - a2};
                    double q = 0.0;
                    for (std::size_t k = 0; k < rule.points.size(); ++k) {
                        double p = rule.weights[k];
                        for (int i = 0; i < 5; ++i) p *= std::pow(rule.points[k][i], a[i]);
                        q += p;
                    }
                    double exact = factorial(4) / factorial(deg + 4);
                    for (int x : a) exact *= factorial(x);
                    CAPTURE(s);
                    CHECK(q == doctest::Approx(exact).epsilon(1e-12));
                }
    }
}

TEST_CASE("sphere: closed mesh, volume and curvature") {
    for (int level : {0, 1}) {
        const auto m = build_sphere(level);
        const auto* g = m.sphere();
        REQUIRE(g);
        CHECK(open_face_count(*g) == 0);
        CHECK(m.volume() == doctest::Approx(kCriticalKappa / 3).epsilon(1e-3));
        CHECK(m.kappa() == doctest::Approx(kCriticalKappa).epsilon(1e-3));
        for (const auto& v : g->vertices) {
            double r = 0;
            for (double x : v) r += x * x;
            CHECK(r == doctest::Approx(1.0));
        }
        for (double q : m.q()) CHECK(q == 3.0);
        for (double r : g->scalar_curvature) CHECK(r == 12.0);
        CHECK(validate(m).scope == Scope::Critical);
    }
    CHECK(build_sphere(0).n() == 10);
    CHECK(build_sphere(1).n() == 10 + 40);
}

TEST_CASE("sphere: spectra approach the round values") {
    const auto m = build_sphere(1);
    const auto* g = m.sphere();
    const auto lap = pencil_eigenvalues(g->stiffness, m.w(), 2);
    const auto pan = pencil_eigenvalues(m.form(), m.w(), 2);
    CHECK(lap[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK(lap[1] == doctest::Approx(4.0).epsilon(0.1));
    CHECK(pan[1] == doctest::Approx(24.0).epsilon(0.2));
    // Degree-1 harmonics have Laplace Rayleigh quotient near 4.
    for (const auto& f : harmonic_samples(*g, 1)) {
        const auto sf = g->stiffness * std::span<const double>(f);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            num += f[i] * sf[i];
            den += m.w()[i] * f[i] * f[i];
        }
        CHECK(num / den == doctest::Approx(4.0).epsilon(0.05));
    }
    CHECK(harmonic_samples(*g, 2).size() == 15);
}

TEST_CASE("torus: plane waves are exact eigenvectors") {
    const auto m = build_torus(6);
    const auto* g = std::get_if<TorusGeometry>(&m.geometry());
    REQUIRE(g);
    CHECK(m.n() == 1296);
    CHECK(m.kappa() == 0.0);
    for (const auto& k : {std::array<int, 4>{1, 0, 0, 0}, {1, 2, 0, 1}, {0, 3, 3, 0}}) {
        VertexField f(m.n());
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
                for (int c = 0; c < 6; ++c)
                    for (int d = 0; d < 6; ++d)
                        f[torus_index(*g, {a, b, c, d})] =
                            std::cos(g->spacing * (k[0] * a + k[1] * b + k[2] * c + k[3] * d));
        const auto bf = m.form() * std::span<const double>(f);
        const double lam = torus_eigenvalue(*g, k);
        for (std::size_t i = 0; i < m.n(); ++i) CHECK(bf[i] == doctest::Approx(lam * f[i]).scale(1e-9));
    }
    // Small wave vectors approach |k|^4.
    const TorusGeometry fine{64, 2 * kPi / 64};
    CHECK(torus_eigenvalue(fine, {1, 1, 0, 0}) / std::pow(fine.spacing, 4) == doctest::Approx(4.0).epsilon(1e-2));
}

TEST_CASE("geodesic distance and edges") {
    CHECK(geodesic_distance({1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}) == doctest::Approx(kPi / 2));
    CHECK(geodesic_distance({1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}) == 0.0);
    CHECK(geodesic_distance({1, 0, 0, 0, 0}, {-1, 0, 0, 0, 0}) == doctest::Approx(kPi));
    const auto m = build_sphere(0);
    // Orthoplex: every vertex joins all but its antipode.
    CHECK(mesh_edges(*m.sphere()).size() == 40);
}
