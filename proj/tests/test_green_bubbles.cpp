#include <doctest.h>

#include <cmath>

#include "paneitz/bubbles.hpp"
#include "paneitz/errors.hpp"
#include "paneitz/geometry.hpp"
#include "paneitz/green.hpp"

using namespace paneitz;

TEST_CASE("cutoff is C^1 and matches its definition") {
    const double d = 0.6;
    CHECK(cutoff(0.1, d) == 0.1);
    CHECK(cutoff(0.3, d) == doctest::Approx(0.3));
    CHECK(cutoff(0.6, d) == 0.6);
    CHECK(cutoff(2.0, d) == 0.6);
    const double e = 1e-7;
    for (double s : {0.3, 0.6}) {
        CHECK(cutoff(s - e, d) == doctest::Approx(cutoff(s + e, d)).epsilon(1e-6));
        const double left = (cutoff(s, d) - cutoff(s - e, d)) / e;
        const double right = (cutoff(s + e, d) - cutoff(s, d)) / e;
        CHECK(left == doctest::Approx(right).epsilon(1e-4).scale(1.0));
    }
    for (double s = 0.31; s < 0.6; s += 0.01) CHECK(cutoff(s, d) >= cutoff(s - 0.01, d));
}

TEST_CASE("green: residual, normalization, symmetry and F_K shift law") {
    const auto m = build_sphere(1);
    auto gd = green_at(m, 0, 0.5);
    CHECK(gd.residual <= 1e-8);
    CHECK(gd.q_normalization <= 1e-8);
    CHECK_FALSE(gd.permissive);
    const auto sym = shell_symmetry(m, gd);
    CHECK(sym.shells > 0);
    CHECK(sym.max_variance <= mesh_tolerance(m));

    const double c = 3.7;
    std::vector<double> k(m.n(), c);
    const auto mc = m.with_prescription(k);
    auto gc = green_at(mc, 0, 0.5);
    CHECK(gc.F_K_a - gd.F_K_a == doctest::Approx(std::log(c)).epsilon(1e-12));
    CHECK_THROWS_AS(regular_part(m, gd, 2.0), std::invalid_argument);
}

TEST_CASE("green: scope handling") {
    const auto syn = build_synthetic(20, 4 * kPi * kPi, 1);
    CHECK_THROWS_AS(solve_green(syn, 0), ScopeError);
}

TEST_CASE("critical classification") {
    const auto m = build_sphere(0);
    std::vector<double> F(m.n(), 1.0), L(m.n(), 0.5);
    const auto flat = classify_critical(m, F, L);
    CHECK(flat.degenerate);
    CHECK(flat.positive_hypothesis == "inconclusive");
    // Vertex 0 strictly highest; its antipode (not adjacent) strictly lowest.
    F[0] = 2.0;
    F[1] = 0.0;
    L[1] = -0.2;
    const auto rep = classify_critical(m, F, L);
    CHECK(rep.types[0] == CriticalType::Max);
    CHECK(rep.types[1] == CriticalType::Min);
    CHECK(rep.positive_hypothesis == "fails");
    CHECK(rep.nonzero_hypothesis == "holds");
}

TEST_CASE("bubbles: t = 1 is the round metric") {
    const auto m = build_sphere(1);
    const auto b = make_bubble(m, {1, 0, 0, 0, 0}, 1.0);
    for (double v : b.v) CHECK(v == doctest::Approx(0.0).scale(1.0));
    const auto r = onofri_gap(m, b.w);
    CHECK(r.deficit == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(make_bubble(m, {1, 1, 0, 0, 0}, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(make_bubble(m, {1, 0, 0, 0, 0}, -1.0), std::invalid_argument);
}

TEST_CASE("bubbles: translation invariance and fixed point") {
    const auto m = build_sphere(1);
    const auto b = make_bubble(m, {0, 0, 1, 0, 0}, 2.0);
    CHECK(std::abs(q_mean(m, b.w)) <= 1e-12);
    const auto rw = onofri_gap(m, b.w);
    const auto rv = onofri_gap(m, b.v);
    CHECK(rw.J == doctest::Approx(rv.J).epsilon(1e-12));
    CHECK(rw.has_obstacle_gap);
    CHECK_FALSE(rv.has_obstacle_gap);
    CHECK(rw.projection_defect == 0.0);
    CHECK(mesh_tolerance(m) > 0.0);

    const auto k2 = m.with_prescription(std::vector<double>(m.n(), 2.0));
    CHECK_THROWS_AS(onofri_gap(k2, b.w), ScopeError);
    const auto syn = build_synthetic(10, 4 * kPi * kPi, 1);
    CHECK_THROWS_AS(make_bubble(syn, {1, 0, 0, 0, 0}, 2.0), ScopeError);
}
