#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "paneitz/errors.hpp"
#include "paneitz/geometry.hpp"
#include "paneitz/obstacle.hpp"

using namespace paneitz;

namespace {

VertexField random_hq(const DiscreteManifold& m, std::mt19937_64& rng, double mag) {
    std::normal_distribution<double> g;
    VertexField u(m.n());
    for (auto& x : u) x = mag * g(rng);
    return project_hq(m, u);
}

double max_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("obstacle: certificate on a synthetic manifold") {
    const auto m = build_synthetic(50, 4 * kPi * kPi, 5);
    std::mt19937_64 rng(1);
    for (double mag : {0.1, 1.0, 10.0}) {
        const auto u = random_hq(m, rng, mag);
        const auto s = solve_obstacle(m, u);
        CHECK(s.feasibility <= 1e-10);
        CHECK(s.constraint <= 1e-9 * (1 + mag));
        CHECK(s.min_lambda >= -1e-9 * (1 + mag * mag));
        for (std::size_t i = 0; i < m.n(); ++i) CHECK(s.v[i] >= u[i] - 1e-10);
        // Energy never exceeds that of u itself (u is feasible).
        CHECK(s.objective <= inner(m, u, u) + 1e-9 * inner(m, u, u));
        CHECK(check_idempotent(m, u) <= 1e-9 * (1 + mag));
    }
}

TEST_CASE("obstacle: agrees with the exhaustive oracle") {
    std::mt19937_64 rng(3);
    int checked = 0;
    for (int inst = 0; inst < 30; ++inst) {
        const std::size_t n = 3 + inst % 8;
        const auto m = build_synthetic(n, (1 + inst % 4) * 2 * kPi * kPi, 100 + inst);
        const auto u = random_hq(m, rng, inst % 3 == 0 ? 0.1 : inst % 3 == 1 ? 1.0 : 5.0);
        const auto a = solve_obstacle(m, u);
        const auto b = brute_force_obstacle(m, u);
        CAPTURE(inst);
        CHECK(max_diff(a.v, b.v) <= 1e-9);
        CHECK(a.active == b.active);
        ++checked;
    }
    CHECK(checked == 30);
}

TEST_CASE("obstacle: fixed points and positive Q") {
    const auto m = build_synthetic(20, 2 * kPi * kPi, 9);
    std::mt19937_64 rng(2);
    const auto u = random_hq(m, rng, 1.0);
    const auto tu = solve_obstacle(m, u).v;
    CHECK(max_diff(solve_obstacle(m, tu).v, tu) <= 1e-10);

    // Q > 0 everywhere: v >= u with the same Q-mean forces v = u.
    const auto s = build_sphere(0);
    VertexField f(s.n());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::cos(1.0 + i);
    f = project_hq(s, f);
    CHECK(max_diff(solve_obstacle(s, f).v, f) == 0.0);
}

TEST_CASE("obstacle: errors") {
    const auto m = build_synthetic(12, 4 * kPi * kPi, 1);
    VertexField off(m.n(), 1.0);
    CHECK_THROWS_AS(solve_obstacle(m, off), ConstraintError);

    std::vector<Triplet> t{{0, 0, 1}, {0, 1, -1}, {1, 0, -1}, {1, 1, 1}};
    DiscreteManifold flat({1, 1}, CsrMatrix(2, 2, t), {1, -1}, {1, 1});
    CHECK_THROWS_AS(solve_obstacle(flat, std::vector<double>{0, 0}), ScopeError);

    const auto big = build_synthetic(13, 4 * kPi * kPi, 1);
    CHECK_THROWS_AS(brute_force_obstacle(big, VertexField(13, 0.0)), std::invalid_argument);
}

TEST_CASE("obstacle: feasible samples") {
    const auto m = build_synthetic(25, 4 * kPi * kPi, 4);
    std::mt19937_64 rng(8);
    const auto u = random_hq(m, rng, 1.0);
    for (double mag : {0.1, 1.0, 10.0}) {
        const auto z = sample_feasible(m, u, rng, mag);
        for (std::size_t i = 0; i < m.n(); ++i) CHECK(z[i] >= u[i]);
        CHECK(std::abs(q_mean(m, z) - q_mean(m, u)) <= 1e-12 * (1 + mag));
        CHECK(inner(m, z, z) >= solve_obstacle(m, u).objective * (1 - 1e-12) - 1e-12);
    }
}
