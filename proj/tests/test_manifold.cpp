#include <doctest.h>

#include <cmath>

#include "paneitz/errors.hpp"
#include "paneitz/geometry.hpp"
#include "paneitz/manifold.hpp"

using namespace paneitz;

namespace {

// Path graph Laplacian on 4 vertices squared: PSD with kernel = constants.
DiscreteManifold small(std::vector<double> q = {1, 2, 0.5, 1}) {
    std::vector<Triplet> t;
    for (int i = 0; i < 3; ++i) {
        t.push_back({i, i, 1});
        t.push_back({i + 1, i + 1, 1});
        t.push_back({i, i + 1, -1});
        t.push_back({i + 1, i, -1});
    }
    CsrMatrix l(4, 4, t);
    return DiscreteManifold({1, 1, 1, 1}, multiply(l, l), std::move(q), {1, 1, 1, 1});
}

}  // namespace

TEST_CASE("construction rejects bad data") {
    CsrMatrix b = CsrMatrix::identity(2);
    CHECK_THROWS_AS(DiscreteManifold({1, 0}, b, {1, 1}, {1, 1}), ValidationError);
    CHECK_THROWS_AS(DiscreteManifold({1, 1}, b, {1, 1}, {1, -1}), ValidationError);
    CHECK_THROWS_AS(DiscreteManifold({1, 1}, b, {1}, {1, 1}), ValidationError);
    CHECK_THROWS_AS(DiscreteManifold({1, NAN}, b, {1, 1}, {1, 1}), ValidationError);
}

TEST_CASE("validate: hypotheses on B") {
    const auto m = small();
    const auto d = validate(m);
    CHECK(d.lambda_min == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.lambda_second > 0.0);
    CHECK(d.kappa == doctest::Approx(4.5));
    CHECK(d.scope == Scope::Subcritical);

    // Identity: B 1 != 0.
    DiscreteManifold bad({1, 1}, CsrMatrix::identity(2), {1, 1}, {1, 1});
    CHECK_THROWS_AS(validate(bad), ValidationError);

    // Asymmetric.
    std::vector<Triplet> t{{0, 0, 1}, {0, 1, -1}, {1, 0, -0.5}, {1, 1, 0.5}};
    DiscreteManifold asym({1, 1}, CsrMatrix(2, 2, t), {1, 1}, {1, 1});
    CHECK_THROWS_AS(validate(asym), ValidationError);

    // Zero form: kernel larger than the constants.
    DiscreteManifold zero({1, 1, 1}, CsrMatrix(3), {1, 1, 1}, {1, 1, 1});
    CHECK_THROWS_AS(validate(zero), ValidationError);
}

TEST_CASE("scope classification") {
    CHECK(classify_scope(4 * kPi * kPi) == Scope::Subcritical);
    CHECK(classify_scope(kCriticalKappa) == Scope::Critical);
    CHECK(classify_scope(kCriticalKappa * (1 + 1e-9)) == Scope::Critical);
    CHECK(classify_scope(9 * kPi * kPi) == Scope::OutOfScope);
    CHECK(classify_scope(-1.0) == Scope::OutOfScope);
    CHECK(classify_scope(0.0) == Scope::OutOfScope);
}

TEST_CASE("H^2_Q projection and drift handling") {
    const auto m = small();
    const std::vector<double> u{1, -1, 2, 0};
    const auto p = project_hq(m, u);
    CHECK(std::abs(q_mean(m, p)) < 1e-15);
    CHECK(p[0] - p[1] == doctest::Approx(2.0));

    std::vector<double> drift = p;
    for (auto& x : drift) x += 1e-8;
    CHECK(std::abs(q_mean(m, enforce_hq(m, drift))) < 1e-15);
    CHECK_THROWS_AS(enforce_hq(m, std::vector<double>{1, 1, 1, 1}), ConstraintError);
    Tolerances strict;
    strict.strict = true;
    CHECK_THROWS_AS(enforce_hq(m, drift, strict), ConstraintError);

    const auto zero_q = small({1, -1, 1, -1});
    CHECK_THROWS_AS(q_mean(zero_q, u), ConstraintError);
}

TEST_CASE("log_exp4_sum is stable for large fields") {
    const std::vector<double> c{1, 2, 3};
    const std::vector<double> u{300, 299, -1000};
    const double expect = 1200 + std::log(1 + 2 * std::exp(-4.0));
    CHECK(log_exp4_sum(c, u) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("J_t: translation invariance and value at zero") {
    const auto m = build_synthetic(30, 4 * kPi * kPi, 3);
    std::vector<double> u(m.n());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(0.3 * i);
    auto v = u;
    for (auto& x : v) x += 0.75;
    CHECK(J_t(m, u, 0.7) == doctest::Approx(J_t(m, v, 0.7)).epsilon(1e-12));
    const std::vector<double> z(m.n(), 0.0);
    double skw = 0.0;
    for (double x : m.kw()) skw += x;
    CHECK(J_t(m, z, 1.0) == doctest::Approx(-m.kappa() * std::log(skw)));
}

TEST_CASE("synthetic builder: determinism and normalization") {
    const auto a = build_synthetic(40, 6 * kPi * kPi, 11);
    const auto b = build_synthetic(40, 6 * kPi * kPi, 11);
    const auto c = build_synthetic(40, 6 * kPi * kPi, 12);
    CHECK(a.form().to_dense() == b.form().to_dense());
    CHECK(std::vector<double>(a.q().begin(), a.q().end()) == std::vector<double>(b.q().begin(), b.q().end()));
    CHECK(a.form().to_dense() != c.form().to_dense());
    CHECK(a.kappa() == doctest::Approx(6 * kPi * kPi).epsilon(1e-12));
    CHECK(a.volume() == doctest::Approx(kCriticalKappa / 3).epsilon(1e-12));
    bool neg = false;
    for (double q : a.q()) neg = neg || q < 0;
    CHECK(neg);
    const auto d = validate(a);
    const auto ev = pencil_eigenvalues(a.form(), a.w(), 2);
    CHECK(ev[1] == doctest::Approx(48.0).epsilon(1e-8));
    CHECK(d.scope == Scope::Subcritical);
}
