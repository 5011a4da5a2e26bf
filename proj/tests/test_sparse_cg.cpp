#include <doctest.h>

#include <cmath>
#include <random>

#include "paneitz/cg.hpp"
#include "paneitz/sparse.hpp"

using namespace paneitz;

TEST_CASE("csr: duplicates sum, transpose and products") {
    std::vector<Triplet> t{{0, 0, 1}, {0, 1, 2}, {0, 1, 3}, {1, 0, -1}, {2, 2, 4}};
    CsrMatrix a(3, 3, t);
    CHECK(a.at(0, 1) == 5.0);
    CHECK(a.at(1, 1) == 0.0);
    CHECK(a.transpose().at(1, 0) == 5.0);
    CHECK(a.asymmetry() == 6.0);
    const std::vector<double> x{1, 1, 1};
    const auto y = a * std::span<const double>(x);
    CHECK(y == std::vector<double>{6, -1, 4});
    const auto p = multiply(a, CsrMatrix::identity(3));
    CHECK(p.to_dense() == a.to_dense());
    const auto s = add(a, a.transpose(), 0.5, 0.5);
    CHECK(s.asymmetry() == 0.0);
    CHECK(a.row_scaled(std::vector<double>{2, 1, 1}).at(0, 1) == 10.0);
}

TEST_CASE("cg: path Laplacian with deflated constants") {
    const int n = 40;
    std::vector<Triplet> t;
    for (int i = 0; i + 1 < n; ++i) {
        t.push_back({i, i, 1});
        t.push_back({i + 1, i + 1, 1});
        t.push_back({i, i + 1, -1});
        t.push_back({i + 1, i, -1});
    }
    CsrMatrix l(n, n, t);
    std::vector<double> b(n, 0.0);
    b[0] = 1.0;
    b[n - 1] = -1.0;
    std::vector<double> x(n, 0.0);
    LinearOperator op = [&](std::span<const double> in, std::span<double> out) { l.multiply(in, out); };
    const auto r = conjugate_gradient(op, b, x, {.rel_tol = 1e-14, .abs_tol = 0, .max_iter = 0, .deflate_constants = true});
    CHECK(r.converged);
    // Linear profile with unit slope.
    for (int i = 0; i + 1 < n; ++i) CHECK(x[i] - x[i + 1] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cg: zero right-hand side returns zero") {
    CsrMatrix i = CsrMatrix::identity(5);
    LinearOperator op = [&](std::span<const double> in, std::span<double> out) { i.multiply(in, out); };
    std::vector<double> b(5, 0.0), x(5, 3.0);
    const auto r = conjugate_gradient(op, b, x);
    CHECK(r.converged);
    for (double v : x) CHECK(v == 0.0);
}
