#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "paneitz/simd/kernels.hpp"
#include "paneitz/sparse.hpp"

using namespace paneitz;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = scale * g(rng);
    return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

void compare(const simd::KernelTable& ref, const simd::KernelTable& vec) {
    // Lengths straddle the vector width and remainder loops.
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 17u, 64u, 1001u}) {
        CAPTURE(n);
        const auto x = randn(n, 1 + n), y = randn(n, 2 + n), z = randn(n, 3 + n);
        CHECK(rel(vec.dot(x.data(), y.data(), n), ref.dot(x.data(), y.data(), n)) < 1e-13);
        CHECK(rel(vec.dot3(x.data(), y.data(), z.data(), n), ref.dot3(x.data(), y.data(), z.data(), n)) < 1e-13);
        if (n > 0) {
            CHECK(vec.max(x.data(), n) == ref.max(x.data(), n));
            CHECK(vec.max_abs(x.data(), n) == ref.max_abs(x.data(), n));
        }
        auto ya = y, yb = y;
        ref.axpy(0.37, x.data(), ya.data(), n);
        vec.axpy(0.37, x.data(), yb.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ya[i] - yb[i]) <= 1e-15 * (1 + std::abs(ya[i])));
        ya = y, yb = y;
        ref.xpay(x.data(), -1.3, ya.data(), n);
        vec.xpay(x.data(), -1.3, yb.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ya[i] - yb[i]) <= 1e-15 * (1 + std::abs(ya[i])));

        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 + std::abs(z[i]);
        const double shift = n ? 4.0 * ref.max(x.data(), n) : 0.0;
        CHECK(rel(vec.exp_sum(w.data(), x.data(), 4.0, shift, n), ref.exp_sum(w.data(), x.data(), 4.0, shift, n)) <
              1e-13);
        std::vector<double> ea(n), eb(n);
        ref.exp_map(x.data(), 4.0, shift, ea.data(), n);
        vec.exp_map(x.data(), 4.0, shift, eb.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ea[i] - eb[i]) <= 1e-14 * (1e-300 + ea[i]));
    }

    // Extreme exponents: underflow to zero and large finite values.
    std::vector<double> x{-200, -50, 0, 50, 170, -1000, 1e-3, 3, -707.5, 709.5};
    std::vector<double> ea(x.size()), eb(x.size());
    ref.exp_map(x.data(), 1.0, 0.0, ea.data(), x.size());
    vec.exp_map(x.data(), 1.0, 0.0, eb.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(ea[i] - eb[i]) <= 1e-14 * ea[i]);

    // Sparse matrix-vector product.
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> col(0, 199);
    std::vector<Triplet> t;
    for (int r = 0; r < 200; ++r)
        for (int k = 0; k < 1 + r % 13; ++k) t.push_back({r, col(rng), randn(1, r * 31 + k)[0]});
    CsrMatrix a(200, 200, t);
    const auto v = randn(200, 9);
    std::vector<double> ya(200), yb(200);
    ref.csr_spmv(a.row_ptr().data(), a.col_idx().data(), a.values().data(), 200, v.data(), ya.data());
    vec.csr_spmv(a.row_ptr().data(), a.col_idx().data(), a.values().data(), 200, v.data(), yb.data());
    for (std::size_t i = 0; i < 200; ++i) CHECK(std::abs(ya[i] - yb[i]) <= 1e-13 * (1 + std::abs(ya[i])));
}

}  // namespace

TEST_CASE("scalar kernels: reference values") {
    const auto& s = simd::kernels(simd::Isa::Scalar);
    const std::vector<double> x{1, -2, 3}, y{4, 5, -6};
    CHECK(s.dot(x.data(), y.data(), 3) == -24.0);
    CHECK(s.max(x.data(), 3) == 3.0);
    CHECK(s.max_abs(y.data(), 3) == 6.0);
    CHECK(std::isinf(s.max(x.data(), 0)));
    const std::vector<double> w{1, 1, 1};
    CHECK(s.exp_sum(w.data(), x.data(), 1.0, 0.0, 3) == doctest::Approx(std::exp(1) + std::exp(-2) + std::exp(3)));
}

TEST_CASE("vector kernels agree with the scalar reference") {
    const auto& ref = simd::kernels(simd::Isa::Scalar);
    bool any = false;
    for (auto isa : {simd::Isa::Avx2, simd::Isa::Neon}) {
        if (!simd::isa_supported(isa)) {
            CHECK_THROWS_AS(simd::kernels(isa), std::invalid_argument);
            continue;
        }
        any = true;
        CAPTURE(std::string(simd::isa_name(isa)));
        compare(ref, simd::kernels(isa));
    }
    if (!any) MESSAGE("no vector ISA on this machine; only the scalar table was exercised");
}

TEST_CASE("active table is one of the supported ones") {
    CHECK(simd::isa_supported(simd::kernels().isa));
}
