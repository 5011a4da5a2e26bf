#include "paneitz/green.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "paneitz/cg.hpp"
#include "paneitz/errors.hpp"
#include "paneitz/geometry.hpp"
#include "paneitz/simd/kernels.hpp"

namespace paneitz {

namespace {

const SphereGeometry& require_sphere(const DiscreteManifold& m) {
    const auto* s = m.sphere();
    if (!s) throw ScopeError("Green's function analysis needs the sphere backend");
    return *s;
}

}  // namespace

GreenData solve_green(const DiscreteManifold& m, std::size_t anchor, const GreenOptions& opts) {
    require_sphere(m);
    if (anchor >= m.n()) throw std::invalid_argument("anchor out of range");
    GreenData gd;
    gd.anchor = anchor;
    const double kappa = m.kappa();
    gd.permissive = classify_scope(kappa) != Scope::Critical;
    if (gd.permissive && opts.strict) {
        std::ostringstream os;
        os << "kappa = " << kappa << " is not 8 pi^2; the Green's function system is incompatible";
        throw ScopeError(os.str());
    }
    // 2 kappa equals 16 pi^2 at the critical value and keeps sum(rhs) = 0 exactly.
    gd.delta_mass = 2.0 * kappa;

    const std::size_t n = m.n();
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -2.0 * m.qw()[i];
    rhs[anchor] += gd.delta_mass;

    const auto& b = m.form();
    const auto diag = b.diagonal_values();
    std::vector<double> inv_diag(n);
    for (std::size_t i = 0; i < n; ++i) inv_diag[i] = 1.0 / diag[i];
    LinearOperator op = [&](std::span<const double> x, std::span<double> y) { b.multiply(x, y); };
    gd.G.assign(n, 0.0);
    CgOptions cg{.rel_tol = opts.cg_tol, .abs_tol = 0.0, .max_iter = static_cast<int>(20 * n + 100),
                 .deflate_constants = true};
    const auto res = conjugate_gradient(op, rhs, gd.G, cg, inv_diag);
    gd.cg_iterations = res.iterations;

    const double shift = simd::dot(m.qw(), gd.G) / kappa;
    for (auto& g : gd.G) g -= shift;
    gd.q_normalization = std::abs(simd::dot(m.qw(), gd.G));

    const auto bg = b * std::span<const double>(gd.G);
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) num += std::pow(bg[i] - rhs[i], 2);
    gd.residual = std::sqrt(num / simd::dot(rhs, rhs));
    if (!res.converged && gd.residual > 1e-8) {
        std::ostringstream os;
        os << "Green's function solve stalled at relative residual " << gd.residual;
        throw SolverError(os.str(), gd.G, res.iterations);
    }
    return gd;
}

double cutoff(double s, double delta) {
    const double a = 0.5 * delta;
    if (s <= a) return s;
    if (s >= delta) return delta;
    // Hermite cubic on [a, delta]: value a, slope 1 at a; value delta, slope 0 at delta.
    const double h = delta - a;
    const double x = (s - a) / h;
    const double h00 = 2 * x * x * x - 3 * x * x + 1;
    const double h10 = x * x * x - 2 * x * x + x;
    const double h01 = -2 * x * x * x + 3 * x * x;
    return h00 * a + h10 * h * 1.0 + h01 * delta;
}

void regular_part(const DiscreteManifold& m, GreenData& gd, double delta) {
    const auto& geo = require_sphere(m);
    if (!(delta > 0.0 && delta <= 0.5 * kPi))
        throw std::invalid_argument("cutoff radius must lie in (0, pi/2]");
    if (gd.G.size() != m.n()) throw std::invalid_argument("Green data does not match the manifold");
    const auto d = distances_from(geo, gd.anchor);
    gd.cutoff_radius = delta;

    const double lo = 1.2 * delta, hi = kPi - delta;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m.n(); ++i) {
        if (d[i] < lo || d[i] > hi) continue;
        num += m.w()[i] * (gd.G[i] + 2.0 * std::log(2.0 * std::sin(0.5 * d[i])));
        den += m.w()[i];
    }
    if (den == 0.0) throw std::invalid_argument("no vertices in the matching annulus");
    gd.H_aa = num / den;

    gd.H.resize(m.n());
    for (std::size_t i = 0; i < m.n(); ++i)
        gd.H[i] = i == gd.anchor ? gd.H_aa : gd.G[i] + 2.0 * std::log(cutoff(d[i], delta));
}

double f_k(const DiscreteManifold& m, GreenData& gd) {
    gd.F_K_a = 2.0 * (gd.H_aa + 0.5 * std::log(m.k()[gd.anchor]));
    return gd.F_K_a;
}

VertexField f_a(const DiscreteManifold& m, const GreenData& gd) {
    if (gd.H.size() != m.n()) throw std::invalid_argument("regular part not computed");
    VertexField f(m.n());
    for (std::size_t i = 0; i < m.n(); ++i) f[i] = std::exp(gd.H[i] + 0.25 * std::log(m.k()[i]));
    return f;
}

double l_k(const DiscreteManifold& m, GreenData& gd) {
    const auto& geo = require_sphere(m);
    if (geo.scalar_curvature.size() != m.n()) throw std::invalid_argument("scalar curvature field missing");
    const auto f = f_a(m, gd);
    const auto a = gd.anchor;
    const auto rp = geo.stiffness.row_ptr();
    const auto ci = geo.stiffness.col_idx();
    const auto vals = geo.stiffness.values();
    double sf = 0.0;
    for (auto k = rp[a]; k < rp[a + 1]; ++k) sf += vals[k] * f[ci[k]];
    const double lf = sf / m.w()[a] + geo.scalar_curvature[a] / 6.0 * f[a];
    gd.L_K_a = -f[a] * lf;
    return gd.L_K_a;
}

ShellSymmetry shell_symmetry(const DiscreteManifold& m, const GreenData& gd) {
    const auto& geo = require_sphere(m);
    const auto d = distances_from(geo, gd.anchor);
    std::vector<std::size_t> order(m.n());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return d[x] < d[y]; });
    ShellSymmetry out;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && d[order[j]] - d[order[i]] <= 1e-9 * (1.0 + d[order[i]])) ++j;
        if (j - i >= 2) {
            double mean = 0.0;
            for (std::size_t k = i; k < j; ++k) mean += gd.G[order[k]];
            mean /= static_cast<double>(j - i);
            double var = 0.0;
            for (std::size_t k = i; k < j; ++k) var += std::pow(gd.G[order[k]] - mean, 2);
            var /= static_cast<double>(j - i);
            out.max_variance = std::max(out.max_variance, var);
            ++out.shells;
        }
        i = j;
    }
    return out;
}

GreenData green_at(const DiscreteManifold& m, std::size_t anchor, double delta, const GreenOptions& opts) {
    auto gd = solve_green(m, anchor, opts);
    regular_part(m, gd, delta);
    f_k(m, gd);
    l_k(m, gd);
    return gd;
}

std::string critical_name(CriticalType t) {
    switch (t) {
        case CriticalType::Regular: return "regular";
        case CriticalType::Max: return "max";
        case CriticalType::Min: return "min";
        case CriticalType::Flat: return "flat";
    }
    return "unknown";
}

CriticalReport classify_critical(const DiscreteManifold& m, const std::vector<double>& F,
                                 const std::vector<double>& L, const std::vector<std::size_t>& anchors_in,
                                 double flat_tol, double zero_tol) {
    const auto& geo = require_sphere(m);
    std::vector<std::size_t> anchors = anchors_in;
    if (anchors.empty()) {
        anchors.resize(m.n());
        std::iota(anchors.begin(), anchors.end(), 0);
    }
    if (F.size() != anchors.size() || L.size() != anchors.size())
        throw std::invalid_argument("F and L must have one value per anchor");
    CriticalReport rep;
    rep.flat_tol = flat_tol;
    rep.zero_tol = zero_tol;
    rep.types.assign(anchors.size(), CriticalType::Regular);

    const auto [lo, hi] = std::minmax_element(F.begin(), F.end());
    if (*hi - *lo <= flat_tol) {
        rep.degenerate = true;
        std::fill(rep.types.begin(), rep.types.end(), CriticalType::Flat);
        rep.positive_hypothesis = "inconclusive";
        rep.nonzero_hypothesis = "inconclusive";
        return rep;
    }

    std::vector<std::ptrdiff_t> slot(m.n(), -1);
    for (std::size_t k = 0; k < anchors.size(); ++k) slot[anchors[k]] = static_cast<std::ptrdiff_t>(k);
    std::vector<std::vector<std::size_t>> nb(anchors.size());
    for (const auto& [i, j] : mesh_edges(geo)) {
        if (slot[i] < 0 || slot[j] < 0) continue;
        nb[slot[i]].push_back(slot[j]);
        nb[slot[j]].push_back(slot[i]);
    }
    bool all_pos = true, all_nonzero = true;
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        if (nb[k].empty()) continue;
        bool is_max = true, is_min = true;
        for (auto o : nb[k]) {
            if (!(F[k] > F[o])) is_max = false;
            if (!(F[k] < F[o])) is_min = false;
        }
        if (!is_max && !is_min) continue;
        rep.types[k] = is_max ? CriticalType::Max : CriticalType::Min;
        CriticalPoint cp;
        cp.vertex = anchors[k];
        cp.type = rep.types[k];
        cp.F = F[k];
        cp.L = L[k];
        cp.L_sign = std::abs(L[k]) <= zero_tol ? 0 : (L[k] > 0 ? 1 : -1);
        all_pos = all_pos && cp.L_sign > 0;
        all_nonzero = all_nonzero && cp.L_sign != 0;
        rep.critical.push_back(cp);
    }
    if (rep.critical.empty()) {
        rep.positive_hypothesis = rep.nonzero_hypothesis = "inconclusive";
    } else {
        rep.positive_hypothesis = all_pos ? "holds" : "fails";
        rep.nonzero_hypothesis = all_nonzero ? "holds" : "fails";
    }
    return rep;
}

}  // namespace paneitz
