#include "paneitz/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "paneitz/errors.hpp"

namespace paneitz {

namespace {

using Vec5 = std::array<double, 5>;
using Cell = std::array<std::int32_t, 5>;

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// All compositions of `total` into `parts` nonnegative integers.
void compositions(int total, int parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= total; ++k) {
        cur.push_back(k);
        compositions(total - k, parts - 1, cur, out);
        cur.pop_back();
    }
}

// Edgewise subdivision of a 4-simplex into 16 children. Each child vertex is
// a pair (i, j) of parent corners: the corner itself when i == j, else the
// edge midpoint.
std::vector<std::array<std::pair<int, int>, 5>> child_template() {
    constexpr int d = 4, k = 2;
    std::vector<std::array<std::pair<int, int>, 5>> out;
    auto point = [&](const std::array<int, d>& y) {
        std::array<int, d + 1> a{k - y[0], y[0] - y[1], y[1] - y[2], y[2] - y[3], y[3]};
        std::vector<int> idx;
        for (int i = 0; i <= d; ++i)
            for (int r = 0; r < a[i]; ++r) idx.push_back(i);
        return std::make_pair(idx[0], idx[1]);
    };
    std::array<int, d> perm{0, 1, 2, 3};
    for (int base = 0; base < (1 << d); ++base) {
        std::array<int, d> b0{};
        for (int i = 0; i < d; ++i) b0[i] = (base >> (d - 1 - i)) & 1;
        std::sort(perm.begin(), perm.end());
        do {
            std::array<std::array<int, d>, d + 1> ys;
            ys[0] = b0;
            for (int s = 0; s < d; ++s) {
                ys[s + 1] = ys[s];
                ys[s + 1][perm[s]] += 1;
            }
            bool ok = true;
            for (const auto& y : ys) {
                if (y[0] > k) ok = false;
                for (int i = 0; i + 1 < d; ++i)
                    if (y[i] < y[i + 1]) ok = false;
            }
            if (!ok) continue;
            std::array<std::pair<int, int>, 5> child;
            for (int s = 0; s <= d; ++s) child[s] = point(ys[s]);
            out.push_back(child);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return out;
}

void subdivide(std::vector<Vec5>& verts, std::vector<Cell>& cells) {
    static const auto tmpl = child_template();
    std::unordered_map<std::uint64_t, std::int32_t> mid;
    auto midpoint = [&](std::int32_t a, std::int32_t b) {
        const auto lo = std::min(a, b), hi = std::max(a, b);
        const std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint32_t>(hi);
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        Vec5 p;
        double nrm = 0.0;
        for (int i = 0; i < 5; ++i) {
            p[i] = verts[a][i] + verts[b][i];
            nrm += p[i] * p[i];
        }
        nrm = std::sqrt(nrm);
        for (auto& x : p) x /= nrm;
        verts.push_back(p);
        const auto id = static_cast<std::int32_t>(verts.size() - 1);
        mid.emplace(key, id);
        return id;
    };
    std::vector<Cell> out;
    out.reserve(cells.size() * tmpl.size());
    for (auto c : cells) {
        // Newest vertex first keeps the children well shaped across levels.
        std::sort(c.begin(), c.end(), std::greater<>());
        for (const auto& child : tmpl) {
            Cell nc;
            for (int s = 0; s < 5; ++s) {
                const auto [i, j] = child[s];
                nc[s] = i == j ? c[i] : midpoint(c[i], c[j]);
            }
            out.push_back(nc);
        }
    }
    cells.swap(out);
}

// Composite rule: the base rule applied on each child of `levels` rounds of
// edgewise subdivision of the reference simplex.
SimplexRule composite_rule(const SimplexRule& base, int levels) {
    using Bary = std::array<double, 5>;
    std::vector<std::array<Bary, 5>> simplices(1);
    for (int a = 0; a < 5; ++a) {
        simplices[0][a] = Bary{};
        simplices[0][a][a] = 1.0;
    }
    static const auto tmpl = child_template();
    for (int l = 0; l < levels; ++l) {
        std::vector<std::array<Bary, 5>> next;
        for (const auto& s : simplices)
            for (const auto& child : tmpl) {
                std::array<Bary, 5> c;
                for (int a = 0; a < 5; ++a) {
                    const auto [i, j] = child[a];
                    for (int b = 0; b < 5; ++b) c[a][b] = 0.5 * (s[i][b] + s[j][b]);
                }
                next.push_back(c);
            }
        simplices.swap(next);
    }
    SimplexRule out;
    const double share = 1.0 / static_cast<double>(simplices.size());
    for (const auto& s : simplices)
        for (std::size_t q = 0; q < base.points.size(); ++q) {
            Bary p{};
            for (int a = 0; a < 5; ++a)
                for (int b = 0; b < 5; ++b) p[b] += base.points[q][a] * s[a][b];
            out.points.push_back(p);
            out.weights.push_back(base.weights[q] * share);
        }
    return out;
}

}  // namespace

SimplexRule grundmann_moller(int s) {
    constexpr int n = 4;
    const int d = 2 * s + 1;
    SimplexRule rule;
    for (int i = 0; i <= s; ++i) {
        const double weight = (i % 2 ? -1.0 : 1.0) * std::pow(2.0, -2 * s) * std::pow(d + n - 2 * i, d) /
                              (factorial(i) * factorial(d + n - i));
        std::vector<std::vector<int>> betas;
        std::vector<int> cur;
        compositions(s - i, n + 1, cur, betas);
        for (const auto& b : betas) {
            std::array<double, 5> p;
            for (int j = 0; j <= n; ++j) p[j] = (2.0 * b[j] + 1.0) / (d + n - 2 * i);
            rule.points.push_back(p);
            rule.weights.push_back(weight);
        }
    }
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    for (auto& w : rule.weights) w /= total;
    return rule;
}

DiscreteManifold build_synthetic(std::size_t n, double kappa_target, std::uint64_t seed,
                                 const SyntheticOptions& opts) {
    if (n < 3) throw std::invalid_argument("build_synthetic: n must be at least 3");
    if (!(kappa_target > 0.0)) throw std::invalid_argument("build_synthetic: kappa_target must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
    const auto ni = static_cast<std::int32_t>(n);

    std::set<std::pair<std::int32_t, std::int32_t>> edges;
    for (std::int32_t i = 0; i < ni; ++i) edges.insert({std::min(i, (i + 1) % ni), std::max(i, (i + 1) % ni)});
    const auto chords = static_cast<std::size_t>(std::llround(opts.chord_ratio * static_cast<double>(n)));
    std::uniform_int_distribution<std::int32_t> pick(0, ni - 1);
    for (std::size_t tries = 0; edges.size() < n + chords && tries < 20 * (n + chords); ++tries) {
        const auto a = pick(rng), b = pick(rng);
        if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
    }
    std::vector<Triplet> lt;
    for (const auto& [a, b] : edges) {
        const double we = uniform(0.5, 2.0);
        lt.push_back({a, a, we});
        lt.push_back({b, b, we});
        lt.push_back({a, b, -we});
        lt.push_back({b, a, -we});
    }
    const CsrMatrix lap(n, n, lt);
    std::vector<double> dg(n);
    for (auto& x : dg) x = uniform(0.5, 2.0);
    CsrMatrix b = multiply(lap, lap.row_scaled(dg));
    b = add(b, b.transpose(), 0.5, 0.5);

    std::vector<double> w(n);
    for (auto& x : w) x = uniform(0.5, 1.5);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x *= opts.volume / wsum;

    const double gap = pencil_eigenvalues(b, w, 2)[1];
    b = b.scaled(opts.spectral_gap / gap);

    // Sign-changing Q: vertex 0 positive, vertex n-1 negative.
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = uniform(0.2, 1.5);
        const bool neg = i == n - 1 || (i != 0 && unit(rng) < 0.35);
        q[i] = neg ? -mag : mag;
    }
    double pos = 0.0, negs = 0.0;
    for (std::size_t i = 0; i < n; ++i) (q[i] > 0 ? pos : negs) += std::abs(q[i]) * w[i];
    if (negs >= 0.5 * pos)
        for (auto& x : q)
            if (x < 0) x *= 0.5 * pos / negs;
    double qsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) qsum += q[i] * w[i];
    for (auto& x : q) x *= kappa_target / qsum;

    std::vector<double> k(n);
    for (auto& x : k) x = std::exp(uniform(std::log(0.5), std::log(2.0)));

    return DiscreteManifold(std::move(w), std::move(b), std::move(q), std::move(k),
                            SyntheticGeometry{seed, kappa_target});
}

DiscreteManifold build_sphere(int subdiv, std::span<const double> k) {
    if (subdiv < 0 || subdiv > 3) throw std::invalid_argument("build_sphere: subdiv must be in 0..3");
    std::vector<Vec5> verts;
    for (int i = 0; i < 5; ++i)
        for (double s : {1.0, -1.0}) {
            Vec5 v{};
            v[i] = s;
            verts.push_back(v);
        }
    std::vector<Cell> cells;
    for (int signs = 0; signs < 32; ++signs) {
        Cell c;
        for (int i = 0; i < 5; ++i) c[i] = 2 * i + ((signs >> (4 - i)) & 1);
        cells.push_back(c);
    }
    for (int l = 0; l < subdiv; ++l) subdivide(verts, cells);

    const std::size_t n = verts.size();
    // Coarse cells see a strongly varying projection factor; refine the
    // quadrature so every level does comparable work.
    const SimplexRule rule = composite_rule(grundmann_moller(3), std::max(0, 3 - subdiv));
    std::vector<double> mass(n, 0.0);
    std::vector<Triplet> st;
    st.reserve(cells.size() * 25);
    for (const auto& c : cells) {
        Eigen::Matrix<double, 5, 5> p;
        for (int a = 0; a < 5; ++a)
            for (int j = 0; j < 5; ++j) p(a, j) = verts[c[a]][j];
        Eigen::Matrix<double, 4, 5> e;
        for (int a = 0; a < 4; ++a) e.row(a) = p.row(a + 1) - p.row(0);
        const Eigen::Matrix4d g = e * e.transpose();
        const double flat = std::sqrt(std::max(g.determinant(), 0.0)) / 24.0;
        if (!(flat > 0.0)) throw ValidationError("degenerate sphere cell");
        const Eigen::Matrix4d ginv = g.inverse();
        const Eigen::Matrix<double, 4, 5> dmat = ginv * e;
        Eigen::Matrix<double, 5, 5> grads;
        grads.row(0) = -dmat.colwise().sum();
        grads.bottomRows<4>() = dmat;

        // Radial projection onto the sphere scales area by rho / |x|^5.
        const Eigen::Matrix<double, 1, 5> x0 = p.row(0);
        const Eigen::Matrix<double, 1, 5> foot = x0 - (ginv * (e * x0.transpose())).transpose() * e;
        const double rho = foot.norm();
        double avg = 0.0;
        for (std::size_t qi = 0; qi < rule.points.size(); ++qi) {
            Eigen::Matrix<double, 1, 5> x = Eigen::Matrix<double, 1, 5>::Zero();
            for (int a = 0; a < 5; ++a) x += rule.points[qi][a] * p.row(a);
            avg += rule.weights[qi] * rho / std::pow(x.norm(), 5);
        }
        const double vol = flat * avg;

        const Eigen::Matrix<double, 5, 5> kloc = vol * grads * grads.transpose();
        for (int a = 0; a < 5; ++a) {
            mass[c[a]] += vol / 5.0;
            for (int bb = 0; bb < 5; ++bb) st.push_back({c[a], c[bb], kloc(a, bb)});
        }
    }
    CsrMatrix stiff(n, n, st);
    stiff = add(stiff, stiff.transpose(), 0.5, 0.5);
    std::vector<double> inv_mass(n);
    for (std::size_t i = 0; i < n; ++i) inv_mass[i] = 1.0 / mass[i];
    CsrMatrix b = add(multiply(stiff, stiff.row_scaled(inv_mass)), stiff, 1.0, 2.0);
    b = add(b, b.transpose(), 0.5, 0.5);

    SphereGeometry geo;
    geo.vertices = std::move(verts);
    geo.cells = std::move(cells);
    geo.level = subdiv;
    geo.stiffness = std::move(stiff);
    geo.scalar_curvature.assign(n, 12.0);
    const auto edges = mesh_edges(geo);
    double total = 0.0;
    for (const auto& [i, j] : edges) {
        double d2 = 0.0;
        for (int a = 0; a < 5; ++a) d2 += std::pow(geo.vertices[i][a] - geo.vertices[j][a], 2);
        total += std::sqrt(d2);
    }
    geo.mean_edge = total / static_cast<double>(edges.size());

    std::vector<double> kk(n, 1.0);
    if (!k.empty()) {
        if (k.size() != n) throw std::invalid_argument("build_sphere: K has the wrong length");
        kk.assign(k.begin(), k.end());
    }
    return DiscreteManifold(std::move(mass), std::move(b), std::vector<double>(n, 3.0), std::move(kk),
                            std::move(geo));
}

std::size_t torus_index(const TorusGeometry& g, const std::array<int, 4>& x) {
    std::size_t idx = 0;
    for (int a = 0; a < 4; ++a) idx = idx * g.res + static_cast<std::size_t>(((x[a] % g.res) + g.res) % g.res);
    return idx;
}

double torus_eigenvalue(const TorusGeometry& g, const std::array<int, 4>& k) {
    double sym = 0.0;
    for (int a = 0; a < 4; ++a) sym += 4.0 * std::pow(std::sin(kPi * k[a] / g.res), 2);
    return sym * sym;
}

DiscreteManifold build_torus(int res) {
    if (res < 4) throw std::invalid_argument("build_torus: res must be at least 4");
    TorusGeometry geo{res, 2.0 * kPi / res};
    const std::size_t n = static_cast<std::size_t>(res) * res * res * res;
    // h^2 A is the integer stencil 8 at the centre, -1 at the 8 axis neighbours,
    // so h^4 A^T A needs no spacing factors.
    std::vector<Triplet> at;
    at.reserve(9 * n);
    std::array<int, 4> x{};
    for (x[0] = 0; x[0] < res; ++x[0])
        for (x[1] = 0; x[1] < res; ++x[1])
            for (x[2] = 0; x[2] < res; ++x[2])
                for (x[3] = 0; x[3] < res; ++x[3]) {
                    const auto i = static_cast<std::int32_t>(torus_index(geo, x));
                    at.push_back({i, i, 8.0});
                    for (int a = 0; a < 4; ++a)
                        for (int s : {-1, 1}) {
                            auto y = x;
                            y[a] += s;
                            at.push_back({i, static_cast<std::int32_t>(torus_index(geo, y)), -1.0});
                        }
                }
    const CsrMatrix a(n, n, at);
    CsrMatrix b = multiply(a.transpose(), a);
    const double h4 = std::pow(geo.spacing, 4);
    return DiscreteManifold(std::vector<double>(n, h4), std::move(b), std::vector<double>(n, 0.0),
                            std::vector<double>(n, 1.0), geo);
}

std::vector<VertexField> harmonic_samples(const SphereGeometry& g, int degree) {
    std::vector<VertexField> out;
    const std::size_t n = g.vertices.size();
    if (degree == 1) {
        for (int j = 0; j < 5; ++j) {
            VertexField f(n);
            for (std::size_t v = 0; v < n; ++v) f[v] = g.vertices[v][j];
            out.push_back(std::move(f));
        }
    } else if (degree == 2) {
        for (int i = 0; i < 5; ++i)
            for (int j = i; j < 5; ++j) {
                VertexField f(n);
                for (std::size_t v = 0; v < n; ++v)
                    f[v] = g.vertices[v][i] * g.vertices[v][j] - (i == j ? 0.2 : 0.0);
                out.push_back(std::move(f));
            }
    } else {
        throw std::invalid_argument("harmonic_samples: degree must be 1 or 2");
    }
    return out;
}

double geodesic_distance(const std::array<double, 5>& a, const std::array<double, 5>& b) {
    double d = 0.0;
    for (int i = 0; i < 5; ++i) d += a[i] * b[i];
    return std::acos(std::clamp(d, -1.0, 1.0));
}

std::vector<double> distances_from(const SphereGeometry& g, std::size_t a) {
    std::vector<double> d(g.vertices.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = geodesic_distance(g.vertices[a], g.vertices[i]);
    return d;
}

std::size_t open_face_count(const SphereGeometry& g) {
    std::vector<std::array<std::int32_t, 4>> faces;
    faces.reserve(g.cells.size() * 5);
    for (const auto& c : g.cells)
        for (int skip = 0; skip < 5; ++skip) {
            std::array<std::int32_t, 4> f;
            int k = 0;
            for (int a = 0; a < 5; ++a)
                if (a != skip) f[k++] = c[a];
            std::sort(f.begin(), f.end());
            faces.push_back(f);
        }
    std::sort(faces.begin(), faces.end());
    std::size_t bad = 0;
    for (std::size_t i = 0; i < faces.size();) {
        std::size_t j = i;
        while (j < faces.size() && faces[j] == faces[i]) ++j;
        if (j - i != 2) ++bad;
        i = j;
    }
    return bad;
}

std::vector<std::pair<std::int32_t, std::int32_t>> mesh_edges(const SphereGeometry& g) {
    std::vector<std::uint64_t> keys;
    keys.reserve(g.cells.size() * 10);
    for (const auto& c : g.cells)
        for (int a = 0; a < 5; ++a)
            for (int b = a + 1; b < 5; ++b) {
                const auto lo = std::min(c[a], c[b]), hi = std::max(c[a], c[b]);
                keys.push_back((static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint32_t>(hi));
            }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    std::vector<std::pair<std::int32_t, std::int32_t>> out;
    out.reserve(keys.size());
    for (auto k : keys)
        out.emplace_back(static_cast<std::int32_t>(k >> 32), static_cast<std::int32_t>(k & 0xffffffffu));
    return out;
}

}  // namespace paneitz
