#include "paneitz/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "paneitz/bubbles.hpp"
#include "paneitz/errors.hpp"
#include "paneitz/functionals.hpp"
#include "paneitz/geometry.hpp"
#include "paneitz/obstacle.hpp"
#include "paneitz/simd/kernels.hpp"

namespace paneitz {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Per-property stream so results do not depend on evaluation order.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    return std::mt19937_64(seq);
}

VertexField random_field(const DiscreteManifold& m, std::mt19937_64& rng, double magnitude) {
    std::normal_distribution<double> g;
    VertexField u(m.n());
    for (auto& x : u) x = magnitude * g(rng);
    return project_hq(m, u);
}

double max_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// Accumulates one property; solver exceptions turn into failures.
struct Tracker {
    PropertyRecord rec;
    Clock::time_point start = Clock::now();

    Tracker(std::string id, std::string description, double tol) {
        rec.id = std::move(id);
        rec.description = std::move(description);
        rec.tolerance = tol;
    }
    double max_absolute = 0.0;
    bool relative = false;

    void add(double violation) {
        ++rec.trials;
        if (std::isnan(violation)) violation = std::numeric_limits<double>::infinity();
        rec.max_violation = std::max(rec.max_violation, violation);
    }
    // Relative violation with its unnormalized value kept for the log.
    void add(double violation, double absolute) {
        add(violation);
        relative = true;
        max_absolute = std::max(max_absolute, std::isnan(absolute) ? std::numeric_limits<double>::infinity() : absolute);
    }
    void error(const std::exception& e) {
        rec.solver_error = true;
        if (!rec.diagnostics.contains("errors")) rec.diagnostics["errors"] = json::array();
        if (rec.diagnostics["errors"].size() < 5) rec.diagnostics["errors"].push_back(e.what());
    }
    PropertyRecord finish() {
        rec.pass = !rec.solver_error && rec.max_violation <= rec.tolerance;
        if (relative) rec.diagnostics["max_absolute_violation"] = max_absolute;
        rec.diagnostics["seconds"] = seconds_since(start);
        return rec;
    }
};

template <class F>
void guarded(Tracker& tr, F&& f) {
    try {
        f();
    } catch (const Error& e) {
        tr.error(e);
    } catch (const std::invalid_argument& e) {
        tr.error(e);
    }
}

struct Manifolds {
    std::vector<DiscreteManifold> items;
    json provenance = json::array();
};

Manifolds synthetic_family(std::uint64_t seed, const SuiteOptions& o) {
    Manifolds out;
    std::vector<double> kappas = o.kappas;
    if (kappas.empty()) kappas = {2 * kPi * kPi, 4 * kPi * kPi, 6 * kPi * kPi, 8 * kPi * kPi};
    for (std::size_t k = 0; k < kappas.size(); ++k) {
        const std::uint64_t s = seed * 1000 + k;
        out.items.push_back(build_synthetic(o.n, kappas[k], s));
        out.provenance.push_back({{"backend", "synthetic"}, {"n", o.n}, {"seed", s}, {"kappa", kappas[k]}});
    }
    return out;
}

// One random-field sweep shared by the field-level algebraic properties.
struct FieldSample {
    double energy_u, energy_tu;   // <u,u>, <Tu,Tu>
    double J_u, J_tu, I_u, I_tu;  // I(Tu) uses a second obstacle solve
    double log_u, log_tu;         // log sum K w e^{4u}, e^{4Tu}
    double idempotency;           // ||T T u - T u||
    double kkt;                   // scaled KKT residual of T u
    double minimality;            // worst (<Tu,Tu> - <z,z>) over feasible z
    double range_fixed;           // ||T v - v|| for v = T z (J(v) = J(T v) case)
    double range_gap;             // |J(v) - J(T v)| for v = T z
};

FieldSample sample_field(const DiscreteManifold& m, std::span<const double> u, double t,
                         std::mt19937_64& rng, double magnitude, const ObstacleOptions& oo) {
    FieldSample s{};
    const double tk = t * m.kappa();
    const auto sol = solve_obstacle(m, u, oo);
    const auto& tu = sol.v;
    const auto sol2 = solve_obstacle(m, tu, oo);
    s.energy_u = inner(m, u, u);
    s.energy_tu = inner(m, tu, tu);
    s.log_u = log_exp4_sum(m.kw(), u);
    s.log_tu = log_exp4_sum(m.kw(), tu);
    s.J_u = J_t(m, u, t);
    s.J_tu = J_t(m, tu, t);
    s.I_u = s.energy_u - tk * s.log_tu;
    s.I_tu = s.energy_tu - tk * log_exp4_sum(m.kw(), sol2.v);
    s.idempotency = max_diff(sol2.v, tu);

    double scale = 1.0;
    for (std::size_t i = 0; i < m.n(); ++i) scale = std::max(scale, std::abs(sol.lambda[i]));
    s.kkt = std::max({sol.kkt_residual / scale, sol.feasibility, sol.complementarity / scale,
                      std::max(0.0, -sol.min_lambda) / scale, sol.constraint / (1.0 + scale)});
    s.minimality = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
        const auto z = sample_feasible(m, u, rng, magnitude * (k % 2 ? 1.0 : 0.1));
        s.minimality = std::max(s.minimality, s.energy_tu - inner(m, z, z));
    }

    // A point on the range of T: equal J forces the fixed point.
    const auto z = sample_feasible(m, u, rng, magnitude);
    const auto v = solve_obstacle(m, z, oo).v;
    const auto tv = solve_obstacle(m, v, oo).v;
    s.range_gap = std::abs(J_t(m, v, t) - J_t(m, tv, t));
    s.range_fixed = max_diff(v, tv);
    return s;
}

// Property bodies per id, evaluated over the synthetic grid.
std::vector<PropertyRecord> algebraic(std::uint64_t seed, const SuiteOptions& o, json& provenance) {
    const auto tol = o.tol;
    const double sc = tol.scale;
    const auto& ids = algebraic_property_ids();
    std::vector<Tracker> tr;
    tr.emplace_back(ids[0], "T(u) is the unique KKT point; no feasible z has smaller energy", tol.obstacle * sc);
    tr.emplace_back(ids[1], "T(T(u)) = T(u)", tol.obstacle * sc);
    tr.emplace_back(ids[2], "J(u) - J(Tu) >= <u,u> - <Tu,Tu> >= 0", tol.identity * sc);
    tr.emplace_back(ids[3], "J(Tu) <= J(u); J(v) = J(Tv) forces v = Tv", tol.identity * sc);
    tr.emplace_back(ids[4], "minimizers of J are fixed points of T", tol.fixed_point * sc);
    tr.emplace_back(ids[5], "I <= J and J(Tu) = I(Tu)", tol.identity * sc);
    tr.emplace_back(ids[6], "I(u) - I(Tu) = <u,u> - <Tu,Tu>", tol.identity * sc);
    tr.emplace_back(ids[7], "minimizers of I are fixed points of T", tol.fixed_point * sc);
    tr.emplace_back(ids[8], "J and I share minimizers: I = J at u_min and no probe beats I(u_min)",
                    tol.same_value * sc);

    const auto fam = synthetic_family(seed, o);
    provenance = fam.provenance;
    ObstacleOptions oo;
    double worst_sup = 0.0;

    for (std::size_t k = 0; k < fam.items.size(); ++k) {
        const auto& m = fam.items[k];
        for (std::size_t ti = 0; ti < o.ts.size(); ++ti) {
            const double t = o.ts[ti];
            auto rng = stream(seed, 1 + k, ti);
            for (int f = 0; f < o.fields; ++f) {
                const double mag = o.magnitudes[f % o.magnitudes.size()];
                const auto u = random_field(m, rng, mag);
                FieldSample s;
                bool ok = true;
                try {
                    s = sample_field(m, u, t, rng, mag, oo);
                } catch (const Error& e) {
                    for (std::size_t p = 0; p < 4; ++p) tr[p].error(e);
                    tr[5].error(e);
                    tr[6].error(e);
                    ok = false;
                }
                if (!ok) continue;
                const double rel = 1.0 + s.energy_u;
                tr[0].add(std::max(s.kkt, std::max(0.0, s.minimality) / rel));
                tr[1].add(s.idempotency);
                const double drop = s.energy_u - s.energy_tu;
                const double chain = std::max({0.0, drop - (s.J_u - s.J_tu), -drop});
                tr[2].add(chain / rel, chain);
                // Equality case: the gap is at rounding level only when v is a fixed point.
                const double rigidity = s.range_gap <= tol.identity * sc * rel ? s.range_fixed : 0.0;
                tr[3].add(std::max(std::max(0.0, s.J_tu - s.J_u) / rel, rigidity));
                const double below = std::max(std::max(0.0, s.I_u - s.J_u), std::abs(s.J_tu - s.I_tu));
                tr[5].add(below / rel, below);
                const double eq = std::abs((s.I_u - s.I_tu) - drop);
                tr[6].add(eq / rel, eq);
            }

            // Minimizer properties: one minimization per (kappa, t).
            MinimizeOptions mo;
            ICertificateOptions co;
            co.t = t;
            co.probes = o.probes;
            co.seed = seed * 7919 + k * 31 + ti;
            co.magnitudes = o.magnitudes;
            mo.tol = tol.el * sc * 1e-2;
            try {
                const auto res = minimize_J_t(m, t, std::nullopt, mo);
                if (!res.converged) throw SolverError("minimizer did not converge: " + res.message, res.u_min, res.iterations);
                tr[4].add(std::max(res.fixed_point_defect, res.el_residual > tol.el * sc ? res.el_residual : 0.0));
                worst_sup = std::max(worst_sup, simd::max_abs(res.u_c));
            } catch (const Error& e) {
                tr[4].error(e);
            }
            try {
                mo.obstacle = oo;
                IMinimizeResult ir;
                try {
                    ir = minimize_I(m, mo, co);
                } catch (const CertificateError& e) {
                    tr[7].error(e);
                    tr[8].error(e);
                    continue;
                }
                tr[7].add(ir.certificate.fixed_point_defect);
                tr[8].add(std::max(ir.certificate.i_minus_j, std::max(0.0, -ir.certificate.worst_probe_margin)));
                tr[8].rec.diagnostics["probes"] = tr[8].rec.diagnostics.value("probes", 0) + ir.certificate.probes;
                if (ir.certificate.probe_failures > 0)
                    tr[8].rec.diagnostics["probe_failures"] =
                        tr[8].rec.diagnostics.value("probe_failures", 0) + ir.certificate.probe_failures;
            } catch (const Error& e) {
                tr[7].error(e);
                tr[8].error(e);
            }
        }
    }
    tr[4].rec.diagnostics["max_abs_u_c"] = worst_sup;
    std::vector<PropertyRecord> out;
    for (auto& x : tr) out.push_back(x.finish());
    return out;
}

std::vector<PropertyRecord> sphere(std::uint64_t seed, const SuiteOptions& o, json& provenance) {
    const auto tol = o.tol;
    const double sc = tol.scale;
    const auto& ids = sphere_property_ids();
    const auto m = build_sphere(o.subdiv);
    const double h = m.sphere()->mean_edge;
    const double mesh_tol = mesh_tolerance(m);
    provenance = json::array({{{"backend", "sphere"}, {"subdiv", o.subdiv}, {"n", m.n()}, {"kappa", m.kappa()},
                               {"volume", m.volume()}, {"mean_edge", h}}});

    Tracker mt(ids[0], "log sum w e^{4Tu} - <u,u>/kappa is bounded; T raises the exponential term and lowers energy",
               tol.identity * sc);
    Tracker gap(ids[1], "<u,u>/kappa - log(sum w e^{4Tu}/Vol) >= -tol", tol.onofri_gap * sc);
    Tracker eq(ids[2], "bubble deficit J(w) - J(0) <= |residual pairing| + kappa h^2", mesh_tol * sc);
    Tracker fp(ids[3], "Q-normalized bubbles are fixed points of T", h * h * sc);
    Tracker tr(ids[4], "J(w) = J(v) for bubble v and w = v - Q-mean(v)", tol.identity * sc);

    auto rng = stream(seed, 101);
    double sup_const = -std::numeric_limits<double>::infinity();
    double min_gap = std::numeric_limits<double>::infinity();
    for (int f = 0; f < o.sphere_fields; ++f) {
        const double mag = o.magnitudes[f % o.magnitudes.size()];
        const auto u = random_field(m, rng, mag);
        guarded(mt, [&] {
            const auto tu = solve_obstacle(m, u).v;
            const double e_u = inner(m, u, u), e_tu = inner(m, tu, tu);
            const double lu = log_exp4_sum(m.w(), u), ltu = log_exp4_sum(m.w(), tu);
            sup_const = std::max(sup_const, ltu - e_u / m.kappa());
            mt.add(std::max({0.0, lu - ltu, e_tu - e_u}) / (1.0 + e_u));
        });
        guarded(gap, [&] {
            const auto r = onofri_gap(m, u);
            min_gap = std::min(min_gap, r.obstacle_gap);
            gap.add(std::max(0.0, -r.obstacle_gap));
        });
    }
    mt.rec.diagnostics["constant_estimate"] = sup_const;
    mt.rec.diagnostics["log_volume"] = std::log(m.volume());
    gap.rec.diagnostics["min_gap"] = min_gap;

    const std::array<std::array<double, 5>, 2> centers{{{1, 0, 0, 0, 0}, {0, 0, 0, 0.6, 0.8}}};
    json bubbles = json::array();
    for (double t : o.bubble_scales) {
        for (const auto& c : centers) {
            guarded(eq, [&] {
                const auto b = make_bubble(m, c, t);
                const auto r = onofri_gap(m, b.w);
                const auto rv = onofri_gap(m, b.v);
                eq.add(std::max(0.0, r.deficit - std::abs(b.residual_pairing)));
                fp.add(r.projection_defect);
                tr.add(std::abs(r.J - rv.J) / (1.0 + std::abs(r.J)));
                bubbles.push_back({{"t", t}, {"center", c}, {"deficit", r.deficit},
                                   {"residual_pairing", b.residual_pairing}, {"pde_residual", b.pde_residual},
                                   {"obstacle_gap", r.obstacle_gap}, {"projection_defect", r.projection_defect}});
            });
        }
    }
    eq.rec.diagnostics["bubbles"] = bubbles;
    eq.rec.diagnostics["mesh_tolerance"] = mesh_tol;
    fp.rec.diagnostics["h_squared"] = h * h;
    return {mt.finish(), gap.finish(), eq.finish(), fp.finish(), tr.finish()};
}

std::vector<PropertyRecord> continuation(std::uint64_t, const SuiteOptions& o, json& provenance) {
    const auto tol = o.tol;
    const double sc = tol.scale;
    const auto& ids = continuation_property_ids();
    const auto m = build_sphere(o.continuation_subdiv);
    const double mesh_tol = mesh_tolerance(m);
    provenance = json::array({{{"backend", "sphere"}, {"subdiv", o.continuation_subdiv}, {"n", m.n()},
                               {"kappa", m.kappa()}}});
    Tracker done(ids[0], "every step of the schedule converges", tol.el * sc);
    Tracker fixed(ids[1], "each step minimizer is a fixed point of T", tol.fixed_point * sc);
    Tracker stable(ids[2], "final |min J_l - J_l(0)| within kappa h^2 and drifts settle", mesh_tol * sc);
    Tracker bubble(ids[3], "no bubbling flag along the schedule", 0.0);
    ContinuationOptions co;
    co.steps = o.continuation_steps;
    try {
        const auto trace = continuation_minimize(m, co);
        json steps = json::array();
        for (const auto& s : trace.steps) {
            done.add(s.result.converged ? s.result.el_residual : std::numeric_limits<double>::infinity());
            fixed.add(s.result.fixed_point_defect);
            steps.push_back({{"t", s.t}, {"deficit", s.deficit}, {"monitor", s.monitor}, {"drift", s.drift},
                             {"hessian_min", std::isfinite(s.hessian_min) ? json(s.hessian_min) : json(nullptr)}});
        }
        const double last = trace.steps.empty() ? std::numeric_limits<double>::infinity()
                                                : std::abs(trace.steps.back().deficit);
        stable.add(trace.converged_smoothly ? last : std::numeric_limits<double>::infinity());
        bubble.add(trace.bubbling_suspected ? 1.0 : 0.0);
        done.rec.diagnostics["steps"] = steps;
        done.rec.diagnostics["status"] = trace.status;
    } catch (const Error& e) {
        done.error(e);
        fixed.error(e);
        stable.error(e);
        bubble.error(e);
    }
    stable.rec.diagnostics["mesh_tolerance"] = mesh_tol;
    return {done.finish(), fixed.finish(), stable.finish(), bubble.finish()};
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

const std::vector<std::string>& algebraic_property_ids() {
    static const std::vector<std::string> ids{
        "obstacle.uniqueness",
        "obstacle.idempotent",
        "monotonicity.J_gap_dominates_energy_drop",
        "rigidity.J_decreases_and_equality_forces_fixed_point",
        "minimizer.J_fixed_point",
        "optimal_control.I_below_J_equal_on_range",
        "optimal_control.I_gap_equals_energy_drop",
        "minimizer.I_fixed_point",
        "minimizer.same_minimizers",
    };
    return ids;
}

const std::vector<std::string>& sphere_property_ids() {
    static const std::vector<std::string> ids{
        "obstacle.moser_trudinger",
        "onofri.obstacle_inequality",
        "onofri.bubble_equality",
        "onofri.bubble_fixed_point",
        "onofri.translation_identity",
    };
    return ids;
}

const std::vector<std::string>& continuation_property_ids() {
    static const std::vector<std::string> ids{
        "continuation.steps_converge",
        "continuation.fixed_points",
        "continuation.stable_minima",
        "continuation.no_bubbling",
    };
    return ids;
}

double tolerance_scale_from_env(double fallback) {
    const char* v = std::getenv("PANEITZ_TOL_OVERRIDE");
    if (!v || !*v) return fallback;
    char* end = nullptr;
    const double x = std::strtod(v, &end);
    if (end == v || *end != '\0' || !(x > 0.0) || !std::isfinite(x))
        throw std::invalid_argument(std::string("PANEITZ_TOL_OVERRIDE must be a positive number, got '") + v + "'");
    return x;
}

SuiteReport run_suite(const std::string& suite, std::uint64_t seed, const SuiteOptions& opts_in) {
    SuiteOptions opts = opts_in;
    opts.tol.scale = tolerance_scale_from_env(opts.tol.scale);
    if (opts.magnitudes.empty()) throw std::invalid_argument("at least one field magnitude is needed");
    SuiteReport r;
    r.suite = suite;
    r.seed = seed;
    const auto t0 = Clock::now();
    json prov;
    if (suite == "algebraic")
        r.properties = algebraic(seed, opts, prov);
    else if (suite == "sphere")
        r.properties = sphere(seed, opts, prov);
    else if (suite == "continuation")
        r.properties = continuation(seed, opts, prov);
    else
        throw std::invalid_argument("unknown suite '" + suite + "' (algebraic, sphere, continuation)");
    r.provenance = {{"manifolds", prov}, {"tolerance_scale", opts.tol.scale}};
    json per = json::object();
    for (auto& p : r.properties) {
        per[p.id] = p.diagnostics["seconds"];
        p.diagnostics.erase("seconds");
        r.solver_errors += p.solver_error ? 1 : 0;
    }
    r.timing = {{"total_seconds", seconds_since(t0)}, {"per_property_seconds", per}};
    r.all_pass = std::all_of(r.properties.begin(), r.properties.end(), [](const auto& p) { return p.pass; });
    return r;
}

json report_to_json(const SuiteReport& r) {
    json props = json::array();
    for (const auto& p : r.properties) {
        props.push_back({{"id", p.id},
                         {"description", p.description},
                         {"trials", p.trials},
                         {"max_violation", std::isfinite(p.max_violation) ? json(p.max_violation) : json("inf")},
                         {"tolerance", p.tolerance},
                         {"pass", p.pass},
                         {"solver_error", p.solver_error},
                         {"diagnostics", p.diagnostics}});
    }
    return {{"suite", r.suite},     {"seed", r.seed},         {"provenance", r.provenance}, {"timing", r.timing},
            {"properties", props}, {"all_pass", r.all_pass}, {"solver_errors", r.solver_errors}};
}

SuiteReport report_from_json(const json& j) {
    SuiteReport r;
    r.suite = j.at("suite").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.provenance = j.at("provenance");
    r.timing = j.at("timing");
    r.all_pass = j.at("all_pass").get<bool>();
    r.solver_errors = j.at("solver_errors").get<int>();
    for (const auto& p : j.at("properties")) {
        PropertyRecord q;
        q.id = p.at("id").get<std::string>();
        q.description = p.at("description").get<std::string>();
        q.trials = p.at("trials").get<int>();
        const auto& mv = p.at("max_violation");
        q.max_violation = mv.is_string() ? std::numeric_limits<double>::infinity() : mv.get<double>();
        q.tolerance = p.at("tolerance").get<double>();
        q.pass = p.at("pass").get<bool>();
        q.solver_error = p.at("solver_error").get<bool>();
        q.diagnostics = p.at("diagnostics");
        r.properties.push_back(std::move(q));
    }
    return r;
}

std::string report_to_csv(const SuiteReport& r) {
    std::ostringstream os;
    os << std::setprecision(17) << "suite,seed,id,trials,max_violation,tolerance,pass,solver_error\n";
    for (const auto& p : r.properties)
        os << r.suite << ',' << r.seed << ',' << csv_escape(p.id) << ',' << p.trials << ',' << p.max_violation
           << ',' << p.tolerance << ',' << (p.pass ? "true" : "false") << ',' << (p.solver_error ? "true" : "false")
           << '\n';
    return os.str();
}

std::string report_to_markdown(const SuiteReport& r) {
    std::ostringstream os;
    os << "# Suite `" << r.suite << "` (seed " << r.seed << ")\n\n";
    os << "| property | trials | max violation | tolerance | result |\n|---|---|---|---|---|\n";
    os << std::setprecision(3) << std::scientific;
    for (const auto& p : r.properties)
        os << "| " << p.id << " | " << p.trials << " | " << p.max_violation << " | " << p.tolerance << " | "
           << (p.solver_error ? "ERROR" : p.pass ? "pass" : "FAIL") << " |\n";
    os << "\n" << (r.all_pass ? "All properties pass." : "Some properties fail.") << "\n";
    return os.str();
}

void emit_report(const SuiteReport& r, const std::string& format, const std::filesystem::path& path) {
    std::string text;
    if (format == "json")
        text = report_to_json(r).dump(2) + "\n";
    else if (format == "csv")
        text = report_to_csv(r);
    else if (format == "md")
        text = report_to_markdown(r);
    else
        throw std::invalid_argument("report format must be json, csv or md");
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << text;
    if (!os) throw Error("write failed for " + path.string());
}

int exit_code(const SuiteReport& r) {
    if (r.solver_errors > 0) return 2;
    return r.all_pass ? 0 : 1;
}

}  // namespace paneitz
