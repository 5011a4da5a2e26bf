// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 only when
// all ten pass. A JSON log with the measured values is written next to the
// binary (or to the path given as the first argument).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <iostream>
#include <random>
#include <sstream>

#include "paneitz/bubbles.hpp"
#include "paneitz/errors.hpp"
#include "paneitz/functionals.hpp"
#include "paneitz/geometry.hpp"
#include "paneitz/green.hpp"
#include "paneitz/io.hpp"
#include "paneitz/obstacle.hpp"
#include "paneitz/suite.hpp"

using namespace paneitz;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
    Json details = Json::object();
};

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

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

const PropertyRecord& find(const SuiteReport& r, const std::string& id) {
    for (const auto& p : r.properties)
        if (p.id == id) return p;
    throw std::runtime_error("missing property " + id);
}

// Criterion 1: idempotency.
Outcome idempotency() {
    const auto m = build_synthetic(50, 4 * kPi * kPi, 2024);
    std::mt19937_64 rng(1);
    const double mags[] = {0.1, 1.0, 10.0};
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) worst = std::max(worst, check_idempotent(m, random_hq(m, rng, mags[k % 3])));
    return {worst <= 1e-8, "max ||T^2 u - T u|| = " + fmt(worst) + " over 100 fields (tol 1e-8)",
            {{"max_defect", worst}}};
}

// Criterion 2: exhaustive oracle.
Outcome oracle() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> nd(3, 10);
    std::uniform_real_distribution<double> kd(0.5, 8.0);
    const double mags[] = {0.1, 1.0, 5.0};
    double worst = 0.0;
    int mismatched_sets = 0;
    for (int k = 0; k < 200; ++k) {
        const auto m = build_synthetic(nd(rng), kd(rng) * kPi * kPi, 5000 + k);
        const auto u = random_hq(m, rng, mags[k % 3]);
        const auto a = solve_obstacle(m, u);
        const auto b = brute_force_obstacle(m, u);
        worst = std::max(worst, max_diff(a.v, b.v));
        mismatched_sets += a.active != b.active;
    }
    return {worst <= 1e-9 && mismatched_sets == 0,
            "200 instances: max |T - T_oracle| = " + fmt(worst) + ", active-set mismatches " +
                std::to_string(mismatched_sets),
            {{"max_diff", worst}, {"active_set_mismatches", mismatched_sets}}};
}

// Criterion 3: monotonicity over the algebraic grid.
Outcome monotonicity() {
    const auto r = run_suite("algebraic", 7, {});
    Json d = report_to_json(r);
    bool ok = true;
    double worst = 0.0, worst_abs = 0.0;
    for (const auto* id : {"monotonicity.J_gap_dominates_energy_drop", "optimal_control.I_below_J_equal_on_range",
                           "optimal_control.I_gap_equals_energy_drop"}) {
        const auto& p = find(r, id);
        ok = ok && p.pass && p.max_violation <= 1e-8;
        worst = std::max(worst, p.max_violation);
        worst_abs = std::max(worst_abs, p.diagnostics.value("max_absolute_violation", 0.0));
    }
    return {ok,
            "max relative violation " + fmt(worst) + " (absolute " + fmt(worst_abs) +
                ") over 4 kappa x 3 t x 100 fields; full suite " + (r.all_pass ? "passes" : "has failures"),
            d};
}

struct Family {
    std::vector<DiscreteManifold> manifolds;
    std::vector<double> kappas;
};

Family subcritical_family(int count, std::uint64_t seed0) {
    Family f;
    for (int i = 0; i < count; ++i) {
        const double kappa = (1.0 + 6.5 * i / std::max(1, count - 1)) * kPi * kPi;
        f.kappas.push_back(kappa);
        f.manifolds.push_back(build_synthetic(40 + 2 * i, kappa, seed0 + i));
    }
    return f;
}

// Criteria 4 and 5 share minimizers.
std::pair<Outcome, Outcome> minimizers() {
    const auto fam = subcritical_family(10, 300);
    double el = 0, fp = 0, ij = 0, margin = 0, q_err = 0, kappa_err = 0;
    int failures = 0, probe_failures = 0;
    Json runs = Json::array();
    for (std::size_t i = 0; i < fam.manifolds.size(); ++i) {
        const auto& m = fam.manifolds[i];
        ICertificateOptions co;
        co.probes = 1000;
        co.seed = 40 + i;
        try {
            const auto r = minimize_I(m, {}, co);
            failures += !r.result.converged;
            el = std::max(el, r.result.el_residual);
            fp = std::max(fp, r.result.fixed_point_defect);
            ij = std::max(ij, r.certificate.i_minus_j);
            margin = std::min(margin, r.certificate.worst_probe_margin);
            probe_failures += r.certificate.probe_failures;
            const auto m2 = conformal_change(m, r.result.u_c);
            double qe = 0;
            for (std::size_t j = 0; j < m.n(); ++j) qe = std::max(qe, std::abs(m2.q()[j] - m.k()[j]));
            q_err = std::max(q_err, qe);
            kappa_err = std::max(kappa_err, std::abs(m2.kappa() - m.kappa()) / m.kappa());
            runs.push_back({{"kappa", fam.kappas[i]}, {"n", m.n()}, {"iterations", r.result.iterations},
                            {"el_residual", r.result.el_residual}, {"fixed_point_defect", r.result.fixed_point_defect},
                            {"i_minus_j", r.certificate.i_minus_j}, {"worst_probe_margin", r.certificate.worst_probe_margin},
                            {"Q_minus_K", qe}});
        } catch (const Error& e) {
            ++failures;
            runs.push_back({{"kappa", fam.kappas[i]}, {"error", e.what()}});
        }
    }
    Outcome c4{failures == 0 && el <= 1e-7 && fp <= 1e-7 && ij <= 1e-8 && margin >= -1e-8 && probe_failures == 0,
               "10 manifolds: el " + fmt(el) + ", fixed point " + fmt(fp) + ", |I-J| " + fmt(ij) +
                   ", worst probe margin " + fmt(margin) + " (1000 probes each)",
               {{"runs", runs}}};
    Outcome c5{failures == 0 && q_err <= 1e-6 && kappa_err <= 1e-8,
               "max |Q' - K| = " + fmt(q_err) + ", kappa drift " + fmt(kappa_err),
               {{"max_Q_minus_K", q_err}, {"kappa_relative_drift", kappa_err}}};
    return {c4, c5};
}

// Criterion 6: sphere geometry.
Outcome sphere_geometry() {
    Json levels = Json::array();
    double vol2 = 0, lap[3]{}, pan[3]{};
    for (int level : {1, 2}) {
        const auto m = build_sphere(level);
        const auto l = pencil_eigenvalues(m.sphere()->stiffness, m.w(), 2);
        const auto p = pencil_eigenvalues(m.form(), m.w(), 2);
        lap[level] = l[1];
        pan[level] = p[1];
        if (level == 2) vol2 = m.volume();
        levels.push_back({{"level", level}, {"n", m.n()}, {"volume", m.volume()}, {"laplace", l[1]}, {"paneitz", p[1]},
                          {"open_faces", open_face_count(*m.sphere())}});
    }
    const double vref = kCriticalKappa / 3.0;
    const bool ok = std::abs(vol2 - vref) <= 0.05 * vref && std::abs(lap[2] - 4) <= 0.2 &&
                    std::abs(pan[2] - 24) <= 2.4 && std::abs(lap[2] - 4) < std::abs(lap[1] - 4) &&
                    std::abs(pan[2] - 24) < std::abs(pan[1] - 24);
    return {ok,
            "subdiv 2: volume " + fmt(vol2) + " (ref " + fmt(vref) + "), Laplace " + fmt(lap[1]) + " -> " +
                fmt(lap[2]) + ", Paneitz " + fmt(pan[1]) + " -> " + fmt(pan[2]),
            {{"levels", levels}}};
}

// Criterion 7: sharp inequalities on subdiv 2.
Outcome sharp() {
    const auto r = run_suite("sphere", 7, {});
    const auto& eq = find(r, "onofri.bubble_equality");
    const auto& gap = find(r, "onofri.obstacle_inequality");
    const auto& fp = find(r, "onofri.bubble_fixed_point");
    const bool ok = eq.pass && gap.pass && fp.pass && gap.trials == 200;
    return {ok,
            "bubble excess " + fmt(eq.max_violation) + " <= kappa h^2 = " + fmt(eq.tolerance) + ", min obstacle gap " +
                fmt(gap.diagnostics.value("min_gap", 0.0)) + " over " + std::to_string(gap.trials) +
                " fields, ||T w - w|| = " + fmt(fp.max_violation) + " <= h^2 = " + fmt(fp.tolerance),
            report_to_json(r)};
}

// Criterion 8: continuation on subdiv 1.
Outcome continuation() {
    const auto m = build_sphere(1);
    const auto trace = continuation_minimize(m, {});
    const double tol = mesh_tolerance(m);
    bool all = trace.steps.size() == 12;
    for (const auto& s : trace.steps) all = all && s.result.converged;
    const double last = trace.steps.empty() ? INFINITY : std::abs(trace.steps.back().deficit);
    const bool ok = all && !trace.bubbling_suspected && trace.converged_smoothly && last <= tol;
    double hmin = INFINITY;
    for (const auto& s : trace.steps)
        if (std::isfinite(s.hessian_min)) hmin = std::min(hmin, s.hessian_min);
    return {ok,
            std::to_string(trace.steps.size()) + " steps, status '" + trace.status + "', final |deficit| " +
                fmt(last) + " <= " + fmt(tol) + ", min Hessian eigenvalue " + fmt(hmin),
            to_json(trace)};
}

// Criterion 9: Green's function and F_K. Evaluated on subdiv 3; the subdiv-2
// values are logged to show the anchor spread shrinking under refinement.
struct GreenStats {
    double residual = 0, variance = 0, spread = 0, mean = 0, tol = 0;
    std::vector<std::size_t> anchors;
    std::vector<double> F;
};

GreenStats green_stats(const DiscreteManifold& m) {
    GreenStats s;
    s.tol = mesh_tolerance(m);
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::size_t> pick(0, m.n() - 1);
    s.anchors = {0, 5};
    while (s.anchors.size() < 12) s.anchors.push_back(pick(rng));
    for (auto a : s.anchors) {
        auto gd = green_at(m, a, 0.5);
        s.residual = std::max(s.residual, gd.residual);
        s.variance = std::max(s.variance, shell_symmetry(m, gd).max_variance);
        s.F.push_back(gd.F_K_a);
    }
    for (double f : s.F) s.mean += f;
    s.mean /= s.F.size();
    for (double f : s.F) s.spread = std::max(s.spread, std::abs(f - s.mean) / std::abs(s.mean));
    return s;
}

Outcome green() {
    const auto coarse = green_stats(build_sphere(2));
    const auto m = build_sphere(3);
    const auto s = green_stats(m);

    const double c = 2.5;
    auto g1 = green_at(m, s.anchors[1], 0.5);
    auto g2 = green_at(m.with_prescription(std::vector<double>(m.n(), c)), s.anchors[1], 0.5);
    const double shift = std::abs((g2.F_K_a - g1.F_K_a) - std::log(c));
    const bool ok = s.residual <= 1e-8 && s.variance <= s.tol && s.spread <= 0.02 && shift <= 1e-10;
    return {ok,
            "subdiv 3: residual " + fmt(s.residual) + ", shell variance " + fmt(s.variance) + " <= " + fmt(s.tol) +
                ", F_K spread " + fmt(100 * s.spread) + "% over 12 anchors (subdiv 2: " + fmt(100 * coarse.spread) +
                "%), shift-law error " + fmt(shift),
            {{"anchors", s.anchors}, {"F_K", s.F}, {"mean_F_K", s.mean}, {"mesh_tolerance", s.tol},
             {"subdiv2", {{"F_K", coarse.F}, {"spread", coarse.spread}, {"shell_variance", coarse.variance}}}}};
}

// Criterion 10: compactness analogue.
Outcome compactness() {
    const auto fam = subcritical_family(20, 900);
    std::vector<double> sups;
    int failures = 0;
    std::mt19937_64 rng(10);
    for (const auto& m : fam.manifolds) {
        for (int s = 0; s < 3; ++s) {
            std::optional<VertexField> start;
            if (s > 0) start = random_hq(m, rng, s == 1 ? 0.5 : 3.0);
            try {
                const auto r = start ? minimize_J_t(m, 1.0, std::span<const double>(*start)) : minimize_J_t(m, 1.0);
                failures += !r.converged;
                double sup = 0;
                for (double x : r.u_c) sup = std::max(sup, std::abs(x));
                sups.push_back(sup);
            } catch (const Error&) {
                ++failures;
            }
        }
    }
    const double bound = sups.empty() ? INFINITY : *std::max_element(sups.begin(), sups.end());
    return {failures == 0 && sups.size() == 60 && std::isfinite(bound),
            "60 runs, " + std::to_string(failures) + " failures, sup ||u_c|| = " + fmt(bound),
            {{"sup_norms", sups}, {"bound", bound}}};
}

}  // namespace

// Usage: acceptance [--known-failure N]... [log.json]
// Exit 0 iff the failing criteria are exactly the declared known failures, so
// a documented failure keeps reporting FAIL without masking regressions.
int main(int argc, char** argv) {
    std::string log_path = "acceptance_log.json";
    std::set<int> known;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--known-failure" && i + 1 < argc)
            known.insert(std::atoi(argv[++i]));
        else
            log_path = a;
    }
    Json log = Json::object();
    int failed = 0;
    std::set<int> failing;
    auto run = [&](int id, double limit_s, const std::function<Outcome()>& f) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o.pass = false;
            o.summary = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (limit_s > 0 && secs > limit_s) {
            o.pass = false;
            o.summary += " [runtime " + fmt(secs) + " s exceeds " + fmt(limit_s) + " s]";
        }
        failed += !o.pass;
        if (!o.pass) failing.insert(id);
        std::printf("%s criterion %d: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, o.summary.c_str(), secs);
        std::fflush(stdout);
        log[std::to_string(id)] = {{"pass", o.pass}, {"summary", o.summary}, {"seconds", secs}, {"details", o.details}};
    };

    run(1, 60, idempotency);
    run(2, 120, oracle);
    run(3, 0, monotonicity);
    std::pair<Outcome, Outcome> mins;
    run(4, 0, [&] {
        mins = minimizers();
        return mins.first;
    });
    run(5, 0, [&] { return mins.second; });
    run(6, 600, sphere_geometry);
    run(7, 0, sharp);
    run(8, 900, continuation);
    run(9, 0, green);
    run(10, 0, compactness);

    try {
        write_json(log_path, log);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "could not write %s: %s\n", log_path.c_str(), e.what());
    }
    std::printf("%d of 10 criteria pass\n", 10 - failed);
    if (!known.empty()) {
        std::printf("declared known failures:");
        for (int k : known) std::printf(" %d", k);
        std::printf(" -> %s\n", failing == known ? "matches" : "MISMATCH");
    }
    return failing == known ? 0 : 1;
}
