// Command-line front end. Exit codes: 0 success, 1 property or input failure,
// 2 solver error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "paneitz/bubbles.hpp"
#include "paneitz/errors.hpp"
#include "paneitz/functionals.hpp"
#include "paneitz/geometry.hpp"
#include "paneitz/green.hpp"
#include "paneitz/io.hpp"
#include "paneitz/obstacle.hpp"
#include "paneitz/simd/kernels.hpp"
#include "paneitz/suite.hpp"

using namespace paneitz;

namespace {

void emit(const Json& j, const std::string& out) {
    if (out.empty() || out == "-")
        std::cout << j.dump(2) << '\n';
    else
        write_json(out, j);
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad number '" + item + "' in list");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete Paneitz obstacle problem and Q-curvature toolkit"};
    app.require_subcommand(1);

    // build
    std::string backend = "synthetic", out;
    int subdiv = 1, res = 8;
    std::size_t n = 50;
    double kappa = 4 * kPi * kPi;
    std::uint64_t seed = 1;
    auto* build = app.add_subcommand("build", "Construct a manifold");
    build->add_option("--backend", backend)->check(CLI::IsMember({"sphere", "torus", "synthetic"}));
    build->add_option("--subdiv", subdiv, "sphere refinement level")->check(CLI::Range(0, 4));
    build->add_option("--res", res, "torus points per axis")->check(CLI::Range(2, 64));
    build->add_option("--n", n, "synthetic vertex count")->check(CLI::Range(3, 100000));
    build->add_option("--kappa", kappa, "synthetic total Q-curvature");
    build->add_option("--seed", seed);
    build->add_option("--out", out)->required();

    std::string manifold;
    auto* validate_cmd = app.add_subcommand("validate", "Check the standing hypotheses on B");
    validate_cmd->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--out", out);

    // project
    std::string input;
    double tol = 1e-10;
    auto* project = app.add_subcommand("project", "Solve the obstacle problem T(u)");
    project->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    project->add_option("--input", input, "vertex field CSV")->required()->check(CLI::ExistingFile);
    project->add_option("--tol", tol);
    project->add_option("--out", out);

    // minimize
    std::string functional = "J";
    double t = 1.0, mtol = 1e-8;
    int probes = 1000;
    auto* minimize = app.add_subcommand("minimize", "Minimize J_t or I_t on H^2_Q");
    minimize->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    minimize->add_option("--functional", functional)->check(CLI::IsMember({"J", "I"}));
    minimize->add_option("--t", t);
    minimize->add_option("--tol", mtol);
    minimize->add_option("--probes", probes, "I-minimality probes");
    minimize->add_option("--seed", seed);
    minimize->add_option("--out", out);
    std::string u_out;
    minimize->add_option("--u-out", u_out, "write u_c as CSV");

    // continuation
    int steps = 12;
    double rho = 0.6, eps0 = 0.5;
    auto* cont = app.add_subcommand("continuation", "Minimize J_{1-eps} along an eps schedule");
    cont->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    cont->add_option("--steps", steps)->check(CLI::Range(1, 200));
    cont->add_option("--rho", rho);
    cont->add_option("--eps0", eps0);
    cont->add_option("--out", out);

    // conformal
    std::string ufile;
    auto* conf = app.add_subcommand("conformal", "Apply the conformal change e^{2u} g");
    conf->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    conf->add_option("--u", ufile)->required()->check(CLI::ExistingFile);
    conf->add_option("--out", out)->required();

    // green
    std::size_t anchor = 0;
    double delta = 0.5;
    bool strict = false;
    auto* green = app.add_subcommand("green", "Green's function and F_K at one anchor");
    green->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    green->add_option("--anchor", anchor);
    green->add_option("--delta", delta);
    green->add_flag("--strict", strict, "reject kappa != 8 pi^2");
    green->add_option("--out", out);

    auto* fk = app.add_subcommand("fk-scan", "F_K and L_K at every vertex with critical types");
    fk->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    fk->add_option("--delta", delta);
    fk->add_option("--out", out)->required();

    // bubble
    std::string center = "1,0,0,0,0";
    auto* bubble = app.add_subcommand("bubble", "Standard bubble and its Onofri deficit");
    bubble->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    bubble->add_option("--center", center);
    bubble->add_option("--t", t);
    bubble->add_option("--out", out);
    bubble->add_option("--u-out", u_out, "write the Q-normalized bubble as CSV");

    std::string t_grid = "0.25,0.5,1,2,4";
    auto* sweep = app.add_subcommand("onofri-sweep", "Onofri deficits over bubble scales");
    sweep->add_option("--manifold", manifold)->required()->check(CLI::ExistingFile);
    sweep->add_option("--t-grid", t_grid);
    sweep->add_option("--center", center);
    sweep->add_option("--out", out)->required();

    // suite
    std::string suite_name = "algebraic", format;
    SuiteOptions so;
    std::uint64_t suite_seed = 7;
    auto* suite = app.add_subcommand("suite", "Run a seeded property suite");
    suite->add_option("--name", suite_name)->check(CLI::IsMember({"algebraic", "sphere", "continuation"}));
    suite->add_option("--seed", suite_seed);
    suite->add_option("--n", so.n, "synthetic vertex count");
    suite->add_option("--fields", so.fields, "random fields per grid point");
    suite->add_option("--probes", so.probes);
    suite->add_option("--subdiv", so.subdiv, "sphere suite level")->check(CLI::Range(0, 4));
    suite->add_option("--out", out);
    suite->add_option("--format", format, "json, csv or md (default from the extension)");

    auto* info = app.add_subcommand("info", "Show the selected SIMD kernel table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) {
            if (backend == "sphere")
                save_manifold(out, build_sphere(subdiv));
            else if (backend == "torus")
                save_manifold(out, build_torus(res));
            else
                save_manifold(out, build_synthetic(n, kappa, seed));
            return 0;
        }
        if (*info) {
            std::cout << "kernels: " << simd::isa_name(simd::kernels().isa) << '\n';
            return 0;
        }
        if (*suite) {
            const auto r = run_suite(suite_name, suite_seed, so);
            if (format.empty()) {
                const auto ext = std::filesystem::path(out).extension().string();
                format = ext == ".csv" ? "csv" : ext == ".md" ? "md" : "json";
            }
            if (out.empty() || out == "-")
                std::cout << report_to_markdown(r);
            else
                emit_report(r, format, out);
            for (const auto& p : r.properties)
                std::cerr << (p.pass ? "pass " : "FAIL ") << p.id << "  " << p.max_violation << " <= " << p.tolerance
                          << '\n';
            return exit_code(r);
        }
        const auto m = load_manifold(manifold);
        if (*validate_cmd) {
            emit(to_json(validate(m)), out);
        } else if (*project) {
            ObstacleOptions oo;
            oo.tol = tol;
            const auto u = read_field_csv(input);
            m.check_field(u, "input");
            const auto sol = solve_obstacle(m, u, oo);
            emit(to_json(sol, oo), out);
        } else if (*minimize) {
            MinimizeOptions mo;
            mo.tol = mtol;
            Json j;
            VertexField uc;
            if (functional == "J") {
                const auto r = minimize_J_t(m, t, std::nullopt, mo);
                j = to_json(r, mo);
                uc = r.u_c;
                if (!r.converged) {
                    emit(j, out);
                    std::cerr << "not converged: " << r.message << '\n';
                    return 2;
                }
            } else {
                ICertificateOptions co;
                co.t = t;
                co.probes = probes;
                co.seed = seed;
                const auto r = minimize_I(m, mo, co);
                j = to_json(r.result, mo);
                j["certificate"] = to_json(r.certificate, co);
                uc = r.result.u_c;
            }
            j["functional"] = functional;
            emit(j, out);
            if (!u_out.empty()) write_field_csv(u_out, uc);
        } else if (*cont) {
            ContinuationOptions co;
            co.steps = steps;
            co.rho = rho;
            co.eps0 = eps0;
            const auto trace = continuation_minimize(m, co);
            emit(to_json(trace), out);
            return trace.bubbling_suspected ? 1 : 0;
        } else if (*conf) {
            const auto u = read_field_csv(ufile);
            m.check_field(u, "u");
            save_manifold(out, conformal_change(m, u));
        } else if (*green) {
            GreenOptions go;
            go.strict = strict;
            auto gd = green_at(m, anchor, delta, go);
            auto j = to_json(gd);
            const auto sym = shell_symmetry(m, gd);
            j["shell_variance"] = sym.max_variance;
            j["shells"] = sym.shells;
            j["mesh_tolerance"] = mesh_tolerance(m);
            emit(j, out);
        } else if (*fk) {
            std::vector<double> F(m.n()), L(m.n());
            for (std::size_t a = 0; a < m.n(); ++a) {
                auto gd = green_at(m, a, delta);
                F[a] = gd.F_K_a;
                L[a] = gd.L_K_a;
            }
            const auto rep = classify_critical(m, F, L);
            std::ofstream os(out);
            if (!os) throw Error("cannot write " + out);
            os << std::setprecision(17) << "vertex,F_K,L_K,critical_type\n";
            for (std::size_t a = 0; a < m.n(); ++a)
                os << a << ',' << F[a] << ',' << L[a] << ',' << critical_name(rep.types[a]) << '\n';
            std::cerr << "positive hypothesis: " << rep.positive_hypothesis
                      << ", nonzero hypothesis: " << rep.nonzero_hypothesis << '\n';
        } else if (*bubble || *sweep) {
            const auto c = parse_list(center);
            if (c.size() != 5) throw std::invalid_argument("--center needs 5 comma-separated numbers");
            std::array<double, 5> ca{};
            std::copy(c.begin(), c.end(), ca.begin());
            if (*bubble) {
                const auto b = make_bubble(m, ca, t);
                auto j = to_json(b);
                j["onofri"] = to_json(onofri_gap(m, b.w));
                j["mesh_tolerance"] = mesh_tolerance(m);
                emit(j, out);
                if (!u_out.empty()) write_field_csv(u_out, b.w);
            } else {
                std::ofstream os(out);
                if (!os) throw Error("cannot write " + out);
                os << std::setprecision(17)
                   << "t,deficit,residual_pairing,pde_residual,obstacle_gap,projection_defect,mesh_tolerance\n";
                for (double ti : parse_list(t_grid)) {
                    const auto b = make_bubble(m, ca, ti);
                    const auto r = onofri_gap(m, b.w);
                    os << ti << ',' << r.deficit << ',' << b.residual_pairing << ',' << b.pde_residual << ','
                       << r.obstacle_gap << ',' << r.projection_defect << ',' << mesh_tolerance(m) << '\n';
                }
            }
        }
        return 0;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
