#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "paneitz/errors.hpp"
#include "paneitz/geometry.hpp"
#include "paneitz/io.hpp"
#include "paneitz/suite.hpp"

using namespace paneitz;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "paneitz_tests";
    fs::create_directories(dir);
    return dir / name;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("manifold JSON round trip") {
    for (const auto& m : {build_synthetic(15, 4 * kPi * kPi, 3), build_sphere(0), build_torus(4)}) {
        const auto p = scratch("m.json");
        save_manifold(p, m);
        const auto r = load_manifold(p);
        CHECK(r.n() == m.n());
        CHECK(r.form().to_dense() == m.form().to_dense());
        CHECK(std::vector<double>(r.w().begin(), r.w().end()) == std::vector<double>(m.w().begin(), m.w().end()));
        CHECK(std::vector<double>(r.q().begin(), r.q().end()) == std::vector<double>(m.q().begin(), m.q().end()));
        CHECK(r.geometry().index() == m.geometry().index());
        if (m.sphere()) {
            CHECK(r.sphere()->cells == m.sphere()->cells);
            CHECK(r.sphere()->stiffness.to_dense() == m.sphere()->stiffness.to_dense());
        }
        CHECK(manifold_to_json(r) == manifold_to_json(m));
    }
}

TEST_CASE("manifold JSON: malformed input") {
    CHECK_THROWS_AS(manifold_from_json(Json::parse(R"({"w": [1, 1]})")), ValidationError);
    CHECK_THROWS_AS(manifold_from_json(Json::parse(
                        R"({"w": [1, 1], "Q": [1, 1], "B": {"format": "coo", "rows": [0, 5], "cols": [0, 0], "vals": [1, 1]}})")),
                    ValidationError);
    CHECK_THROWS_AS(manifold_from_json(Json::parse(
                        R"({"w": [1, -1], "Q": [1, 1], "B": {"format": "coo", "rows": [], "cols": [], "vals": []}})")),
                    ValidationError);
    CHECK_THROWS_AS(manifold_from_json(Json::parse(
                        R"({"w": [1, 1], "Q": [1, 1], "B": {"format": "dense"}})")),
                    ValidationError);
    const auto ok = manifold_from_json(Json::parse(
        R"({"w": [1, 1], "Q": [1, 1], "B": {"format": "coo", "rows": [0, 0, 1, 1], "cols": [0, 1, 0, 1], "vals": [1, -1, -1, 1]}})"));
    CHECK(ok.k()[0] == 1.0);
}

TEST_CASE("CSV vertex fields") {
    const std::vector<double> f{0.1, -2.5, 1e-17, 3.0};
    const auto p = scratch("f.csv");
    write_field_csv(p, f);
    CHECK(read_field_csv(p) == f);
    {
        std::ofstream os(p);
        os << "vertex,value\n1,2.0\n0,1.0\n";
    }
    CHECK(read_field_csv(p) == std::vector<double>{1.0, 2.0});
    {
        std::ofstream os(p);
        os << "vertex,value\n0,1.0\n0,2.0\n";
    }
    CHECK_THROWS_AS(read_field_csv(p), ValidationError);
    {
        std::ofstream os(p);
        os << "vertex,value\n0,abc\n";
    }
    CHECK_THROWS_AS(read_field_csv(p), ValidationError);
}

TEST_CASE("suite: coverage list and report formats") {
    CHECK(algebraic_property_ids().size() == 9);
    SuiteOptions o;
    o.n = 20;
    o.fields = 6;
    o.probes = 20;
    o.kappas = {4 * kPi * kPi};
    o.ts = {0.5};
    const auto r = run_suite("algebraic", 3, o);
    REQUIRE(r.properties.size() == algebraic_property_ids().size());
    for (std::size_t i = 0; i < r.properties.size(); ++i) {
        CHECK(r.properties[i].id == algebraic_property_ids()[i]);
        CHECK(r.properties[i].pass == (r.properties[i].max_violation <= r.properties[i].tolerance &&
                                       !r.properties[i].solver_error));
    }
    CHECK(r.all_pass);
    CHECK(exit_code(r) == 0);

    const auto j = report_to_json(r);
    const auto back = report_from_json(Json::parse(j.dump()));
    CHECK(report_to_json(back) == j);
    CHECK(count_lines(report_to_csv(r)) == 1 + static_cast<int>(r.properties.size()));
    const auto md = report_to_markdown(r);
    for (const auto& id : algebraic_property_ids()) CHECK(md.find("| " + id + " |") != std::string::npos);

    const auto p = scratch("r.json");
    emit_report(r, "json", p);
    CHECK(read_json(p) == j);
    CHECK_THROWS_AS(emit_report(r, "xml", p), std::invalid_argument);
    CHECK_THROWS_AS(run_suite("nope", 1, o), std::invalid_argument);
}

TEST_CASE("suite: deterministic for a fixed seed") {
    SuiteOptions o;
    o.n = 15;
    o.fields = 4;
    o.probes = 10;
    o.kappas = {2 * kPi * kPi};
    o.ts = {1.0};
    auto a = report_to_json(run_suite("algebraic", 11, o));
    auto b = report_to_json(run_suite("algebraic", 11, o));
    a.erase("timing");
    b.erase("timing");
    CHECK(a == b);
}

TEST_CASE("suite: tolerance override") {
    ::setenv("PANEITZ_TOL_OVERRIDE", "0.5", 1);
    CHECK(tolerance_scale_from_env() == 0.5);
    ::setenv("PANEITZ_TOL_OVERRIDE", "-1", 1);
    CHECK_THROWS_AS(tolerance_scale_from_env(), std::invalid_argument);
    ::setenv("PANEITZ_TOL_OVERRIDE", "abc", 1);
    CHECK_THROWS_AS(tolerance_scale_from_env(), std::invalid_argument);
    ::unsetenv("PANEITZ_TOL_OVERRIDE");
    CHECK(tolerance_scale_from_env(2.0) == 2.0);

    // A failing property: impossible tolerance.
    SuiteOptions o;
    o.n = 15;
    o.fields = 3;
    o.probes = 5;
    o.kappas = {4 * kPi * kPi};
    o.ts = {1.0};
    o.tol.obstacle = 1e-300;
    o.magnitudes = {10.0};
    const auto r = run_suite("algebraic", 2, o);
    CHECK_FALSE(r.all_pass);
    CHECK(exit_code(r) == 1);
}
