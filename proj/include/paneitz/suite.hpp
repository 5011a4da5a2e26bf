#pragma once
// Seeded property suites and report emission.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace paneitz {

struct PropertyRecord {
    std::string id;
    std::string description;
    int trials = 0;
    double max_violation = 0.0;
    double tolerance = 0.0;
    bool pass = false;  // max_violation <= tolerance and no solver error
    bool solver_error = false;
    nlohmann::json diagnostics = nlohmann::json::object();
};

struct SuiteReport {
    std::string suite;
    std::uint64_t seed = 0;
    nlohmann::json provenance = nlohmann::json::object();
    nlohmann::json timing = nlohmann::json::object();
    std::vector<PropertyRecord> properties;
    bool all_pass = false;
    int solver_errors = 0;
};

/// All tolerances in one place. Violations of energy identities are measured
/// relative to 1 + <u,u>.
struct SuiteTolerances {
    double obstacle = 1e-8;     // KKT residual, idempotency, minimality
    double identity = 1e-8;     // monotonicity chains and equalities
    double fixed_point = 1e-7;  // ||u_min - T u_min||_max
    double el = 1e-7;           // Euler-Lagrange residual at minimizers
    double same_value = 1e-8;   // |I - J| and probe margins
    double onofri_gap = 1e-6;   // lower bound on the obstacle gap
    /// Multiplies every tolerance; PANEITZ_TOL_OVERRIDE overrides when set.
    double scale = 1.0;
};

struct SuiteOptions {
    std::size_t n = 50;                                  // synthetic vertex count
    std::vector<double> kappas;                          // default {2,4,6,8} pi^2
    std::vector<double> ts{0.3, 0.7, 1.0};
    int fields = 100;                                    // random fields per (kappa, t)
    std::vector<double> magnitudes{0.1, 1.0, 10.0};
    int probes = 200;                                    // I-minimality probes per minimizer
    int subdiv = 2;                                      // sphere suite level
    int sphere_fields = 200;
    std::vector<double> bubble_scales{2.0, 4.0};
    int continuation_subdiv = 1;
    int continuation_steps = 12;
    SuiteTolerances tol{};
};

/// Ids of the algebraic suite in report order; one per result on the
/// obstacle map, the J monotonicity and the optimal-control functional.
const std::vector<std::string>& algebraic_property_ids();
const std::vector<std::string>& sphere_property_ids();
const std::vector<std::string>& continuation_property_ids();

/// Scale factor from PANEITZ_TOL_OVERRIDE, or `fallback` when unset. Throws
/// std::invalid_argument for a non-positive or malformed value.
double tolerance_scale_from_env(double fallback = 1.0);

/// suite: "algebraic", "sphere" or "continuation". Solver failures are
/// recorded as failing properties.
SuiteReport run_suite(const std::string& suite, std::uint64_t seed, const SuiteOptions& opts = {});

nlohmann::json report_to_json(const SuiteReport& r);
SuiteReport report_from_json(const nlohmann::json& j);
std::string report_to_csv(const SuiteReport& r);
std::string report_to_markdown(const SuiteReport& r);

/// format: "json", "csv" or "md".
void emit_report(const SuiteReport& r, const std::string& format, const std::filesystem::path& path);

/// 0 all pass, 2 any solver error, 1 otherwise.
int exit_code(const SuiteReport& r);

}  // namespace paneitz
