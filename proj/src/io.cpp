#include "paneitz/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "paneitz/errors.hpp"

namespace paneitz {

namespace {

Json coo(const CsrMatrix& a) {
    Json rows = Json::array(), cols = Json::array(), vals = Json::array();
    for (const auto& t : a.triplets()) {
        rows.push_back(t.row);
        cols.push_back(t.col);
        vals.push_back(t.value);
    }
    return {{"format", "coo"}, {"n", a.rows()}, {"rows", rows}, {"cols", cols}, {"vals", vals}};
}

CsrMatrix from_coo(const Json& j, std::size_t n, const char* what) {
    if (!j.is_object() || j.value("format", "") != "coo")
        throw ValidationError(std::string(what) + ": expected {\"format\": \"coo\", ...}");
    const auto& r = j.at("rows");
    const auto& c = j.at("cols");
    const auto& v = j.at("vals");
    if (r.size() != c.size() || r.size() != v.size())
        throw ValidationError(std::string(what) + ": rows, cols and vals differ in length");
    std::vector<Triplet> t;
    t.reserve(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        const auto i = r[k].get<std::int64_t>();
        const auto l = c[k].get<std::int64_t>();
        if (i < 0 || l < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(l) >= n)
            throw ValidationError(std::string(what) + ": index out of range");
        t.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(l), v[k].get<double>()});
    }
    return CsrMatrix(n, n, t);
}

std::vector<double> doubles(const Json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw ValidationError(std::string("missing array '") + key + "'");
    std::vector<double> out;
    out.reserve(j.at(key).size());
    for (const auto& x : j.at(key)) {
        if (!x.is_number()) throw ValidationError(std::string("non-numeric entry in '") + key + "'");
        out.push_back(x.get<double>());
    }
    return out;
}

// JSON has no NaN or infinity; write them as null.
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json geometry_json(const Geometry& g) {
    if (const auto* s = std::get_if<SphereGeometry>(&g)) {
        return {{"backend", "sphere"},   {"level", s->level},
                {"vertices", s->vertices}, {"cells", s->cells},
                {"S", coo(s->stiffness)},  {"R", s->scalar_curvature},
                {"mean_edge", s->mean_edge}};
    }
    if (const auto* t = std::get_if<TorusGeometry>(&g))
        return {{"backend", "torus"}, {"res", t->res}, {"spacing", t->spacing}};
    if (const auto* y = std::get_if<SyntheticGeometry>(&g))
        return {{"backend", "synthetic"}, {"seed", y->seed}, {"kappa_target", y->kappa_target}};
    return {{"backend", "none"}};
}

Geometry geometry_from(const Json& j, std::size_t n) {
    const auto backend = j.value("backend", std::string("none"));
    if (backend == "sphere") {
        SphereGeometry s;
        s.level = j.at("level").get<int>();
        s.vertices = j.at("vertices").get<std::vector<std::array<double, 5>>>();
        s.cells = j.at("cells").get<std::vector<std::array<std::int32_t, 5>>>();
        s.stiffness = from_coo(j.at("S"), n, "geometry.S");
        s.scalar_curvature = j.at("R").get<std::vector<double>>();
        s.mean_edge = j.at("mean_edge").get<double>();
        if (s.vertices.size() != n || s.scalar_curvature.size() != n)
            throw ValidationError("sphere geometry does not match the vertex count");
        return s;
    }
    if (backend == "torus") return TorusGeometry{j.at("res").get<int>(), j.at("spacing").get<double>()};
    if (backend == "synthetic")
        return SyntheticGeometry{j.at("seed").get<std::uint64_t>(), j.at("kappa_target").get<double>()};
    if (backend == "none") return {};
    throw ValidationError("unknown geometry backend '" + backend + "'");
}

}  // namespace

Json manifold_to_json(const DiscreteManifold& m) {
    Json j;
    j["n"] = m.n();
    j["w"] = std::vector<double>(m.w().begin(), m.w().end());
    j["Q"] = std::vector<double>(m.q().begin(), m.q().end());
    j["K"] = std::vector<double>(m.k().begin(), m.k().end());
    j["B"] = coo(m.form());
    j["geometry"] = geometry_json(m.geometry());
    return j;
}

DiscreteManifold manifold_from_json(const Json& j) {
    try {
        if (!j.is_object()) throw ValidationError("manifold JSON must be an object");
        auto w = doubles(j, "w");
        auto q = doubles(j, "Q");
        auto k = j.contains("K") ? doubles(j, "K") : std::vector<double>(w.size(), 1.0);
        const std::size_t n = j.contains("n") ? j.at("n").get<std::size_t>() : w.size();
        if (w.size() != n) throw ValidationError("'n' disagrees with the length of 'w'");
        auto b = from_coo(j.at("B"), n, "B");
        Geometry g = j.contains("geometry") ? geometry_from(j.at("geometry"), n) : Geometry{};
        return DiscreteManifold(std::move(w), std::move(b), std::move(q), std::move(k), std::move(g));
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed manifold JSON: ") + e.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << std::setprecision(17) << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot read " + path.string());
    try {
        return Json::parse(is);
    } catch (const Json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_manifold(const std::filesystem::path& path, const DiscreteManifold& m) {
    write_json(path, manifold_to_json(m));
}

DiscreteManifold load_manifold(const std::filesystem::path& path) { return manifold_from_json(read_json(path)); }

void write_field_csv(const std::filesystem::path& path, std::span<const double> field) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << "vertex,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < field.size(); ++i) os << i << ',' << field[i] << '\n';
}

VertexField read_field_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot read " + path.string());
    std::string line;
    std::vector<std::pair<std::size_t, double>> rows;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("vertex", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError(path.string() + ": bad row " + std::to_string(lineno));
        try {
            std::size_t used = 0;
            const auto idx = std::stoull(line.substr(0, comma), &used);
            const auto val = std::stod(line.substr(comma + 1));
            rows.emplace_back(idx, val);
        } catch (const std::exception&) {
            throw ValidationError(path.string() + ": bad row " + std::to_string(lineno));
        }
    }
    VertexField out(rows.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> seen(rows.size(), false);
    for (const auto& [i, v] : rows) {
        if (i >= rows.size() || seen[i]) throw ValidationError(path.string() + ": vertex indices must be 0..n-1, once each");
        seen[i] = true;
        out[i] = v;
    }
    return out;
}

Json to_json(const Tolerances& t) {
    return {{"constraint", t.constraint}, {"energy", t.energy}, {"drift", t.drift}, {"strict", t.strict}};
}

Json to_json(const Diagnostics& d) {
    return {{"n", d.n},
            {"symmetry_defect", d.symmetry_defect},
            {"constant_defect", d.constant_defect},
            {"lambda_min", d.lambda_min},
            {"lambda_second", d.lambda_second},
            {"eigen_exact", d.eigen_exact},
            {"kappa", d.kappa},
            {"min_w", d.min_w},
            {"min_k", d.min_k},
            {"scope", scope_name(d.scope)}};
}

Json to_json(const ObstacleSolution& s, const ObstacleOptions& opts) {
    return {{"v", s.v},
            {"active", s.active},
            {"lambda", s.lambda},
            {"mu", s.mu},
            {"objective", s.objective},
            {"kkt_residual", s.kkt_residual},
            {"feasibility", s.feasibility},
            {"constraint", s.constraint},
            {"complementarity", s.complementarity},
            {"min_lambda", s.min_lambda},
            {"iterations", s.iterations},
            {"tolerances", {{"feasibility", opts.tol}, {"clamp_rel", opts.clamp_rel},
                            {"multiplier_rel", opts.multiplier_rel}, {"hq", to_json(opts.hq)}}}};
}

Json to_json(const FunctionalReport& r) {
    Json j = {{"t", r.t},
              {"J_t", num(r.J_t)},
              {"quadratic_term", r.quadratic_term},
              {"linear_term", r.linear_term},
              {"log_term_u", num(r.log_term_u)},
              {"tolerances", to_json(r.tolerances)}};
    if (r.has_obstacle_terms) {
        j["I_t"] = num(r.I_t);
        j["log_term_Tu"] = num(r.log_term_Tu);
        j["J_t_of_Tu"] = num(r.J_t_of_Tu);
        j["I_t_of_Tu"] = num(r.I_t_of_Tu);
        j["gap_J"] = num(r.gap_J);
        j["gap_I"] = num(r.gap_I);
        j["energy_drop"] = num(r.energy_drop);
    }
    return j;
}

Json to_json(const MinimizeResult& r, const MinimizeOptions& opts) {
    return {{"t", r.t},
            {"J_value", num(r.J_value)},
            {"I_value", num(r.I_value)},
            {"el_residual", num(r.el_residual)},
            {"fixed_point_defect", num(r.fixed_point_defect)},
            {"hessian_min", num(r.hessian_min)},
            {"saddle_escapes", r.saddle_escapes},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"message", r.message},
            {"u_min", r.u_min},
            {"u_c", r.u_c},
            {"tolerances", {{"el", opts.tol}, {"newton_switch", opts.newton_switch},
                            {"scope_slack", opts.scope_slack}}}};
}

Json to_json(const ICertificate& c, const ICertificateOptions& opts) {
    return {{"fixed_point_defect", c.fixed_point_defect},
            {"i_minus_j", c.i_minus_j},
            {"probes", c.probes},
            {"worst_probe_margin", num(c.worst_probe_margin)},
            {"probe_failures", c.probe_failures},
            {"tolerance", opts.tol},
            {"magnitudes", opts.magnitudes},
            {"seed", opts.seed}};
}

Json to_json(const ContinuationTrace& t) {
    Json steps = Json::array();
    for (const auto& s : t.steps) {
        steps.push_back({{"eps", s.eps},
                         {"t", s.t},
                         {"J", num(s.result.J_value)},
                         {"el_residual", num(s.result.el_residual)},
                         {"converged", s.result.converged},
                         {"deficit", num(s.deficit)},
                         {"monitor", num(s.monitor)},
                         {"drift", num(s.drift)},
                         {"hessian_min", num(s.hessian_min)}});
    }
    return {{"steps", steps},
            {"bubbling_suspected", t.bubbling_suspected},
            {"converged_smoothly", t.converged_smoothly},
            {"status", t.status}};
}

Json to_json(const GreenData& g) {
    return {{"anchor", g.anchor},
            {"H_aa", g.H_aa},
            {"F_K", g.F_K_a},
            {"L_K", g.L_K_a},
            {"cutoff_radius", g.cutoff_radius},
            {"delta_mass", g.delta_mass},
            {"permissive", g.permissive},
            {"residual", g.residual},
            {"q_normalization", g.q_normalization},
            {"cg_iterations", g.cg_iterations}};
}

Json to_json(const Bubble& b) {
    return {{"center", b.center},
            {"t", b.t},
            {"pde_residual", b.pde_residual},
            {"pde_residual_l2", b.pde_residual_l2},
            {"residual_pairing", b.residual_pairing}};
}

Json to_json(const OnofriReport& r) {
    Json j = {{"J", r.J}, {"J_zero", r.J_zero}, {"deficit", r.deficit}};
    if (r.has_obstacle_gap) {
        j["obstacle_gap"] = r.obstacle_gap;
        j["projection_defect"] = r.projection_defect;
    }
    return j;
}

}  // namespace paneitz
