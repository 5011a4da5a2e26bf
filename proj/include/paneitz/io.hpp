#pragma once
// JSON manifold files, CSV vertex fields and JSON result records.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "paneitz/bubbles.hpp"
#include "paneitz/functionals.hpp"
#include "paneitz/green.hpp"
#include "paneitz/manifold.hpp"
#include "paneitz/obstacle.hpp"

namespace paneitz {

using Json = nlohmann::json;

/// {"n", "w", "Q", "K", "B": {"format": "coo", "rows", "cols", "vals"}, "geometry": {...}}
Json manifold_to_json(const DiscreteManifold& m);
/// Throws ValidationError on malformed input.
DiscreteManifold manifold_from_json(const Json& j);

void save_manifold(const std::filesystem::path& path, const DiscreteManifold& m);
DiscreteManifold load_manifold(const std::filesystem::path& path);

/// Header "vertex,value", one row per vertex.
void write_field_csv(const std::filesystem::path& path, std::span<const double> field);
/// Rows may come in any order; every vertex 0..n-1 must appear once.
VertexField read_field_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

Json to_json(const Tolerances& t);
Json to_json(const Diagnostics& d);
Json to_json(const ObstacleSolution& s, const ObstacleOptions& opts);
Json to_json(const FunctionalReport& r);
Json to_json(const MinimizeResult& r, const MinimizeOptions& opts);
Json to_json(const ICertificate& c, const ICertificateOptions& opts);
Json to_json(const ContinuationTrace& t);
Json to_json(const GreenData& g);
Json to_json(const Bubble& b);
Json to_json(const OnofriReport& r);

}  // namespace paneitz
