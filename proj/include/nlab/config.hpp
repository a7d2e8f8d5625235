#pragma once

#include "nlab/assembly.hpp"

#include <json.hpp>

#include <map>

namespace nlab {

using Json = nlohmann::json;

// Invalid configuration; `where` is a JSON path or "line L, column C".
class ConfigError : public Error {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

// {"builder": "box", "lo": [..], "hi": [..], "n": [..]}
// {"builder": "graph", "r", "M", "psi": "<expr in x1, x2>", "base": "square"|"disk", "resolution", "layers"}
// {"path": "mesh.json"}
struct MeshConfig {
  std::string builder = "box";
  Vec3 lo = Vec3::Zero(), hi = Vec3::Ones();
  std::array<int, 3> n{8, 8, 8};
  Real r = 1, M = 0;
  std::string psi = "0";
  std::string base = "square";
  int resolution = 8, layers = 0, disk_segments = 64;
  std::string path;

  Json to_json() const;
  static MeshConfig from_json(const Json& j, const std::string& where = "mesh");
};

SimplicialMesh build_mesh(const MeshConfig& cfg);

// Coefficients and data as raw JSON field definitions, validated on parse.
struct ProblemConfig {
  std::map<std::string, Json> fields;  // A b c d f F g
  std::string variant = "direct";
  std::optional<std::vector<int>> gamma;
  Real lambda = 1, Lambda = 1;
  int quad_degree = 4;

  Json to_json() const;
  static ProblemConfig from_json(const Json& j, const std::string& where = "problem");
};

ProblemSpec build_problem(const ProblemConfig& cfg, MeshPtr mesh);

// Field definitions: {"kind": "zero"} | {"kind": "constant", "value": v} |
// {"kind": "per_cell"|"per_facet", "values": [...]} | {"kind": "expr", "value": e}
// where v / e is a scalar, a 3-vector or a 3x3 nested array matching the role.
ScalarField parse_scalar_field(const Json& j, const SimplicialMesh* mesh, const std::string& where);
VectorField parse_vector_field(const Json& j, const SimplicialMesh* mesh, const std::string& where);
MatrixField parse_matrix_field(const Json& j, const SimplicialMesh* mesh, const std::string& where);

struct RunConfig {
  int version = 1;
  std::vector<std::string> experiments;
  std::uint64_t seed = 1;
  std::optional<MeshConfig> mesh;
  std::optional<ProblemConfig> problem;
  std::vector<int> refinements;
  std::map<std::string, Real> tolerances;
  std::string output = "runs";
  int jobs = 1;
  Json options = Json::object();  // per-experiment overrides keyed by name

  Json to_json() const;
  static RunConfig from_json(const Json& j);
  // Stable hash of the canonical serialisation (hex).
  std::string hash() const;
};

// Parses text, mapping JSON syntax errors to line/column diagnostics.
Json parse_json_text(const std::string& text);
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

std::string fnv1a_hex(const std::string& data);

}  // namespace nlab
