#include "nlab/config.hpp"

#include "nlab/expr.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace nlab {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + "." + it.key(), "unknown field");
}

template <typename T>
T get(const Json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key, e.what());
  }
}

template <typename T>
void get_opt(const Json& j, const std::string& key, const std::string& where, T& out) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

Vec3 get_vec3(const Json& j, const std::string& key, const std::string& where) {
  const auto v = get<std::vector<Real>>(j, key, where);
  if (v.size() != 3) throw ConfigError(where + "." + key, "expected 3 numbers");
  return Vec3(v[0], v[1], v[2]);
}

Real number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where, "expected a number");
  return j.get<Real>();
}

// A scalar expression given as a number or a source string.
std::function<Real(const Vec3&)> scalar_fn(const Json& j, const std::string& where) {
  if (j.is_number()) {
    const Real c = j.get<Real>();
    return [c](const Vec3&) { return c; };
  }
  if (!j.is_string()) throw ConfigError(where, "expected an expression string or a number");
  try {
    Expression e(j.get<std::string>());
    return [e](const Vec3& x) { return e(x); };
  } catch (const Error& err) {
    throw ConfigError(where, err.what());
  }
}

const std::set<std::string> kFieldKeys{"kind", "value", "values"};

std::string kind_of(const Json& j, const std::string& where) {
  check_keys(j, kFieldKeys, where);
  const auto kind = get<std::string>(j, "kind", where);
  static const std::set<std::string> kinds{"zero", "constant", "per_cell", "per_facet", "expr"};
  if (!kinds.count(kind)) throw ConfigError(where + ".kind", "unknown kind '" + kind + "'");
  return kind;
}

template <typename V>
std::vector<V> per_values(const Json& j, const SimplicialMesh* mesh, const std::string& kind,
                          const std::string& where, V (*conv)(const Json&, const std::string&)) {
  if (!j.contains("values") || !j["values"].is_array())
    throw ConfigError(where + ".values", "expected an array");
  std::vector<V> out;
  const auto& arr = j["values"];
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(conv(arr[i], where + ".values[" + std::to_string(i) + "]"));
  if (mesh) {
    const Index want = kind == "per_cell" ? mesh->num_cells() : mesh->num_facets();
    if (Index(out.size()) != want)
      throw ConfigError(where + ".values", "expected " + std::to_string(want) + " entries, got " +
                                               std::to_string(out.size()));
  }
  return out;
}

Real conv_scalar(const Json& j, const std::string& w) { return number(j, w); }

Vec3 conv_vec(const Json& j, const std::string& w) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(w, "expected 3 numbers");
  return Vec3(number(j[0], w + "[0]"), number(j[1], w + "[1]"), number(j[2], w + "[2]"));
}

Mat3 conv_mat(const Json& j, const std::string& w) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(w, "expected a 3x3 nested array");
  Mat3 m;
  for (int r = 0; r < 3; ++r) m.row(r) = conv_vec(j[r], w + "[" + std::to_string(r) + "]").transpose();
  return m;
}

template <typename V>
Field<V> finish(Field<V> f, const std::string& where) {
  f.role = where;
  return f;
}

}  // namespace

ScalarField parse_scalar_field(const Json& j, const SimplicialMesh* mesh, const std::string& where) {
  if (j.is_number()) return finish(ScalarField::constant(j.get<Real>()), where);
  const auto kind = kind_of(j, where);
  if (kind == "zero") return finish(ScalarField::zero(), where);
  if (kind == "constant") return finish(ScalarField::constant(number(get<Json>(j, "value", where), where + ".value")), where);
  if (kind == "expr") return finish(ScalarField::analytic(scalar_fn(get<Json>(j, "value", where), where + ".value")), where);
  auto v = per_values<Real>(j, mesh, kind, where, conv_scalar);
  return finish(kind == "per_cell" ? ScalarField::per_cell(std::move(v)) : ScalarField::per_facet(std::move(v)), where);
}

VectorField parse_vector_field(const Json& j, const SimplicialMesh* mesh, const std::string& where) {
  const auto kind = kind_of(j, where);
  if (kind == "zero") return finish(VectorField::zero(), where);
  if (kind == "constant") return finish(VectorField::constant(conv_vec(get<Json>(j, "value", where), where + ".value")), where);
  if (kind == "expr") {
    const auto v = get<Json>(j, "value", where);
    if (!v.is_array() || v.size() != 3) throw ConfigError(where + ".value", "expected 3 expressions");
    std::array<std::function<Real(const Vec3&)>, 3> fn;
    for (int k = 0; k < 3; ++k) fn[k] = scalar_fn(v[k], where + ".value[" + std::to_string(k) + "]");
    return finish(VectorField::analytic([fn](const Vec3& x) { return Vec3(fn[0](x), fn[1](x), fn[2](x)); }), where);
  }
  auto v = per_values<Vec3>(j, mesh, kind, where, conv_vec);
  return finish(kind == "per_cell" ? VectorField::per_cell(std::move(v)) : VectorField::per_facet(std::move(v)), where);
}

MatrixField parse_matrix_field(const Json& j, const SimplicialMesh* mesh, const std::string& where) {
  const auto kind = kind_of(j, where);
  if (kind == "zero") return finish(MatrixField::zero(), where);
  if (kind == "constant") return finish(MatrixField::constant(conv_mat(get<Json>(j, "value", where), where + ".value")), where);
  if (kind == "expr") {
    const auto v = get<Json>(j, "value", where);
    if (!v.is_array() || v.size() != 3) throw ConfigError(where + ".value", "expected a 3x3 nested array");
    std::array<std::function<Real(const Vec3&)>, 9> fn;
    for (int r = 0; r < 3; ++r) {
      if (!v[r].is_array() || v[r].size() != 3) throw ConfigError(where + ".value", "expected a 3x3 nested array");
      for (int c = 0; c < 3; ++c)
        fn[3 * r + c] = scalar_fn(v[r][c], where + ".value[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return finish(MatrixField::analytic([fn](const Vec3& x) {
                    Mat3 m;
                    for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = fn[k](x);
                    return m;
                  }),
                  where);
  }
  auto v = per_values<Mat3>(j, mesh, kind, where, conv_mat);
  return finish(kind == "per_cell" ? MatrixField::per_cell(std::move(v)) : MatrixField::per_facet(std::move(v)), where);
}

// --- mesh ---------------------------------------------------------------------

Json MeshConfig::to_json() const {
  if (!path.empty()) return Json{{"path", path}};
  if (builder == "box")
    return Json{{"builder", "box"},
                {"lo", {lo.x(), lo.y(), lo.z()}},
                {"hi", {hi.x(), hi.y(), hi.z()}},
                {"n", n}};
  return Json{{"builder", "graph"}, {"r", r},         {"M", M},
              {"psi", psi},         {"base", base},   {"resolution", resolution},
              {"layers", layers},   {"disk_segments", disk_segments}};
}

MeshConfig MeshConfig::from_json(const Json& j, const std::string& where) {
  MeshConfig m;
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  if (j.contains("path")) {
    check_keys(j, {"path"}, where);
    m.path = get<std::string>(j, "path", where);
    return m;
  }
  m.builder = get<std::string>(j, "builder", where);
  if (m.builder == "box") {
    check_keys(j, {"builder", "lo", "hi", "n"}, where);
    if (j.contains("lo")) m.lo = get_vec3(j, "lo", where);
    if (j.contains("hi")) m.hi = get_vec3(j, "hi", where);
    if (j.contains("n")) {
      const auto n = get<std::vector<int>>(j, "n", where);
      if (n.size() != 3) throw ConfigError(where + ".n", "expected 3 subdivision counts");
      for (int k = 0; k < 3; ++k) {
        if (n[k] < 1) throw ConfigError(where + ".n", "subdivision counts must be positive");
        m.n[k] = n[k];
      }
    }
    for (int k = 0; k < 3; ++k)
      if (!(m.hi[k] > m.lo[k])) throw ConfigError(where + ".hi", "box must have hi > lo");
  } else if (m.builder == "graph") {
    check_keys(j, {"builder", "r", "M", "psi", "base", "resolution", "layers", "disk_segments"}, where);
    get_opt(j, "r", where, m.r);
    get_opt(j, "M", where, m.M);
    get_opt(j, "psi", where, m.psi);
    get_opt(j, "base", where, m.base);
    get_opt(j, "resolution", where, m.resolution);
    get_opt(j, "layers", where, m.layers);
    get_opt(j, "disk_segments", where, m.disk_segments);
    if (m.base != "square" && m.base != "disk") throw ConfigError(where + ".base", "expected square or disk");
    if (!(m.r > 0)) throw ConfigError(where + ".r", "must be positive");
    if (m.M < 0) throw ConfigError(where + ".M", "must be nonnegative");
    try {
      Expression probe(m.psi);
    } catch (const Error& e) {
      throw ConfigError(where + ".psi", e.what());
    }
  } else {
    throw ConfigError(where + ".builder", "unknown builder '" + m.builder + "'");
  }
  return m;
}

SimplicialMesh build_mesh(const MeshConfig& cfg) {
  if (!cfg.path.empty()) {
    std::ifstream in(cfg.path);
    if (!in) throw ConfigError("mesh.path", "cannot open " + cfg.path);
    std::stringstream ss;
    ss << in.rdbuf();
    return mesh_from_json(ss.str());
  }
  if (cfg.builder == "box") return build_box_mesh(Box{cfg.lo, cfg.hi}, cfg.n);
  GraphDomainSpec g;
  g.r = cfg.r;
  g.M = cfg.M;
  Expression e(cfg.psi);
  g.psi = [e](Real x, Real y) { return e(Vec3(x, y, 0)); };
  g.base = cfg.base == "disk" ? BaseShape::Disk : BaseShape::Square;
  g.disk_segments = cfg.disk_segments;
  return build_graph_domain_mesh(g, cfg.resolution, cfg.layers);
}

// --- problem --------------------------------------------------------------------

Json ProblemConfig::to_json() const {
  Json j = Json::object();
  for (const auto& [k, v] : fields) j[k] = v;
  j["variant"] = variant;
  if (gamma) j["gamma"] = *gamma;
  j["lambda"] = lambda;
  j["Lambda"] = Lambda;
  j["quad_degree"] = quad_degree;
  return j;
}

ProblemConfig ProblemConfig::from_json(const Json& j, const std::string& where) {
  check_keys(j, {"A", "b", "c", "d", "f", "F", "g", "variant", "gamma", "lambda", "Lambda", "quad_degree"}, where);
  ProblemConfig p;
  for (const char* k : {"A", "b", "c", "d", "f", "F", "g"}) {
    if (!j.contains(k)) continue;
    const std::string w = where + "." + k;
    // Validate shape now; per-cell sizes are checked against the mesh later.
    const std::string key = k;
    if (key == "A") parse_matrix_field(j[k], nullptr, w);
    else if (key == "b" || key == "c" || key == "F") parse_vector_field(j[k], nullptr, w);
    else parse_scalar_field(j[k], nullptr, w);
    p.fields[k] = j[k];
  }
  get_opt(j, "variant", where, p.variant);
  if (p.variant != "direct" && p.variant != "adjoint" && p.variant != "reduced")
    throw ConfigError(where + ".variant", "expected direct, adjoint or reduced");
  if (j.contains("gamma")) p.gamma = get<std::vector<int>>(j, "gamma", where);
  get_opt(j, "lambda", where, p.lambda);
  get_opt(j, "Lambda", where, p.Lambda);
  get_opt(j, "quad_degree", where, p.quad_degree);
  if (!(p.lambda > 0) || p.Lambda < p.lambda)
    throw ConfigError(where + ".lambda", "need 0 < lambda <= Lambda");
  if (p.quad_degree < 1 || p.quad_degree > 12)
    throw ConfigError(where + ".quad_degree", "expected 1..12");
  return p;
}

ProblemSpec build_problem(const ProblemConfig& cfg, MeshPtr mesh) {
  ProblemSpec s;
  s.mesh = mesh;
  const SimplicialMesh* m = mesh.get();
  auto field = [&](const char* k) -> const Json* {
    auto it = cfg.fields.find(k);
    return it == cfg.fields.end() ? nullptr : &it->second;
  };
  if (auto j = field("A")) s.A = parse_matrix_field(*j, m, std::string("problem.A"));
  if (auto j = field("b")) s.b = parse_vector_field(*j, m, "problem.b");
  if (auto j = field("c")) s.c = parse_vector_field(*j, m, "problem.c");
  if (auto j = field("F")) s.F = parse_vector_field(*j, m, "problem.F");
  if (auto j = field("d")) s.d = parse_scalar_field(*j, m, "problem.d");
  if (auto j = field("f")) s.f = parse_scalar_field(*j, m, "problem.f");
  if (auto j = field("g")) s.g = parse_scalar_field(*j, m, "problem.g");
  s.variant = cfg.variant == "adjoint" ? Variant::Adjoint
              : cfg.variant == "reduced" ? Variant::ReducedDrift
                                         : Variant::Direct;
  s.gamma_tags = cfg.gamma;
  s.lambda = cfg.lambda;
  s.Lambda = cfg.Lambda;
  s.quad_degree = cfg.quad_degree;
  return s;
}

// --- run config -------------------------------------------------------------------

Json RunConfig::to_json() const {
  Json j{{"version", version}, {"experiments", experiments}, {"seed", seed},
         {"refinements", refinements}, {"tolerances", tolerances}, {"output", output},
         {"jobs", jobs}, {"options", options}};
  if (mesh) j["mesh"] = mesh->to_json();
  if (problem) j["problem"] = problem->to_json();
  return j;
}

RunConfig RunConfig::from_json(const Json& j) {
  check_keys(j, {"version", "experiments", "seed", "mesh", "problem", "refinements", "tolerances",
                 "output", "jobs", "options"},
             "config");
  RunConfig c;
  get_opt(j, "version", "config", c.version);
  if (c.version != 1) throw ConfigError("config.version", "unsupported version " + std::to_string(c.version));
  if (!j.contains("experiments")) throw ConfigError("config.experiments", "missing");
  c.experiments = get<std::vector<std::string>>(j, "experiments", "config");
  if (c.experiments.empty()) throw ConfigError("config.experiments", "must name at least one experiment");
  get_opt(j, "seed", "config", c.seed);
  if (j.contains("mesh")) c.mesh = MeshConfig::from_json(j["mesh"], "config.mesh");
  if (j.contains("problem")) c.problem = ProblemConfig::from_json(j["problem"], "config.problem");
  get_opt(j, "refinements", "config", c.refinements);
  for (int r : c.refinements)
    if (r < 1) throw ConfigError("config.refinements", "resolutions must be positive");
  get_opt(j, "tolerances", "config", c.tolerances);
  get_opt(j, "output", "config", c.output);
  get_opt(j, "jobs", "config", c.jobs);
  if (c.jobs < 1) throw ConfigError("config.jobs", "must be at least 1");
  if (j.contains("options")) {
    if (!j["options"].is_object()) throw ConfigError("config.options", "expected an object");
    c.options = j["options"];
  }
  return c;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const {
  Json j = to_json();
  // Output location and worker count do not change results.
  j.erase("output");
  j.erase("jobs");
  return fnv1a_hex(j.dump());
}

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col),
                      "JSON syntax error");
  }
}

RunConfig parse_run_config(const std::string& text) { return RunConfig::from_json(parse_json_text(text)); }

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace nlab
