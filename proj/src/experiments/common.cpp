#include "nlab/experiments.hpp"
#include "nlab/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace nlab {

namespace {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json finite_or_null(Real v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

TetPiece cell_piece(const FeFunction& u, Index c) {
  const auto& mesh = *u.mesh;
  TetPiece t;
  const auto& cell = mesh.cell(c);
  for (int k = 0; k < 4; ++k) {
    t.p[k] = mesh.vertex(cell[k]);
    t.u[k] = u.values[cell[k]];
  }
  return t;
}

Real piece_volume(const TetPiece& t) {
  return std::abs(tet_signed_volume(t.p[0], t.p[1], t.p[2], t.p[3]));
}

}  // namespace

// --- report -------------------------------------------------------------------------

void ExperimentReport::record_mesh(const SimplicialMesh& mesh) {
  const std::string h = hex64(mesh.hash());
  if (std::find(mesh_hashes.begin(), mesh_hashes.end(), h) == mesh_hashes.end())
    mesh_hashes.push_back(h);
}

bool ExperimentReport::expect_le(const std::string& what, Real value, Real bound) {
  const bool ok = value <= bound;  // NaN fails
  checks.push_back({what, ok, value, bound, "<="});
  return ok;
}

bool ExperimentReport::expect_ge(const std::string& what, Real value, Real bound) {
  const bool ok = value >= bound;
  checks.push_back({what, ok, value, bound, ">="});
  return ok;
}

bool ExperimentReport::expect(const std::string& what, bool ok, Real value) {
  checks.push_back({what, ok, value, 0, "holds"});
  return ok;
}

bool ExperimentReport::passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const Check* ExperimentReport::find_check(const std::string& what) const {
  for (const auto& c : checks)
    if (c.name == what) return &c;
  return nullptr;
}

Json ExperimentReport::to_json() const {
  Json j;
  j["schema"] = 1;
  j["experiment"] = name;
  j["anchor"] = anchor;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["results"] = results;
  j["tolerances"] = tolerances;
  j["mesh_hashes"] = mesh_hashes;
  Json cs = Json::array();
  for (const auto& c : checks) {
    Json e;
    e["name"] = c.name;
    e["pass"] = c.pass;
    e["value"] = finite_or_null(c.value);
    if (c.relation != "holds") e["bound"] = finite_or_null(c.bound);
    e["relation"] = c.relation;
    cs.push_back(std::move(e));
  }
  j["checks"] = std::move(cs);
  Json tabs = Json::array();
  for (const auto& [k, v] : tables) tabs.push_back(k);
  j["tables"] = std::move(tabs);
  j["passed"] = passed();
  return j;
}

Real ExperimentContext::tolerance(const std::string& key, Real fallback,
                                  ExperimentReport& report) const {
  auto it = tolerances.find(key);
  const Real v = it == tolerances.end() ? fallback : it->second;
  report.tolerances[key] = v;
  return v;
}

// --- meshes and norms ---------------------------------------------------------------

MeshPtr box_mesh(const Vec3& lo, const Vec3& hi, int n) {
  return std::make_shared<const SimplicialMesh>(build_box_mesh(Box{lo, hi}, {n, n, n}));
}

MeshPtr unit_cube(int n) { return box_mesh(Vec3::Zero(), Vec3::Ones(), n); }

YNorm y_norm_parts(const FeFunction& u) {
  YNorm y;
  y.lp = lp_norm(u, sobolev_exponent(3));
  y.grad = grad_lp_norm(u, 2);
  y.value = y.lp + y.grad;
  return y;
}

Real integrate_levels(const FeFunction& u, const std::vector<Real>& levels, const LevelIntegrand& fn,
                      int degree, const std::vector<Index>* cells) {
  const auto& mesh = *u.mesh;
  const auto& rule = simplex_rule<3>(degree);
  std::vector<TetPiece> work, next;
  auto visit = [&](Index c) {
    const TetPiece t = cell_piece(u, c);
    const auto [lo, hi] = std::minmax_element(t.u.begin(), t.u.end());
    work.assign(1, t);
    for (Real l : levels) {
      if (!(l > *lo && l < *hi)) continue;
      next.clear();
      for (const auto& w : work) split_tet(w, l, &next, &next);
      work.swap(next);
    }
    Real sum = 0;
    for (const auto& w : work) {
      const Real vol = piece_volume(w);
      if (vol == 0) continue;
      Real acc = 0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& b = rule.points[q];
        Vec3 x = Vec3::Zero();
        Real val = 0;
        for (int k = 0; k < 4; ++k) {
          x += b[k] * w.p[k];
          val += b[k] * w.u[k];
        }
        acc += rule.weights[q] * fn(c, x, val);
      }
      sum += acc * vol;
    }
    return sum;
  };
  Real total = 0;
  if (cells)
    for (Index c : *cells) total += visit(c);
  else
    for (Index c = 0; c < mesh.num_cells(); ++c) total += visit(c);
  return total;
}

Real positive_integral(const FeFunction& u) {
  const auto& mesh = *u.mesh;
  Real s = 0;
  for (Index c = 0; c < mesh.num_cells(); ++c)
    s += mesh.volume(c) * tet_positive_part_mean(u.cell_values(c), 0);
  return s;
}

Real positive_grad_energy(const FeFunction& u) {
  const auto& mesh = *u.mesh;
  Real s = 0;
  for (Index c = 0; c < mesh.num_cells(); ++c)
    s += mesh.volume(c) * u.gradient(c).squaredNorm() * tet_above_fraction(u.cell_values(c), 0);
  return s;
}

Real positive_lp_norm(const FeFunction& u, Real p) {
  const int degree = std::abs(p - std::round(p)) < 1e-14 ? int(std::round(p)) : 8;
  const Real s = integrate_levels(
      u, {0.0}, [p](Index, const Vec3&, Real v) { return v > 0 ? std::pow(v, p) : 0.0; },
      std::max(degree, 1));
  return std::pow(s, 1 / p);
}

// --- balls --------------------------------------------------------------------------

namespace {

enum class Side { Inside, Outside, Cut };

Side classify(const std::array<Vec3, 4>& p, const Vec3& center, Real rho) {
  bool all_in = true;
  Vec3 g = Vec3::Zero();
  for (const auto& v : p) {
    all_in = all_in && (v - center).norm() <= rho;
    g += v / 4;
  }
  if (all_in) return Side::Inside;
  Real rad = 0;
  for (const auto& v : p) rad = std::max(rad, (v - g).norm());
  if ((g - center).norm() - rad > rho) return Side::Outside;
  return Side::Cut;
}

Real tet_rule_sum(const TetPiece& t, Index c, const Integrand& fn, const TetRule& rule,
                  const Vec3* center, Real rho) {
  const Real vol = piece_volume(t);
  Real acc = 0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto& b = rule.points[q];
    Vec3 x = b[0] * t.p[0] + b[1] * t.p[1] + b[2] * t.p[2] + b[3] * t.p[3];
    if (center && (x - *center).norm() > rho) continue;
    acc += rule.weights[q] * fn(c, x);
  }
  return acc * vol;
}

Real ball_recurse(const TetPiece& t, Index c, const Vec3& center, Real rho, const Integrand& fn,
                  const TetRule& rule, int depth) {
  switch (classify(t.p, center, rho)) {
    case Side::Outside: return 0;
    case Side::Inside: return tet_rule_sum(t, c, fn, rule, nullptr, rho);
    case Side::Cut: break;
  }
  if (depth == 0) return tet_rule_sum(t, c, fn, rule, &center, rho);
  Real s = 0;
  for (const auto& child : refine_tet(t)) s += ball_recurse(child, c, center, rho, fn, rule, depth - 1);
  return s;
}

}  // namespace

Real ball_integral(const SimplicialMesh& mesh, const Vec3& center, Real rho, const Integrand& fn,
                   int degree, int depth) {
  const auto& rule = simplex_rule<3>(degree);
  Real s = 0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    TetPiece t;
    for (int k = 0; k < 4; ++k) t.p[k] = mesh.vertex(mesh.cell(c)[k]);
    s += ball_recurse(t, c, center, rho, fn, rule, depth);
  }
  return s;
}

Real ball_volume(const SimplicialMesh& mesh, const Vec3& center, Real rho) {
  return ball_integral(mesh, center, rho, [](Index, const Vec3&) { return 1.0; }, 1, 4);
}

std::vector<Index> cells_in_ball(const SimplicialMesh& mesh, const Vec3& center, Real rho) {
  std::vector<Index> out;
  for (Index c = 0; c < mesh.num_cells(); ++c)
    if ((mesh.centroid(c) - center).norm() <= rho) out.push_back(c);
  return out;
}

Real slope_fit(const std::vector<Real>& x, const std::vector<Real>& y) {
  require(x.size() == y.size() && x.size() >= 2, "slope_fit: need two or more points");
  const Real n = Real(x.size());
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, "slope_fit: values must be positive");
    const Real lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace nlab
