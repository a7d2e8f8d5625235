#include "nlab/green.hpp"

#include "nlab/geometry.hpp"
#include "nlab/lorentz.hpp"
#include "nlab/parallel.hpp"

#include "json.hpp"

#include <sstream>

namespace nlab {

namespace {

// Sub-tetrahedron with physical corners and the parent's barycentric
// coordinates at those corners (columns).
struct SubTet {
  std::array<Vec3, 4> p;
  Eigen::Matrix4d bary;
};

Real subtet_volume(const SubTet& s) {
  return std::abs(tet_signed_volume(s.p[0], s.p[1], s.p[2], s.p[3]));
}

std::array<SubTet, 8> refine(const SubTet& t) {
  // Midpoint index pairs: 4=01 5=02 6=03 7=12 8=13 9=23.
  std::array<Vec3, 10> p;
  Eigen::Matrix<Real, 4, 10> b;
  for (int i = 0; i < 4; ++i) {
    p[i] = t.p[i];
    b.col(i) = t.bary.col(i);
  }
  const int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (int k = 0; k < 6; ++k) {
    p[4 + k] = 0.5 * (t.p[pairs[k][0]] + t.p[pairs[k][1]]);
    b.col(4 + k) = 0.5 * (t.bary.col(pairs[k][0]) + t.bary.col(pairs[k][1]));
  }
  // Four corners plus the octahedron split along the 02-13 diagonal.
  const int idx[8][4] = {{0, 4, 5, 6}, {4, 1, 7, 8}, {5, 7, 2, 9}, {6, 8, 9, 3},
                         {5, 8, 4, 7}, {5, 8, 7, 9}, {5, 8, 9, 6}, {5, 8, 6, 4}};
  std::array<SubTet, 8> out;
  for (int s = 0; s < 8; ++s)
    for (int i = 0; i < 4; ++i) {
      out[s].p[i] = p[idx[s][i]];
      out[s].bary.col(i) = b.col(idx[s][i]);
    }
  return out;
}

enum class Position { Inside, Outside, Cut };

Position classify(const std::array<Vec3, 4>& p, const Vec3& y, Real eps) {
  bool all_in = true;
  for (const auto& v : p) all_in = all_in && (v - y).norm() <= eps;
  if (all_in) return Position::Inside;
  const Vec3 c = (p[0] + p[1] + p[2] + p[3]) / 4;
  Real rad = 0;
  for (const auto& v : p) rad = std::max(rad, (v - c).norm());
  if ((c - y).norm() - rad > eps) return Position::Outside;
  return Position::Cut;
}

// Adds the integral of chi_B * lambda over the subtet into w; coarse receives
// the estimate with one refinement level less.
void integrate_ball(const SubTet& t, const Vec3& y, Real eps, int depth, Eigen::Vector4d& w,
                    Eigen::Vector4d& coarse) {
  const Real V = subtet_volume(t);
  const auto pos = classify(t.p, y, eps);
  if (pos == Position::Outside) return;
  if (pos == Position::Inside) {
    const Eigen::Vector4d mean = t.bary.rowwise().mean();
    w += V * mean;
    coarse += V * mean;
    return;
  }
  const auto& rule = simplex_rule<3>(6);
  auto leaf = [&](const SubTet& s) {
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    const Real Vs = subtet_volume(s);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& l = rule.points[q];
      const Vec3 x = l[0] * s.p[0] + l[1] * s.p[1] + l[2] * s.p[2] + l[3] * s.p[3];
      if ((x - y).norm() < eps) acc += rule.weights[q] * Vs * (s.bary * l);
    }
    return acc;
  };
  if (depth == 0) {
    const Eigen::Vector4d a = leaf(t);
    w += a;
    coarse += a;
    return;
  }
  if (depth == 1) coarse += leaf(t);
  Eigen::Vector4d dummy = Eigen::Vector4d::Zero();
  for (const auto& s : refine(t))
    integrate_ball(s, y, eps, depth - 1, w, depth == 1 ? dummy : coarse);
}

}  // namespace

MollifiedDelta mollified_delta(const SimplicialMesh& mesh, const Vec3& y, Real eps, int depth) {
  require(eps > 0 && std::isfinite(eps), "mollified_delta: eps must be positive");
  MollifiedDelta out;
  out.load = VectorX::Zero(mesh.num_vertices());
  Real coarse_total = 0;
  bool inside = false;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    SubTet s;
    for (int i = 0; i < 4; ++i) s.p[i] = mesh.vertex(t[i]);
    if (!inside) {
      const auto b = barycentric(mesh, c, y);
      inside = b.minCoeff() >= -1e-12;
    }
    if (classify(s.p, y, eps) == Position::Outside) continue;
    s.bary = Eigen::Matrix4d::Identity();
    Eigen::Vector4d w = Eigen::Vector4d::Zero(), coarse = Eigen::Vector4d::Zero();
    integrate_ball(s, y, eps, depth, w, coarse);
    if (w.sum() <= 0) continue;
    ++out.cells;
    for (int i = 0; i < 4; ++i) out.load[t[i]] += w[i];
    coarse_total += coarse.sum();
  }
  if (!inside) throw OutsideDomain("mollified_delta: source point lies outside the domain");
  out.ball_volume = out.load.sum();
  require(out.ball_volume > 0, "mollified_delta: empty intersection with the ball");
  out.volume_error = std::abs(out.ball_volume - coarse_total);
  out.load /= out.ball_volume;
  return out;
}

Real default_epsilon(const SimplicialMesh& mesh, Index vertex, Real factor) {
  return factor * mesh.local_size(vertex);
}

GreenNorms green_norms(const FeFunction& G, const Vec3& y, Real eps) {
  const auto& mesh = *G.mesh;
  const int n = mesh.dim();
  GreenNorms r;
  r.interior_weak = lorentz_norm(G, LorentzSpec::weak(Real(n) / (n - 2)));
  r.gradient_weak = gradient_lorentz_norm(G, LorentzSpec::weak(Real(n) / (n - 1)));
  r.boundary_weak = lorentz_norm(G, LorentzSpec::weak(Real(n - 1) / (n - 2)), Measure::Surface);
  for (Index j = 0; j < mesh.num_vertices(); ++j) {
    const Real dist = (mesh.vertex(j) - y).norm();
    if (dist < 2 * eps) continue;
    r.pointwise = std::max(r.pointwise, std::pow(dist, n - 2) * std::abs(G.values[j]));
  }
  return r;
}

GreenTable green_table(const NeumannSolver& solver, const std::vector<Index>& sources,
                       const GreenOptions& opt) {
  const MeshPtr mesh = solver.mesh();
  const Index nv = mesh->num_vertices(), ns = Index(sources.size());
  GreenTable t;
  t.mesh = mesh;
  t.sources = sources;
  t.mean_zero = solver.constrained();
  t.adjoint = opt.adjoint;
  t.G.resize(nv, ns);
  t.Phi.resize(nv, ns);
  t.eps.resize(ns);
  t.points.resize(ns);
  t.residuals.resize(ns);
  t.ball_volumes.resize(ns);
  t.ball_errors.resize(ns);
  const Real vol = solver.volume();

  parallel_for(ns, opt.jobs, [&](Index k) {
    require(sources[k] >= 0 && sources[k] < nv, "green_table: source vertex out of range");
    t.points[k] = mesh->vertex(sources[k]);
    t.eps[k] = opt.eps ? *opt.eps : default_epsilon(*mesh, sources[k], opt.eps_factor);
    const auto md = mollified_delta(*mesh, t.points[k], t.eps[k], opt.depth);
    t.Phi.col(k) = md.load;
    t.ball_volumes[k] = md.ball_volume;
    t.ball_errors[k] = md.volume_error;
  });
  // The factorisation is shared; solves run one after another.
  for (Index k = 0; k < ns; ++k) {
    VectorX load = t.Phi.col(k);
    if (t.mean_zero) load -= solver.mass() / vol;
    const auto r = opt.adjoint ? solver.solve_transpose(load) : solver.solve(load);
    t.G.col(k) = r.solution.values;
    t.residuals[k] = r.residual;
  }
  if (opt.norms) {
    t.norms.resize(ns);
    parallel_for(ns, opt.jobs,
                 [&](Index k) { t.norms[k] = green_norms(t.column(k), t.points[k], t.eps[k]); });
  }
  return t;
}

GreenTable green_table(const ProblemSpec& spec, const std::vector<Index>& sources,
                       const GreenOptions& opt) {
  ProblemSpec direct = spec;
  if (direct.variant == Variant::Adjoint) direct.variant = Variant::Direct;
  NeumannSolver solver(direct);
  return green_table(solver, sources, opt);
}

FeFunction green_column(const ProblemSpec& spec, const Vec3& y, Real eps, bool adjoint) {
  ProblemSpec direct = spec;
  if (direct.variant == Variant::Adjoint) direct.variant = Variant::Direct;
  NeumannSolver solver(direct);
  VectorX load = mollified_delta(*spec.mesh, y, eps).load;
  if (solver.constrained()) load -= solver.mass() / solver.volume();
  return (adjoint ? solver.solve_transpose(load) : solver.solve(load)).solution;
}

Real pointwise_bound_constant(const GreenTable& table) {
  require(!table.sources.empty(), "pointwise_bound_constant: empty table");
  Real c = 0;
  for (std::size_t k = 0; k < table.sources.size(); ++k) {
    if (!table.norms.empty()) {
      c = std::max(c, table.norms[k].pointwise);
      continue;
    }
    c = std::max(c, green_norms(table.column(Index(k)), table.points[k], table.eps[k]).pointwise);
  }
  return c;
}

std::vector<Real> represent_solution(const GreenTable& table, const ScalarField& f,
                                     const VectorField& F, const ScalarField& g, int degree) {
  // Each quadrature against G(., y_k) is exactly the column dotted with the data load.
  const VectorX load = assemble_load(*table.mesh, f, F, g, Region::boundary(), degree);
  std::vector<Real> v(table.sources.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = table.G.col(Index(k)).dot(load);
  return v;
}

std::vector<Real> transposed_solution_at_sources(const ProblemSpec& spec, const GreenTable& table,
                                                 const ScalarField& f, const VectorField& F,
                                                 const ScalarField& g) {
  ProblemSpec data = spec;
  data.variant = Variant::Direct;
  data.f = f;
  data.F = F;
  data.g = g;
  data.gamma_tags.reset();
  NeumannSolver solver(data);
  const VectorX load = assemble_load(data);
  const auto r = table.adjoint ? solver.solve(load) : solver.solve_transpose(load);
  std::vector<Real> v(table.sources.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = r.solution.values[table.sources[k]];
  return v;
}

SymmetryReport check_symmetry(const ProblemSpec& spec, const std::vector<Index>& sources,
                              Real separation, const GreenOptions& opt) {
  ProblemSpec direct = spec;
  direct.variant = Variant::Direct;
  NeumannSolver solver(direct);
  GreenOptions o = opt;
  o.norms = false;
  o.adjoint = false;
  const GreenTable G = green_table(solver, sources, o);
  o.adjoint = true;
  const GreenTable Gs = green_table(solver, sources, o);
  SymmetryReport r;
  r.scale = std::max(G.G.cwiseAbs().maxCoeff(), Gs.G.cwiseAbs().maxCoeff());
  const Index ns = Index(sources.size());
  for (Index a = 0; a < ns; ++a)
    for (Index b = 0; b < ns; ++b) {
      r.paired = std::max(r.paired, std::abs(G.Phi.col(a).dot(G.G.col(b)) -
                                             Gs.Phi.col(b).dot(Gs.G.col(a))));
      if ((G.points[a] - G.points[b]).norm() < separation) continue;
      ++r.pairs;
      r.pointwise = std::max(r.pointwise, std::abs(G.G(sources[a], b) - Gs.G(sources[b], a)));
    }
  return r;
}

ScalingReport check_green_scaling(const ProblemSpec& spec, Real r, const std::vector<Index>& sources,
                                  const GreenOptions& opt) {
  require(r > 0 && std::isfinite(r), "check_green_scaling: r must be positive");
  GreenOptions o = opt;
  const GreenTable G = green_table(spec, sources, o);
  if (o.eps) o.eps = *o.eps / r;
  const ProblemSpec scaled = scale_problem(spec, r);
  const GreenTable Gr = green_table(scaled, sources, o);
  const int n = spec.mesh->dim();
  ScalingReport rep;
  rep.scale = G.G.cwiseAbs().maxCoeff();
  rep.deviation = (G.G - std::pow(r, 2 - n) * Gr.G).cwiseAbs().maxCoeff();
  if (!G.norms.empty()) {
    const Real c0 = pointwise_bound_constant(G), c1 = pointwise_bound_constant(Gr);
    rep.constant_change = std::abs(c1 - c0) / std::max(c0, std::numeric_limits<Real>::min());
  }
  return rep;
}

std::vector<Index> nearest_vertices(const SimplicialMesh& mesh, const std::vector<Vec3>& points) {
  std::vector<Index> out;
  for (const auto& x : points) {
    Index best = 0;
    Real bd = std::numeric_limits<Real>::infinity();
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
      const Real d = (mesh.vertex(v) - x).squaredNorm();
      if (d < bd) {
        bd = d;
        best = v;
      }
    }
    out.push_back(best);
  }
  return out;
}

std::string GreenTable::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "x_index,y_index,value\n";
  for (Index k = 0; k < G.cols(); ++k)
    for (Index j = 0; j < G.rows(); ++j) os << j << ',' << sources[k] << ',' << G(j, k) << '\n';
  return os.str();
}

std::string GreenTable::norms_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t k = 0; k < sources.size(); ++k) {
    nlohmann::json e{{"source", sources[k]},
                     {"point", {points[k].x(), points[k].y(), points[k].z()}},
                     {"eps", eps[k]},
                     {"residual", residuals[k]},
                     {"ball_volume", ball_volumes[k]},
                     {"ball_volume_error", ball_errors[k]}};
    if (!norms.empty()) {
      e["interior_weak"] = norms[k].interior_weak;
      e["gradient_weak"] = norms[k].gradient_weak;
      e["boundary_weak"] = norms[k].boundary_weak;
      e["pointwise_constant"] = norms[k].pointwise;
    }
    out.push_back(std::move(e));
  }
  return out.dump(2);
}

}  // namespace nlab
