#include "internal.hpp"

#include <cmath>

namespace nlab::exp {

namespace {

// Points on the 1/4 lattice are vertices of every n = 4k cube mesh, so the same
// physical sources are used across refinements.
const std::vector<Vec3>& lattice_sources() {
  static const std::vector<Vec3> pts{{0.25, 0.25, 0.25}, {0.75, 0.5, 0.25}, {0.5, 0.75, 0.75},
                                     {0.25, 0.75, 0.5},  {0.75, 0.25, 0.75}, {0.5, 0.5, 0.5}};
  return pts;
}

ProblemSpec symmetric_problem(MeshPtr mesh) {
  ProblemSpec s;
  s.mesh = mesh;
  s.A = MatrixField::analytic([](const Vec3& x) {
    Mat3 A = Mat3::Identity();
    A(0, 1) = A(1, 0) = 0.2 * x.z();
    A(2, 2) = 1.5;
    return A;
  });
  s.d = ScalarField::constant(1);
  return s;
}

ProblemSpec nonsymmetric_problem(MeshPtr mesh) {
  ProblemSpec s;
  s.mesh = mesh;
  s.A = MatrixField::constant((Mat3() << 1, 0.3, 0, -0.2, 1, 0.1, 0, 0, 1.2).finished());
  s.b = VectorField::constant(Vec3(0.4, -0.3, 0.2));
  s.c = VectorField::analytic([](const Vec3& x) { return Vec3(-0.2, 0.3 * x.x(), 0.1); });
  s.d = ScalarField::constant(1.5);
  return s;
}

Real change(Real a, Real b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

GreenOptions options(const ExperimentContext& ctx) {
  GreenOptions o;
  o.jobs = ctx.jobs;
  o.eps_factor = ctx.option("eps_factor", 2.0);
  return o;
}

}  // namespace

ExperimentReport green_symmetry(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const Real exact_tol = ctx.tolerance("paired_relative", 1e-9, rep);
  const Real sep = ctx.option("separation", 0.3);
  const auto levels = ctx.levels({8, 12, 16});
  const GreenOptions opt = options(ctx);

  auto mesh = unit_cube(levels.front());
  rep.record_mesh(*mesh);
  const auto src = nearest_vertices(*mesh, lattice_sources());
  const SymmetryReport sym = check_symmetry(symmetric_problem(mesh), src, sep, opt);
  rep.results["symmetric"] = {{"paired_relative", sym.relative_paired()},
                              {"pointwise_relative", sym.relative_pointwise()},
                              {"pairs", sym.pairs}};
  rep.expect_le("symmetric A: paired values", sym.relative_paired(), exact_tol);

  std::vector<Real> ns_point, ns_paired, s_point;
  for (int n : levels) {
    auto m = unit_cube(n);
    rep.record_mesh(*m);
    const auto s = nearest_vertices(*m, lattice_sources());
    const SymmetryReport r = check_symmetry(nonsymmetric_problem(m), s, sep, opt);
    ns_point.push_back(r.relative_pointwise());
    ns_paired.push_back(r.relative_paired());
    s_point.push_back(check_symmetry(symmetric_problem(m), s, sep, opt).relative_pointwise());
  }
  rep.results["levels"] = levels;
  rep.results["nonsymmetric_pointwise"] = ns_point;
  rep.results["nonsymmetric_paired"] = ns_paired;
  rep.results["symmetric_pointwise"] = s_point;
  for (std::size_t i = 0; i < levels.size(); ++i)
    rep.expect_le("non-symmetric paired values n=" + std::to_string(levels[i]), ns_paired[i], exact_tol);
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    rep.expect("non-symmetric pointwise deviation decreases " + std::to_string(levels[i]) + "->" +
                   std::to_string(levels[i + 1]),
               ns_point[i + 1] < ns_point[i], ns_point[i + 1] / ns_point[i]);
  return rep;
}

ExperimentReport green_scaling(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const Real tol = ctx.tolerance("relative", 1e-9, rep);
  const int n = ctx.option("resolution", 8);
  auto mesh = unit_cube(n);
  rep.record_mesh(*mesh);
  const auto src = nearest_vertices(*mesh, lattice_sources());
  GreenOptions opt = options(ctx);
  for (const char* which : {"symmetric", "nonsymmetric"}) {
    const ProblemSpec spec = std::string(which) == "symmetric" ? symmetric_problem(mesh)
                                                                : nonsymmetric_problem(mesh);
    for (Real r : {0.5, 2.0}) {
      const ScalingReport s = check_green_scaling(spec, r, src, opt);
      const std::string key = std::string(which) + "_r" + (r < 1 ? "0.5" : "2");
      rep.results[key] = {{"relative_deviation", s.relative()}, {"constant_change", s.constant_change}};
      rep.expect_le(key + ": G = r^{2-n} G_r", s.relative(), tol);
      rep.expect_le(key + ": pointwise constant unchanged", s.constant_change, tol);
    }
  }
  // the d = 0 route rescales the same way
  ProblemSpec z;
  z.mesh = mesh;
  const ScalingReport sz = check_green_scaling(z, 2.0, src, opt);
  rep.results["mean_zero_r2"] = {{"relative_deviation", sz.relative()}};
  rep.expect_le("mean-zero route: G = r^{2-n} G_r", sz.relative(), tol);
  return rep;
}

ExperimentReport green_pointwise(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const auto levels = ctx.levels({8, 16});
  const Real factor = ctx.tolerance("constant_factor", 1.5, rep);
  const Real stab = ctx.tolerance("norm_stability", 0.5, rep);
  const Real ball = ctx.tolerance("ball_volume_error", 0.01, rep);
  GreenOptions opt = options(ctx);
  std::vector<Real> consts;
  std::vector<std::vector<GreenNorms>> norms;
  Json rows = Json::array();
  for (int n : levels) {
    auto mesh = unit_cube(n);
    rep.record_mesh(*mesh);
    ProblemSpec spec;
    spec.mesh = mesh;
    spec.d = ScalarField::constant(1);
    const auto src = nearest_vertices(*mesh, lattice_sources());
    const GreenTable t = green_table(spec, src, opt);
    consts.push_back(pointwise_bound_constant(t));
    norms.push_back(t.norms);
    Real ball_err = 0;
    for (std::size_t k = 0; k < t.sources.size(); ++k)
      ball_err = std::max(ball_err, t.ball_errors[k] / t.ball_volumes[k]);
    rep.expect_le("ball quadrature error n=" + std::to_string(n), ball_err, ball);
    rows.push_back(Json::parse(t.norms_json()));
    rep.tables["green_n" + std::to_string(n) + ".csv"] = t.to_csv();
  }
  rep.results["levels"] = levels;
  rep.results["pointwise_constants"] = consts;
  rep.results["norms"] = rows;
  for (std::size_t i = 0; i + 1 < consts.size(); ++i) {
    const Real f = std::max(consts[i] / consts[i + 1], consts[i + 1] / consts[i]);
    rep.expect_le("pointwise constant change factor", f, factor);
    for (std::size_t k = 0; k < norms[i].size(); ++k) {
      const GreenNorms &a = norms[i][k], &b = norms[i + 1][k];
      const std::string s = " source " + std::to_string(k);
      rep.expect_le("interior weak norm stable" + s, change(a.interior_weak, b.interior_weak), stab);
      rep.expect_le("gradient weak norm stable" + s, change(a.gradient_weak, b.gradient_weak), stab);
      rep.expect_le("boundary weak norm stable" + s, change(a.boundary_weak, b.boundary_weak), stab);
      rep.expect("norms finite" + s, std::isfinite(b.interior_weak) && std::isfinite(b.gradient_weak) &&
                                         std::isfinite(b.boundary_weak));
    }
  }
  return rep;
}

ExperimentReport green_representation(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const auto levels = ctx.levels({8, 16});
  const Real final_tol = ctx.tolerance("final_relative", 0.05, rep);
  const Real decay = ctx.tolerance("min_decrease", 2, rep);
  const Real pair_tol = ctx.tolerance("pairing_relative", 1e-9, rep);
  GreenOptions opt = options(ctx);
  opt.norms = false;
  const ScalarField f = ScalarField::analytic([](const Vec3& x) {
    return std::cos(kPi * x.x()) * std::exp(x.y()) + x.z() * x.z();
  });
  std::vector<Real> errs;
  for (int n : levels) {
    auto mesh = unit_cube(n);
    rep.record_mesh(*mesh);
    const ProblemSpec spec = nonsymmetric_problem(mesh);
    const auto src = nearest_vertices(*mesh, lattice_sources());
    const GreenTable t = green_table(spec, src, opt);
    const auto rep_v = represent_solution(t, f, {}, {}, 6);
    const auto dir_v = transposed_solution_at_sources(spec, t, f, {}, {});
    Real err = 0, scale = 0;
    for (std::size_t k = 0; k < src.size(); ++k) {
      err = std::max(err, std::abs(rep_v[k] - dir_v[k]));
      scale = std::max(scale, std::abs(dir_v[k]));
    }
    errs.push_back(err / scale);
  }
  rep.results["levels"] = levels;
  rep.results["relative_errors"] = errs;
  rep.expect_le("relative error at finest level", errs.back(), final_tol);
  for (std::size_t i = 0; i + 1 < errs.size(); ++i)
    rep.expect_ge("error decrease " + std::to_string(levels[i]) + "->" + std::to_string(levels[i + 1]),
                  errs[i] / errs[i + 1], decay);

  // duality pairing on random source pairs
  auto mesh = unit_cube(levels.front());
  std::mt19937_64 rng(ctx.seed);
  std::vector<Index> interior;
  for (Index i = 0; i < mesh->num_vertices(); ++i) {
    const Vec3& x = mesh->vertex(i);
    if ((x.array() > 0.1).all() && (x.array() < 0.9).all()) interior.push_back(i);
  }
  std::shuffle(interior.begin(), interior.end(), rng);
  std::vector<Index> src(interior.begin(), interior.begin() + 5);  // 10 unordered pairs
  const SymmetryReport s = check_symmetry(nonsymmetric_problem(mesh), src, 0, opt);
  rep.results["pairing_relative"] = s.relative_paired();
  rep.results["pairing_sources"] = src;
  rep.expect_le("duality pairing", s.relative_paired(), pair_tol);
  return rep;
}

}  // namespace nlab::exp
