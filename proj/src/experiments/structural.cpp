#include "internal.hpp"
#include "nlab/lorentz.hpp"

#include <cmath>

namespace nlab::exp {

namespace {

Real rel(Real a, Real b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

VectorX random_nodal(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> U(-1, 1);
  VectorX v(n);
  for (Index i = 0; i < n; ++i) v[i] = U(rng);
  return v;
}

}  // namespace

// --- Lorentz engine -----------------------------------------------------------------

ExperimentReport lorentz_engine(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const Real tol = ctx.tolerance("closed_form_relative", 1e-12, rep);
  const Real eq_tol = ctx.tolerance("equimeasurability_relative", 1e-8, rep);
  const int n = ctx.option("resolution", 8);
  auto mesh = box_mesh(Vec3::Zero(), Vec3(2, 1, 1), n);
  rep.record_mesh(*mesh);

  const std::vector<std::pair<Real, Real>> specs{
      {1.5, 1}, {1.5, 2}, {2, 1}, {2, 3}, {3, 1}, {3, 1.5}, {1.5, INFINITY}, {2, INFINITY}, {3, INFINITY}};
  auto closed = [](Real E, Real p, Real q) {
    return std::isinf(q) ? std::pow(E, 1 / p) : std::pow(p / q, 1 / q) * std::pow(E, 1 / p);
  };

  // P0 indicator of a union of cells
  std::vector<Real> ind(mesh->num_cells(), 0.0);
  Real E = 0;
  for (Index c = 0; c < mesh->num_cells(); ++c)
    if (mesh->centroid(c).x() < 0.7) {
      ind[c] = 1;
      E += mesh->volume(c);
    }
  // P1 constant on the whole box, and a facet indicator on one face
  const FeFunction one = interpolate(mesh, [](const Vec3&) { return 1.0; });
  std::vector<Real> find(mesh->num_facets(), 0.0);
  Real Ef = 0;
  for (Index f = 0; f < mesh->num_facets(); ++f)
    if (mesh->facet(f).tag == 1) {
      find[f] = 1;
      Ef += mesh->facet(f).area;
    }
  Real worst = 0;
  Json rows = Json::array();
  for (auto [p, q] : specs) {
    const LorentzSpec ls(p, q);
    const Real a = lorentz_norm(*mesh, ScalarField::per_cell(ind), ls);
    const Real b = lorentz_norm(one, ls);
    const Real c = lorentz_norm(*mesh, ScalarField::per_facet(find), ls, Measure::Surface);
    const Real e1 = rel(a, closed(E, p, q)), e2 = rel(b, closed(mesh->total_volume(), p, q)),
               e3 = rel(c, closed(Ef, p, q));
    worst = std::max({worst, e1, e2, e3});
    rows.push_back({{"p", p}, {"q", std::isinf(q) ? Json("inf") : Json(q)}, {"cell_indicator", a},
                    {"p1_constant", b}, {"facet_indicator", c}});
  }
  rep.results["indicator_norms"] = rows;
  rep.results["indicator_measure"] = E;
  rep.results["worst_closed_form_error"] = worst;
  rep.expect_le("indicator closed forms", worst, tol);

  // equimeasurability: L^{p,p} = L^p
  std::mt19937_64 rng(ctx.seed);
  Real eq = 0;
  const int samples = ctx.option("equimeasurability_samples", 6);
  for (int k = 0; k < samples; ++k) {
    FeFunction u(mesh, random_nodal(mesh->num_vertices(), rng));
    if (k % 2 == 1)  // smooth profile with a zero crossing
      u = interpolate(mesh, [a = u.values[0]](const Vec3& x) {
        return std::sin(3 * x.x() + a) * std::cos(2 * x.y()) + 0.3 * x.z();
      });
    for (Real p : {1.0, 2.0, 1.5, 3.0}) {  // 1, 2, n/2, n
      eq = std::max(eq, rel(lorentz_norm(u, LorentzSpec(p, p)), lp_norm(u, p)));
      eq = std::max(eq, rel(lorentz_norm(u, LorentzSpec(p, p), Measure::Surface),
                            lp_norm(u, p, Region::boundary())));
    }
  }
  rep.results["worst_equimeasurability_error"] = eq;
  rep.expect_le("equimeasurability", eq, eq_tol);

  // rearrangement reproduces the distribution of a P0 field exactly
  const auto prof = decreasing_rearrangement(ind, [&] {
    std::vector<Real> m(mesh->num_cells());
    for (Index c = 0; c < mesh->num_cells(); ++c) m[c] = mesh->volume(c);
    return m;
  }());
  rep.expect_le("rearrangement support", rel(prof.support, E), tol);
  return rep;
}

// --- splitting ----------------------------------------------------------------------

ExperimentReport splitting_properties(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const Real pt = ctx.tolerance("pointwise", 1e-12, rep);
  const Real bt = ctx.tolerance("budget_relative", 1e-10, rep);
  const Real mt = ctx.tolerance("piece_mean", 1e-10, rep);
  const int count = ctx.option("functions", 50);
  const int n = ctx.option("resolution", 6);
  auto mesh = unit_cube(n);
  rep.record_mesh(*mesh);
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<Real> H(0.1, 2), R(1.5, 4);
  Real worst = 0, budget = 0, mean = 0;
  bool last = true, bound = true;
  int maxN = 0;
  for (int k = 0; k < count; ++k) {
    VectorX v = random_nodal(mesh->num_vertices(), rng);
    if (k % 5 == 4) v = (4 * v).array().round() / 4;  // plateaus
    if (k % 7 == 3) v.array() += 0.6;                  // mostly positive
    const FeFunction u(mesh, v);
    FeFunction u0 = u;
    u0.values.array() -= integral(u) / mesh->total_volume();
    std::vector<Real> h(mesh->num_cells());
    for (auto& x : h) x = H(rng);
    const ScalarField hf = ScalarField::per_cell(h);
    const Real hn = lp_norm(*mesh, hf, 3);
    const Real eps = hn / R(rng);
    for (bool mz : {false, true}) {
      const SplitResult s = mz ? split_mean_zero(u0, hf, eps) : split_plain(u, hf, eps);
      const SplitReport r = verify_split(s, 200, ctx.seed + k);
      worst = std::max(worst, r.worst_pointwise());
      budget = std::max(budget, r.budget_error);
      last = last && r.last_within;
      bound = bound && r.count_bound;
      if (mz) mean = std::max(mean, r.max_piece_mean);
      maxN = std::max(maxN, s.N);
    }
  }
  rep.inputs["functions"] = count;
  rep.results["worst_pointwise"] = worst;
  rep.results["worst_budget_error"] = budget;
  rep.results["worst_piece_mean"] = mean;
  rep.results["max_pieces"] = maxN;
  rep.expect_le("properties (a)-(h) pointwise", worst, pt);
  rep.expect_le("budgets equal eps^n", budget, bt);
  rep.expect("last budget within eps^n", last);
  rep.expect("piece count bound", bound);
  rep.expect_le("mean-zero pieces integrate to zero", mean, mt);
  return rep;
}

// --- subsolution rigidity -----------------------------------------------------------

ExperimentReport subsolution_rigidity(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const Real tol = ctx.tolerance("identity_relative", 1e-12, rep);
  const int n = ctx.option("resolution", 8);
  auto mesh = unit_cube(n);
  rep.record_mesh(*mesh);
  ProblemSpec spec;
  spec.mesh = mesh;
  spec.A = MatrixField::constant((Mat3() << 1, 0.4, 0, -0.1, 1, 0.2, 0, 0, 0.8).finished());
  spec.b = VectorField::analytic([](const Vec3& x) { return Vec3(std::sin(3 * x.y()), 0.5, -x.x()); });
  // polynomial data integrated exactly: integral f + integral g = -1.2 + 0.2 * 6 = 0
  spec.f = ScalarField::analytic([](const Vec3& x) { return x.x() - 1.7; });
  spec.g = ScalarField::constant(0.2);
  spec.F = VectorField::analytic([](const Vec3& x) { return Vec3(x.y(), std::cos(x.z()), 0); });
  spec = problem_or(ctx, mesh, spec);

  const System sys = assemble_forms(spec);
  const Real kscale = sys.K.cwiseAbs().sum() / sys.K.rows();
  const VectorX colsum = VectorX::Ones(sys.K.rows()).transpose() * sys.K;
  rep.results["column_sum_max"] = colsum.cwiseAbs().maxCoeff() / kscale;
  rep.results["load_sum"] = sys.load.sum();
  rep.expect_le("columns of K sum to zero", colsum.cwiseAbs().maxCoeff() / kscale, tol);
  rep.expect_le("discrete compatibility", std::abs(sys.load.sum()) / sys.load.cwiseAbs().sum(), tol);

  std::mt19937_64 rng(ctx.seed);
  Real worst = 0;
  int strict_sub = 0;
  for (int k = 0; k < 100; ++k) {
    const FeFunction u(mesh, random_nodal(mesh->num_vertices(), rng));
    const ResidualReport rr = residual_vector(spec, u);
    worst = std::max(worst, std::abs(rr.sum) / rr.r.cwiseAbs().sum());
    if (rr.subsolution && !rr.solution) ++strict_sub;
  }
  const FeFunction sol = solve_neumann(spec).solution;
  const ResidualReport rs = residual_vector(spec, sol);
  FeFunction shifted = sol;
  shifted.values.array() += 0.5;
  const ResidualReport rsh = residual_vector(spec, shifted);
  rep.results["worst_sum_identity"] = worst;
  rep.results["strict_subsolutions_found"] = strict_sub;
  rep.results["solution_residual"] = rs.max_abs;
  rep.expect_le("sum of residuals vanishes", worst, tol);
  rep.expect("no strict subsolution among random candidates", strict_sub == 0, strict_sub);
  rep.expect("solve gives a solution", rs.solution);
  rep.expect("shifted solution is neither sub- nor supersolution",
             !rsh.subsolution && !rsh.supersolution);

  // adjoint: residuals weighted by the positive kernel vector sum to zero
  const VectorX uhat = reduced_kernel(spec);
  ProblemSpec adj = spec;
  adj.variant = Variant::Adjoint;
  adj.F = {};
  adj.g = {};
  // shift f by a constant so that the uhat-weighted load vanishes
  const ScalarField f0 = ScalarField::analytic([](const Vec3& x) { return std::cos(3 * x.x()) + x.y(); });
  const VectorX l0 = assemble_load(*mesh, f0, {}, {}, Region::boundary(), spec.quad_degree);
  const VectorX l1 = assemble_load(*mesh, ScalarField::constant(1), {}, {}, Region::boundary(), spec.quad_degree);
  const Real alpha = uhat.dot(l0) / uhat.dot(l1);
  adj.f = ScalarField::analytic([alpha](const Vec3& x) { return std::cos(3 * x.x()) + x.y() - alpha; });
  Real worst_adj = 0;
  for (int k = 0; k < 20; ++k) {
    const FeFunction u(mesh, random_nodal(mesh->num_vertices(), rng));
    const ResidualReport rr = residual_vector(adj, u);
    worst_adj = std::max(worst_adj, std::abs(uhat.dot(rr.r)) / uhat.cwiseProduct(rr.r).cwiseAbs().sum());
  }
  rep.results["uhat_min"] = uhat.minCoeff();
  rep.results["worst_weighted_identity"] = worst_adj;
  rep.expect("kernel vector positive", uhat.minCoeff() > 0, uhat.minCoeff());
  rep.expect_le("adjoint: weighted residual sum vanishes", worst_adj, 1e3 * tol);
  return rep;
}

// --- condition checker --------------------------------------------------------------

ExperimentReport condition_checker(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const Real tol = ctx.tolerance("cone_relative", 1e-12, rep);
  const int n = ctx.option("resolution", 8);
  auto mesh = unit_cube(n);
  rep.record_mesh(*mesh);
  std::mt19937_64 rng(ctx.seed);

  auto cone = [&](const ProblemSpec& spec, const ConditionReport& cr, const std::string& name) {
    std::uniform_real_distribution<Real> U(0, 1);
    Real worst = 0, min_val = 1e300;
    for (int k = 0; k < 100; ++k) {
      VectorX a = VectorX::Zero(mesh->num_vertices());
      const Real density = U(rng);
      for (Index i = 0; i < a.size(); ++i)
        if (U(rng) < density) a[i] = U(rng);
      if (k == 0 && cr.argmin >= 0) a.setZero(), a[cr.argmin] = 1;
      const Real direct = condition_functional(spec, ConditionPair::BD, FeFunction(mesh, a));
      const Real combo = a.dot(cr.hat_values);
      // interior hats vanish up to roundoff, so scale by the largest hat value
      const Real scale = a.lpNorm<1>() * cr.hat_values.cwiseAbs().maxCoeff() + 1e-300;
      worst = std::max(worst, std::abs(direct - combo) / scale);
      min_val = std::min(min_val, direct / scale);
    }
    rep.results[name]["cone_worst"] = worst;
    rep.results[name]["cone_min_scaled_value"] = min_val;
    rep.expect_le(name + ": functional linear on the cone", worst, tol);
    if (cr.holds)
      rep.expect_ge(name + ": nonnegative on random cone elements", min_val, -tol);
    else
      rep.expect(name + ": counterexample in the cone", min_val < 0, min_val);
  };

  ProblemSpec half;
  half.mesh = mesh;
  half.b = VectorField::constant(Vec3(0, 0, 1));
  const ConditionReport hr = check_sign_condition(half, ConditionPair::BD);
  bool neg_on_bottom = true;
  for (Index i = 0; i < hr.hat_values.size(); ++i)
    if (hr.hat_values[i] < -hr.tolerance) neg_on_bottom = neg_on_bottom && mesh->vertex(i).z() == 0;
  rep.results["half_space"] = {{"holds", hr.holds}, {"min_value", hr.min_value},
                               {"argmin_height", mesh->vertex(hr.argmin).z()}};
  rep.expect("half-space drift fails", !hr.holds, hr.min_value);
  rep.expect("negative hats sit on the bottom face", neg_on_bottom);
  rep.expect("minimum on the bottom face", mesh->vertex(hr.argmin).z() == 0);
  cone(half, hr, "half_space");

  ProblemSpec pos;
  pos.mesh = mesh;
  pos.d = ScalarField::analytic([](const Vec3& x) { return x.x() * x.y(); });
  const ConditionReport pr = check_sign_condition(pos, ConditionPair::BD);
  rep.results["zero_drift"] = {{"holds", pr.holds}, {"min_value", pr.min_value}};
  rep.expect("b = 0, d >= 0 passes", pr.holds, pr.min_value);
  cone(pos, pr, "zero_drift");

  ProblemSpec radial;
  radial.mesh = mesh;
  radial.b = VectorField::analytic([](const Vec3& x) { return Vec3(x - Vec3::Constant(0.5)); });
  radial.d = ScalarField::constant(3);
  const ConditionReport rr = check_sign_condition(radial, ConditionPair::BD);
  rep.results["outward_drift"] = {{"holds", rr.holds}, {"min_value", rr.min_value}};
  rep.expect("outward drift with d = div b passes", rr.holds, rr.min_value);
  cone(radial, rr, "outward_drift");
  return rep;
}

// --- solvability --------------------------------------------------------------------

ExperimentReport neumann_solvability(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const Real tol = ctx.tolerance("residual", 1e-10, rep);
  const int n = ctx.option("resolution", 8);
  auto mesh = unit_cube(n);
  rep.record_mesh(*mesh);
  ProblemSpec s;
  s.mesh = mesh;
  s.A = MatrixField::constant((Mat3() << 1, 0.2, 0, 0.1, 1, 0, 0, 0, 1).finished());
  s.b = VectorField::constant(Vec3(0.2, 0, -0.1));
  s.c = VectorField::constant(Vec3(0, 0.3, 0));
  s.d = ScalarField::constant(1);
  s.f = ScalarField::analytic([](const Vec3& x) { return std::sin(4 * x.x()) + x.z(); });

  const SolveResult r1 = solve_neumann(s);
  rep.results["positive_d_residual"] = r1.residual;
  rep.expect_le("integral d > 0: residual", r1.residual, tol);

  ProblemSpec adj = s;
  adj.variant = Variant::Adjoint;
  const Real tdiff = (SparseMatrix(assemble_matrix(adj)) - SparseMatrix(assemble_matrix(s).transpose())).cwiseAbs().sum();
  rep.results["adjoint_transpose_difference"] = tdiff;
  rep.expect_le("adjoint matrix is the transpose", tdiff, 1e-12 * assemble_matrix(s).cwiseAbs().sum());

  ProblemSpec z = s;
  z.d = {};
  z.c = {};
  z.f = ScalarField::analytic([](const Vec3& x) { return x.x() - 0.5; });
  const SolveResult rz = solve_neumann(z);
  rep.results["zero_d_compatible"] = {{"residual", rz.residual}, {"multiplier", rz.multiplier}};
  rep.expect_le("integral d = 0, compatible: residual", rz.residual, tol);
  rep.expect_le("integral d = 0, compatible: multiplier", std::abs(rz.multiplier), tol);
  ProblemSpec zi = z;
  zi.f = ScalarField::constant(1);
  const SolveResult ri = solve_neumann(zi);
  rep.results["zero_d_incompatible"] = {{"multiplier", ri.multiplier}, {"compatibility", ri.compatibility}};
  rep.expect_le("incompatible data: multiplier is Comp1/|Omega|", std::abs(ri.multiplier - 1), 1e-10);

  // integral d = 0 with d != 0: c carries the divergence of d and vanishes on the boundary
  ProblemSpec red;
  red.mesh = mesh;
  red.c = VectorField::analytic([](const Vec3& x) { return Vec3((x.x() * x.x() - x.x()) / 2, 0, 0); });
  red.d = ScalarField::analytic([](const Vec3& x) { return x.x() - 0.5; });
  red.f = ScalarField::analytic([](const Vec3& x) { return x.y() - 0.5; });
  const SolveResult rr = solve_neumann(red);
  rep.results["reduced_route"] = {{"residual", rr.residual}, {"route", rr.route}, {"reduced", rr.reduced}};
  rep.expect("reduced route taken", rr.reduced);
  rep.expect_le("reduced route residual", rr.residual, tol);

  ProblemSpec neg = s;
  neg.d = ScalarField::constant(-1);
  bool rejected = false;
  try {
    solve_neumann(neg);
  } catch (const Error&) {
    rejected = true;
  }
  rep.expect("negative integral of d rejected", rejected);
  return rep;
}

// --- reflection ---------------------------------------------------------------------

ExperimentReport reflection_extension(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const int res = ctx.option("resolution", 8);
  GraphDomainSpec gs;
  gs.r = 1;
  gs.M = 0.4;
  gs.psi = [](Real x, Real y) { return 0.25 * x + 0.15 * std::abs(y); };
  auto upper = std::make_shared<const SimplicialMesh>(build_graph_domain_mesh(gs, res));
  rep.record_mesh(*upper);
  const ReflectedMesh R = reflect_mesh(*upper, ReflectionMap(gs));
  const MeshDiagnostics diag = verify_mesh(R.mesh);
  rep.results["reflected_cells"] = R.mesh.num_cells();
  rep.expect("reflected mesh valid", diag.ok());
  rep.expect_le("volume doubles", rel(R.mesh.total_volume(), 2 * upper->total_volume()), 1e-12);

  auto rmesh = std::make_shared<const SimplicialMesh>(R.mesh);
  std::mt19937_64 rng(ctx.seed);
  Real worst = 0, grad_ratio = 0;
  for (int k = 0; k < 10; ++k) {
    const FeFunction u(upper, random_nodal(upper->num_vertices(), rng));
    FeFunction ur = reflect_function(u, R);
    ur.mesh = rmesh;
    for (Real p : {2.0, 6.0})
      worst = std::max(worst, rel(std::pow(lp_norm(ur, p), p), 2 * std::pow(lp_norm(u, p), p)));
    grad_ratio = std::max(grad_ratio, std::pow(grad_lp_norm(ur, 2) / grad_lp_norm(u, 2), 2) / 2);
  }
  const Real jac = std::pow(1 + 2 * gs.M, 2);
  rep.results["lp_identity_error"] = worst;
  rep.results["gradient_energy_ratio"] = grad_ratio;
  rep.results["jacobian_bound"] = jac;
  rep.expect_le("L^p norms double exactly", worst, 1e-12);
  rep.expect_le("gradient energy controlled by the Jacobian", grad_ratio, jac);

  const MatrixField A = MatrixField::constant((Mat3() << 1, 0.2, 0, 0, 1.2, 0.1, 0, 0, 1).finished());
  const MatrixField Ar = reflect_field(*upper, A, R);
  const EllipticityReport er = check_ellipticity(R.mesh, Ar, 0, 1e300);
  rep.results["reflected_min_eigenvalue"] = er.min_lambda;
  rep.expect("reflected matrix stays elliptic", er.min_lambda > 0, er.min_lambda);
  return rep;
}

}  // namespace nlab::exp
