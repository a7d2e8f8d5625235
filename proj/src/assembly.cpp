#include "nlab/assembly.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <numeric>

namespace nlab {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Direct: return "direct";
    case Variant::Adjoint: return "adjoint";
    case Variant::ReducedDrift: return "reduced";
  }
  return "?";
}

Region ProblemSpec::gamma() const {
  if (!gamma_tags) return Region::boundary();
  return Region::boundary_tags(*mesh, *gamma_tags);
}

namespace {

// Facet mask of Gamma; an explicit tag list matching nothing gives an empty mask.
std::vector<char> gamma_mask(const SimplicialMesh& mesh, const std::optional<std::vector<int>>& tags) {
  std::vector<char> mask(mesh.num_facets(), 1);
  if (!tags) return mask;
  for (Index f = 0; f < mesh.num_facets(); ++f)
    mask[f] = std::find(tags->begin(), tags->end(), mesh.facet(f).tag) != tags->end();
  return mask;
}

template <typename V>
Field<V> scaled(const Field<V>& f, Real s, Real r) {
  Field<V> out;
  switch (f.kind()) {
    case Field<V>::Kind::Zero: out = f; break;
    case Field<V>::Kind::Constant: out = Field<V>::constant(V(s * f.constant_value())); break;
    case Field<V>::Kind::Analytic: {
      auto fn = f.function();
      out = Field<V>::analytic([fn, s, r](const Vec3& x) -> V { return V(s * fn(r * x)); });
      break;
    }
    case Field<V>::Kind::PerCell:
    case Field<V>::Kind::PerFacet: {
      std::vector<V> v = f.values();
      for (auto& x : v) x = V(s * x);
      out = f.kind() == Field<V>::Kind::PerCell ? Field<V>::per_cell(std::move(v))
                                                 : Field<V>::per_facet(std::move(v));
      break;
    }
  }
  out.role = f.role;
  return out;
}

VectorField difference(const SimplicialMesh& mesh, const VectorField& b, const VectorField& c) {
  using K = VectorField::Kind;
  if (c.is_zero()) return b;
  if (b.kind() == K::PerFacet || c.kind() == K::PerFacet)
    throw Error("drift fields must live on cells");
  if (b.kind() == K::Analytic || c.kind() == K::Analytic) {
    if (b.kind() == K::PerCell || c.kind() == K::PerCell)
      throw Error("cannot combine per-cell and analytic drift fields");
    return VectorField::analytic([b, c](const Vec3& x) { return Vec3(b.at_cell(0, x) - c.at_cell(0, x)); });
  }
  if (b.kind() != K::PerCell && c.kind() != K::PerCell)
    return VectorField::constant(b.constant_value() - c.constant_value());
  auto bv = sample_cells(mesh, b), cv = sample_cells(mesh, c);
  for (std::size_t i = 0; i < bv.size(); ++i) bv[i] -= cv[i];
  return VectorField::per_cell(std::move(bv));
}

bool all_piecewise(const EffectiveCoefficients& e) {
  return e.A.piecewise_constant() && e.b.piecewise_constant() && e.c.piecewise_constant() &&
         e.d.piecewise_constant();
}

SparseMatrix assemble_with(const SimplicialMesh& mesh, const EffectiveCoefficients& e, int degree) {
  const auto& rule = simplex_rule<3>(all_piecewise(e) ? 2 : degree);
  const bool useA = !e.A.is_zero(), useb = !e.b.is_zero(), usec = !e.c.is_zero(),
             used = !e.d.is_zero();
  std::vector<Triplet> trip;
  trip.reserve(16 * mesh.num_cells());
  for (Index cell = 0; cell < mesh.num_cells(); ++cell) {
    const auto& t = mesh.cell(cell);
    const auto& G = mesh.grads(cell);
    const Real V = mesh.volume(cell);
    Eigen::Matrix4d Ke = Eigen::Matrix4d::Zero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& lam = rule.points[q];
      const Vec3 x = lam[0] * mesh.vertex(t[0]) + lam[1] * mesh.vertex(t[1]) +
                     lam[2] * mesh.vertex(t[2]) + lam[3] * mesh.vertex(t[3]);
      const Real w = rule.weights[q] * V;
      Mat3 A = Mat3::Zero();
      if (useA) A = e.transpose_A ? Mat3(e.A.at_cell(cell, x).transpose()) : e.A.at_cell(cell, x);
      const Vec3 b = useb ? e.b.at_cell(cell, x) : Vec3::Zero();
      const Vec3 c = usec ? e.c.at_cell(cell, x) : Vec3::Zero();
      const Real d = used ? e.d.at_cell(cell, x) : 0.0;
      for (int j = 0; j < 4; ++j) {
        const Vec3 AG = A * G[j];
        const Real cg = c.dot(G[j]);
        for (int i = 0; i < 4; ++i)
          Ke(i, j) += w * (AG.dot(G[i]) + lam[j] * b.dot(G[i]) + lam[i] * cg + d * lam[i] * lam[j]);
      }
    }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) trip.emplace_back(int(t[i]), int(t[j]), Ke(i, j));
  }
  SparseMatrix K(mesh.num_vertices(), mesh.num_vertices());
  K.setFromTriplets(trip.begin(), trip.end());
  K.makeCompressed();
  return K;
}

VectorX load_with(const SimplicialMesh& mesh, const ScalarField& f, const VectorField& F,
                  const ScalarField& g, const std::vector<char>& gmask, int degree) {
  VectorX L = VectorX::Zero(mesh.num_vertices());
  if (!f.is_zero() || !F.is_zero()) {
    const auto& rule = simplex_rule<3>(f.piecewise_constant() && F.piecewise_constant() ? 1 : degree);
    for (Index cell = 0; cell < mesh.num_cells(); ++cell) {
      const auto& t = mesh.cell(cell);
      const auto& G = mesh.grads(cell);
      const Real V = mesh.volume(cell);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& lam = rule.points[q];
        const Vec3 x = lam[0] * mesh.vertex(t[0]) + lam[1] * mesh.vertex(t[1]) +
                       lam[2] * mesh.vertex(t[2]) + lam[3] * mesh.vertex(t[3]);
        const Real w = rule.weights[q] * V;
        const Real fv = f.at_cell(cell, x);
        const Vec3 Fv = F.is_zero() ? Vec3::Zero() : F.at_cell(cell, x);
        for (int i = 0; i < 4; ++i) L[t[i]] += w * (fv * lam[i] + Fv.dot(G[i]));
      }
    }
  }
  if (!g.is_zero()) {
    const auto& rule = simplex_rule<2>(g.piecewise_constant() ? 1 : degree);
    for (Index fc = 0; fc < mesh.num_facets(); ++fc) {
      if (!gmask[fc]) continue;
      const auto& fa = mesh.facet(fc);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& lam = rule.points[q];
        const Vec3 x = lam[0] * mesh.vertex(fa.v[0]) + lam[1] * mesh.vertex(fa.v[1]) +
                       lam[2] * mesh.vertex(fa.v[2]);
        const Real w = rule.weights[q] * fa.area * g.at_facet(fc, x);
        for (int i = 0; i < 3; ++i) L[fa.v[i]] += w * lam[i];
      }
    }
  }
  return L;
}

// Per-hat values of phi -> integral of b . grad phi + d phi.
VectorX hat_functional(const SimplicialMesh& mesh, const VectorField& b, const ScalarField& d,
                       int degree, VectorX* abs_scale = nullptr) {
  VectorX v = VectorX::Zero(mesh.num_vertices());
  if (abs_scale) *abs_scale = VectorX::Zero(mesh.num_vertices());
  const auto& rule = simplex_rule<3>(b.piecewise_constant() && d.piecewise_constant() ? 1 : degree);
  for (Index cell = 0; cell < mesh.num_cells(); ++cell) {
    const auto& t = mesh.cell(cell);
    const auto& G = mesh.grads(cell);
    const Real V = mesh.volume(cell);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& lam = rule.points[q];
      const Vec3 x = lam[0] * mesh.vertex(t[0]) + lam[1] * mesh.vertex(t[1]) +
                     lam[2] * mesh.vertex(t[2]) + lam[3] * mesh.vertex(t[3]);
      const Real w = rule.weights[q] * V;
      const Vec3 bv = b.is_zero() ? Vec3::Zero() : b.at_cell(cell, x);
      const Real dv = d.at_cell(cell, x);
      for (int i = 0; i < 4; ++i) {
        v[t[i]] += w * (bv.dot(G[i]) + dv * lam[i]);
        if (abs_scale) (*abs_scale)[t[i]] += w * (std::abs(bv.dot(G[i])) + std::abs(dv) * lam[i]);
      }
    }
  }
  return v;
}

Real integral_of(const SimplicialMesh& mesh, const ScalarField& d, int degree, bool absolute) {
  if (d.is_zero()) return 0;
  return integrate(
      mesh, [&](Index c, const Vec3& x) {
        const Real v = d.at_cell(c, x);
        return absolute ? std::abs(v) : v;
      },
      d.piecewise_constant() ? 1 : degree);
}

}  // namespace

EffectiveCoefficients effective(const ProblemSpec& s) {
  EffectiveCoefficients e;
  switch (s.variant) {
    case Variant::Direct: e = {s.A, s.b, s.c, s.d, false}; break;
    case Variant::Adjoint: e = {s.A, s.c, s.b, s.d, true}; break;
    case Variant::ReducedDrift:
      e = {s.A, difference(*s.mesh, s.b, s.c), VectorField::zero(), ScalarField::zero(), false};
      break;
  }
  return e;
}

SparseMatrix assemble_matrix(const ProblemSpec& spec) {
  require(spec.mesh != nullptr, "problem has no mesh");
  return assemble_with(*spec.mesh, effective(spec), spec.quad_degree);
}

VectorX assemble_load(const SimplicialMesh& mesh, const ScalarField& f, const VectorField& F,
                      const ScalarField& g, const Region& gamma, int degree) {
  std::vector<char> mask(mesh.num_facets(), gamma.ids.empty() ? 1 : 0);
  for (Index fc : gamma.ids) mask[fc] = 1;
  return load_with(mesh, f, F, g, mask, degree);
}

VectorX assemble_load(const ProblemSpec& spec) {
  require(spec.mesh != nullptr, "problem has no mesh");
  return load_with(*spec.mesh, spec.f, spec.F, spec.g, gamma_mask(*spec.mesh, spec.gamma_tags),
                   spec.quad_degree);
}

System assemble_forms(const ProblemSpec& spec) {
  System s;
  s.K = assemble_matrix(spec);
  s.load = assemble_load(spec);
  s.mass = hat_integrals(*spec.mesh);
  s.volume = spec.mesh->total_volume();
  const auto ell = check_ellipticity(*spec.mesh, spec.A, spec.lambda, spec.Lambda);
  if (!ell.ok)
    s.warnings.push_back("A violates the ellipticity bounds: min eigenvalue " +
                         std::to_string(ell.min_lambda) + ", max norm " +
                         std::to_string(ell.max_norm));
  return s;
}

IntegralD integral_d(const ProblemSpec& spec) {
  IntegralD r;
  r.value = integral_of(*spec.mesh, spec.d, spec.quad_degree, false);
  const Real vol = spec.mesh->total_volume();
  const int n = spec.mesh->dim();
  r.delta0 = std::pow(vol, 2.0 / n - 1.0) * r.value;
  return r;
}

ConditionReport check_sign_condition(const ProblemSpec& spec, ConditionPair pair) {
  const auto& mesh = *spec.mesh;
  const VectorField& b = pair == ConditionPair::BD ? spec.b : spec.c;
  ConditionReport r;
  r.pair = pair;
  VectorX scale;
  r.hat_values = hat_functional(mesh, b, spec.d, spec.quad_degree, &scale);
  r.tolerance = 1e-12 * std::max(scale.maxCoeff(), std::numeric_limits<Real>::min());
  r.min_value = r.hat_values.minCoeff(&r.argmin);
  r.sum = r.hat_values.sum();
  const auto id = integral_d(spec);
  r.integral_d = id.value;
  r.delta0 = id.delta0;
  r.holds = r.min_value >= -r.tolerance;

  r.cell_div.assign(mesh.num_cells(), 0.0);
  if (b.kind() == VectorField::Kind::Analytic) {
    for (Index c = 0; c < mesh.num_cells(); ++c) {
      const Vec3 x = mesh.centroid(c);
      const Real h = 1e-5 * std::cbrt(mesh.volume(c));
      Real div = 0;
      for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = h;
        div += (b.at_cell(c, x + e)[k] - b.at_cell(c, x - e)[k]) / (2 * h);
      }
      r.cell_div[c] = div;
    }
  }
  r.max_div = r.cell_div.empty() ? 0 : *std::max_element(r.cell_div.begin(), r.cell_div.end());
  r.facet_flux.resize(mesh.num_facets());
  r.min_flux = std::numeric_limits<Real>::infinity();
  for (Index f = 0; f < mesh.num_facets(); ++f) {
    const auto& fa = mesh.facet(f);
    const Vec3 bv = b.is_zero() ? Vec3::Zero() : b.at_cell(fa.cell, mesh.facet_centroid(f));
    r.facet_flux[f] = bv.dot(fa.normal);
    r.min_flux = std::min(r.min_flux, r.facet_flux[f]);
  }
  if (mesh.num_facets() == 0) r.min_flux = 0;
  return r;
}

Real condition_functional(const ProblemSpec& spec, ConditionPair pair, const FeFunction& phi) {
  const auto& mesh = *spec.mesh;
  const VectorField& b = pair == ConditionPair::BD ? spec.b : spec.c;
  return integrate(
      mesh,
      [&](Index c, const Vec3& x) {
        const Vec3 bv = b.is_zero() ? Vec3::Zero() : b.at_cell(c, x);
        return bv.dot(phi.gradient(c)) + spec.d.at_cell(c, x) * phi.evaluate_in_cell(c, x);
      },
      std::max(spec.quad_degree, 2));
}

// ----------------------------------------------------------------------------

NeumannSolver::NeumannSolver(const ProblemSpec& spec) : mesh_(spec.mesh) {
  require(mesh_ != nullptr, "problem has no mesh");
  require(spec.full_boundary(), "Neumann solver needs Gamma to be the whole boundary");
  const auto& mesh = *mesh_;
  m_ = hat_integrals(mesh);
  volume_ = mesh.total_volume();
  const Real id = integral_of(mesh, spec.d, spec.quad_degree, false);
  const Real idabs = integral_of(mesh, spec.d, spec.quad_degree, true);
  if (id < -1e-10 * idabs) throw Error("integral of d is negative: " + std::to_string(id));
  constrained_ = std::abs(id) <= 1e-10 * idabs || spec.variant == Variant::ReducedDrift;

  if (constrained_ && spec.variant != Variant::ReducedDrift) {
    const auto e = effective(spec);
    if (!e.c.is_zero() || !e.d.is_zero()) {
      VectorX scale;
      const VectorX w = hat_functional(mesh, e.c, e.d, spec.quad_degree, &scale);
      const Real tol = 1e-10 * std::max(scale.maxCoeff(), std::numeric_limits<Real>::min());
      if (w.cwiseAbs().maxCoeff() > tol)
        throw Error("integral of d vanishes but integral c.grad phi + d phi is not identically zero");
      // Replace (b, c, d) by (b - c, 0, 0) in the variant's orientation.
      reduced_ = true;
      K_ = assemble_with(mesh, {e.A, difference(mesh, e.b, e.c), VectorField::zero(),
                                ScalarField::zero(), e.transpose_A},
                         spec.quad_degree);
    }
  }
  if (K_.size() == 0) K_ = assemble_matrix(spec);
  reduced_ = reduced_ || spec.variant == Variant::ReducedDrift;
  iterative_ = mesh.num_vertices() > 60000;
}

void NeumannSolver::factorize(bool transpose) const {
  auto& lu = transpose ? lut_ : lu_;
  auto& sys = transpose ? syst_ : sys_;
  if (lu) return;
  const SparseMatrix base = transpose ? SparseMatrix(K_.transpose()) : K_;
  if (!constrained_) {
    sys = base;
  } else {
    const Index n = base.rows();
    std::vector<Triplet> trip;
    trip.reserve(base.nonZeros() + 2 * n);
    for (int k = 0; k < base.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(base, k); it; ++it)
        trip.emplace_back(int(it.row()), int(it.col()), it.value());
    for (Index i = 0; i < n; ++i) {
      trip.emplace_back(int(i), int(n), m_[i]);
      trip.emplace_back(int(n), int(i), m_[i]);
    }
    sys.resize(n + 1, n + 1);
    sys.setFromTriplets(trip.begin(), trip.end());
  }
  sys.makeCompressed();
  if (iterative_) return;
  lu = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
  lu->analyzePattern(sys);
  lu->factorize(sys);
  if (lu->info() != Eigen::Success) throw Error("sparse LU factorisation failed: " + lu->lastErrorMessage());
}

SolveResult NeumannSolver::solve_impl(const VectorX& load, bool transpose) const {
  factorize(transpose);
  const Index n = K_.rows();
  require(load.size() == n, "load vector has the wrong size");
  const SparseMatrix& sys = transpose ? syst_ : sys_;
  VectorX rhs = VectorX::Zero(sys.rows());
  rhs.head(n) = load;
  VectorX x;
  if (iterative_) {
    Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<Real>> it;
    it.setTolerance(1e-13);
    it.setMaxIterations(20000);
    it.compute(sys);
    x = it.solve(rhs);
    if (it.info() != Eigen::Success) throw Error("BiCGSTAB did not converge");
  } else {
    const auto& lu = transpose ? *lut_ : *lu_;
    x = lu.solve(rhs);
    const VectorX res = rhs - sys * x;
    x += lu.solve(res);  // one step of iterative refinement
  }
  SolveResult r;
  r.constrained = constrained_;
  r.reduced = reduced_;
  r.route = std::string(constrained_ ? "saddle" : "direct") + (iterative_ ? "-bicgstab" : "-lu") +
            (transpose ? "-transpose" : "");
  const Real ln = std::max(load.norm(), std::numeric_limits<Real>::min());
  r.residual = (rhs - sys * x).norm() / ln;
  r.solution = FeFunction(mesh_, x.head(n));
  if (constrained_) {
    r.multiplier = x[n];
    r.compatibility = transpose ? kernel_vector().dot(load) : load.sum();
  }
  return r;
}

SolveResult NeumannSolver::solve(const VectorX& load) const { return solve_impl(load, false); }
SolveResult NeumannSolver::solve_transpose(const VectorX& load) const {
  return solve_impl(load, true);
}

const VectorX& NeumannSolver::kernel_vector() const {
  require(constrained_, "kernel vector requested but integral of d is positive");
  if (!kernel_) {
    factorize(false);
    const Index n = K_.rows();
    VectorX rhs = VectorX::Zero(n + 1);
    rhs[n] = 1;
    VectorX x;
    if (iterative_) {
      Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<Real>> it;
      it.setTolerance(1e-13);
      it.compute(sys_);
      x = it.solve(rhs);
    } else {
      x = lu_->solve(rhs);
      x += lu_->solve(VectorX(rhs - sys_ * x));
    }
    kernel_ = x.head(n);
  }
  return *kernel_;
}

SolveResult solve_neumann(const ProblemSpec& spec) {
  NeumannSolver solver(spec);
  return solver.solve(assemble_load(spec));
}

SolveResult solve_adjoint(const ProblemSpec& spec) {
  ProblemSpec direct = spec;
  direct.variant = Variant::Direct;
  NeumannSolver solver(direct);
  return solver.solve_transpose(assemble_load(spec));
}

VectorX reduced_kernel(const ProblemSpec& spec) {
  ProblemSpec direct = spec;
  if (direct.variant == Variant::Adjoint) direct.variant = Variant::Direct;
  NeumannSolver solver(direct);
  return solver.kernel_vector();
}

Real compatibility_check(const ProblemSpec& spec, Compatibility which, const FeFunction* uhat) {
  const VectorX load = assemble_load(spec);
  if (which == Compatibility::Comp1) return load.sum();
  VectorX u;
  if (uhat) {
    u = uhat->values;
  } else {
    u = reduced_kernel(spec);
    const Real p = sobolev_exponent(spec.mesh->dim());
    u /= lp_norm(FeFunction(spec.mesh, u), p);
  }
  return u.dot(load);
}

ResidualReport residual_vector(const ProblemSpec& spec, const FeFunction& u, Real tol) {
  const auto& mesh = *spec.mesh;
  const SparseMatrix K = assemble_matrix(spec);
  const VectorX load = assemble_load(spec);
  ResidualReport r;
  r.r = K * u.values - load;
  r.admissible.assign(mesh.num_vertices(), 1);
  const auto mask = gamma_mask(mesh, spec.gamma_tags);
  for (Index f = 0; f < mesh.num_facets(); ++f)
    if (!mask[f])
      for (Index v : mesh.facet(f).v) r.admissible[v] = 0;
  const VectorX Ku = (SparseMatrix(K.cwiseAbs()) * u.values.cwiseAbs());
  r.load_norm = load.cwiseAbs().maxCoeff();
  const Real scale = std::max({r.load_norm, Ku.maxCoeff(), std::numeric_limits<Real>::min()});
  bool sub = true, super = true;
  for (Index j = 0; j < mesh.num_vertices(); ++j) {
    if (!r.admissible[j]) {
      r.r[j] = std::numeric_limits<Real>::quiet_NaN();
      continue;
    }
    r.max_abs = std::max(r.max_abs, std::abs(r.r[j]));
    r.sum += r.r[j];
    sub = sub && r.r[j] <= tol * scale;
    super = super && r.r[j] >= -tol * scale;
  }
  r.subsolution = sub;
  r.supersolution = super;
  r.solution = sub && super;
  return r;
}

ProblemSpec scale_problem(const ProblemSpec& spec, Real r) {
  require(r > 0 && std::isfinite(r), "scale_problem: r must be positive");
  ProblemSpec s = spec;
  s.mesh = std::make_shared<const SimplicialMesh>(dilate_mesh(*spec.mesh, 1.0 / r));
  s.A = scaled(spec.A, 1.0, r);
  s.b = scaled(spec.b, r, r);
  s.c = scaled(spec.c, r, r);
  s.d = scaled(spec.d, r * r, r);
  s.f = scaled(spec.f, r * r, r);
  s.F = scaled(spec.F, r, r);
  s.g = scaled(spec.g, r, r);
  return s;
}

}  // namespace nlab
