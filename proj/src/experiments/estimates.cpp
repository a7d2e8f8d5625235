#include "internal.hpp"
#include "nlab/geometry.hpp"
#include "nlab/lorentz.hpp"

#include <cmath>
#include <sstream>

namespace nlab {

namespace exp {

ProblemSpec problem_or(const ExperimentContext& ctx, MeshPtr mesh, const ProblemSpec& fallback) {
  if (!ctx.problem) return fallback;
  return build_problem(*ctx.problem, std::move(mesh));
}

ScalarField positive_part(const ScalarField& f) {
  auto pos = [](Real v) { return std::max<Real>(v, 0); };
  ScalarField out;
  switch (f.kind()) {
    case ScalarField::Kind::Zero: return f;
    case ScalarField::Kind::Constant: out = ScalarField::constant(pos(f.constant_value())); break;
    case ScalarField::Kind::Analytic: {
      auto fn = f.function();
      out = ScalarField::analytic([fn, pos](const Vec3& x) { return pos(fn(x)); });
      break;
    }
    case ScalarField::Kind::PerCell:
    case ScalarField::Kind::PerFacet: {
      std::vector<Real> v = f.values();
      for (auto& x : v) x = pos(x);
      out = f.kind() == ScalarField::Kind::PerCell ? ScalarField::per_cell(v) : ScalarField::per_facet(v);
      break;
    }
  }
  out.role = f.role;
  return out;
}

std::vector<Real> drift_difference(const SimplicialMesh& mesh, const VectorField& b,
                                   const VectorField& c) {
  std::vector<Real> h(mesh.num_cells());
  for (Index k = 0; k < mesh.num_cells(); ++k) {
    const Vec3 x = mesh.centroid(k);
    h[k] = (b.at_cell(k, x) - c.at_cell(k, x)).norm();
  }
  return h;
}

void merge_into(ExperimentReport& parent, const std::string& prefix, const ExperimentReport& child) {
  parent.results[prefix] = child.results;
  if (!child.inputs.empty()) parent.inputs[prefix] = child.inputs;
  for (const auto& [k, v] : child.tolerances.items()) parent.tolerances[prefix + "." + k] = v;
  for (auto c : child.checks) {
    c.name = prefix + ": " + c.name;
    parent.checks.push_back(std::move(c));
  }
  for (const auto& h : child.mesh_hashes)
    if (std::find(parent.mesh_hashes.begin(), parent.mesh_hashes.end(), h) == parent.mesh_hashes.end())
      parent.mesh_hashes.push_back(h);
  for (const auto& [k, v] : child.tables) parent.tables[prefix + "_" + k] = v;
}

}  // namespace exp

using exp::drift_difference;
using exp::positive_part;

namespace {

constexpr Real kSob = 6;        // 2n/(n-2)
constexpr Real kDual = 6.0 / 5; // 2n/(n+2)
constexpr Real kTrace = 4.0 / 3; // 2 - 2/n

struct Bounds {
  Vec3 lo, hi;
};

Bounds bounds(const SimplicialMesh& mesh) {
  Bounds b{Vec3::Constant(1e300), Vec3::Constant(-1e300)};
  for (const auto& v : mesh.vertices()) {
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

struct Sample {
  std::string kind;
  FeFunction u;
};

VectorX smooth(const SimplicialMesh& mesh, const VectorX& v, int passes) {
  VectorX cur = v;
  for (int p = 0; p < passes; ++p) {
    VectorX cm(mesh.num_cells());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
      const auto& t = mesh.cell(c);
      cm[c] = (cur[t[0]] + cur[t[1]] + cur[t[2]] + cur[t[3]]) / 4;
    }
    for (Index i = 0; i < mesh.num_vertices(); ++i) {
      Real s = 0;
      for (Index c : mesh.vertex_cells()[i]) s += cm[c];
      cur[i] = s / mesh.vertex_cells()[i].size();
    }
  }
  return cur;
}

// Trigonometric polynomials in box-normalised coordinates plus random P1 fields
// with a few smoothing passes.
std::vector<Sample> random_family(MeshPtr mesh, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> U(-1, 1);
  std::uniform_int_distribution<int> K(0, 3), P(0, 1), S(0, 4);
  const Bounds bb = bounds(*mesh);
  const Vec3 span = bb.hi - bb.lo;
  std::vector<Sample> out;
  const int trig = samples * 3 / 5;
  for (int s = 0; s < samples; ++s) {
    if (s < trig) {
      struct Term {
        Real a;
        std::array<int, 3> k;
        std::array<int, 3> ph;
      };
      std::vector<Term> terms(3);
      for (auto& t : terms) {
        t.a = U(rng);
        for (int d = 0; d < 3; ++d) {
          t.k[d] = K(rng);
          t.ph[d] = t.k[d] > 0 ? P(rng) : 0;  // sin(0) would kill the term
        }
      }
      auto fn = [&](const Vec3& x) {
        Real v = 0;
        for (const auto& t : terms) {
          Real m = t.a;
          for (int d = 0; d < 3; ++d) {
            const Real y = kPi * t.k[d] * (x[d] - bb.lo[d]) / span[d];
            m *= t.ph[d] ? std::sin(y) : std::cos(y);
          }
          v += m;
        }
        return v;
      };
      FeFunction u = interpolate(mesh, fn);
      if (u.values.maxCoeff() - u.values.minCoeff() < 1e-8) {
        --s;  // all-constant draw, redraw
        continue;
      }
      out.push_back({"trig", std::move(u)});
    } else {
      VectorX v(mesh->num_vertices());
      for (Index i = 0; i < v.size(); ++i) v[i] = U(rng);
      const int passes = S(rng);
      out.push_back({"p1_smooth" + std::to_string(passes), FeFunction(mesh, smooth(*mesh, v, passes))});
    }
  }
  return out;
}

const char* variant_name(PoincareVariant v) {
  switch (v) {
    case PoincareVariant::Plain: return "plain";
    case PoincareVariant::AmpleZero: return "ample_zero";
    case PoincareVariant::Modified: return "modified";
  }
  return "?";
}

// integral of c . grad u + d u for P1 u
Real averaging_functional(const VectorField& c, const ScalarField& d, const FeFunction& u) {
  return integrate_levels(u, {}, [&](Index k, const Vec3& x, Real v) {
    return c.at_cell(k, x).dot(u.gradient(k)) + d.at_cell(k, x) * v;
  }, 4);
}

}  // namespace

// --- Poincare family ----------------------------------------------------------------

ExperimentReport run_poincare(MeshPtr mesh, const PoincareOptions& opt) {
  ExperimentReport rep;
  rep.seed = opt.seed;
  rep.record_mesh(*mesh);
  rep.inputs["variant"] = variant_name(opt.variant);
  rep.inputs["samples"] = opt.samples;
  require(opt.samples >= 1, "run_poincare: need at least one sample");
  const Real vol = mesh->total_volume();
  Real intd = 0;
  if (opt.variant == PoincareVariant::Modified) {
    if (std::abs(vol - 1) > 1e-9) throw Error("modified Poincare inequality: |Omega| must be 1");
    intd = integral(*mesh, opt.d, 6);
    if (!(intd > 0) || intd < opt.delta0)
      throw Error("modified Poincare inequality: integral of d = " + std::to_string(intd) +
                  " is below delta0 = " + std::to_string(opt.delta0));
    rep.inputs["integral_d"] = intd;
    rep.inputs["delta0"] = opt.delta0;
  }
  if (opt.variant == PoincareVariant::AmpleZero) {
    require(opt.delta > 0 && opt.delta < 1, "ample-zero Poincare: delta must lie in (0, 1)");
    rep.inputs["delta"] = opt.delta;
  }
  const Bounds bb = bounds(*mesh);

  auto family = random_family(mesh, opt.samples, opt.seed);
  family.push_back({"cos_pi_x1", interpolate(mesh, [&](const Vec3& x) {
                      return std::cos(kPi * (x.x() - bb.lo.x()) / (bb.hi.x() - bb.lo.x()));
                    })});
  family.push_back({"constant", interpolate(mesh, [](const Vec3&) { return 1.0; })});

  Real best = 0, zero_fraction = 1;
  std::string best_kind;
  int used = 0, filtered = 0;
  Json oracle;
  for (auto& s : family) {
    FeFunction u = s.u;
    if (opt.variant == PoincareVariant::AmpleZero) {
      for (Index i = 0; i < mesh->num_vertices(); ++i) {
        const Real t = (mesh->vertex(i).x() - bb.lo.x()) / (bb.hi.x() - bb.lo.x());
        u.values[i] *= std::max<Real>(0, t - opt.delta);
      }
    }
    const Real grad = grad_lp_norm(u, 2);
    if (!(grad > 1e-12 * std::max<Real>(1, u.values.cwiseAbs().maxCoeff()))) {
      ++filtered;
      continue;
    }
    Real num = 0;
    switch (opt.variant) {
      case PoincareVariant::Plain: {
        FeFunction w = u;
        w.values.array() -= integral(u) / vol;
        num = lp_norm(w, kSob);
        if (s.kind == "cos_pi_x1") {
          oracle["l2_ratio"] = lp_norm(w, 2) / grad;
          oracle["l2_ratio_exact"] = (bb.hi.x() - bb.lo.x()) / kPi;
        }
        break;
      }
      case PoincareVariant::AmpleZero: {
        num = lp_norm(u, kSob);
        Real zero = 0;
        for (Index c = 0; c < mesh->num_cells(); ++c) {
          const auto v = u.cell_values(c);
          if (v[0] == 0 && v[1] == 0 && v[2] == 0 && v[3] == 0) zero += mesh->volume(c);
        }
        zero_fraction = std::min(zero_fraction, zero / vol);
        break;
      }
      case PoincareVariant::Modified: {
        FeFunction w = u;
        w.values.array() -= averaging_functional(opt.c, opt.d, u) / intd;
        num = lp_norm(w, kSob);
        break;
      }
    }
    ++used;
    const Real ratio = num / grad;
    if (ratio > best) {
      best = ratio;
      best_kind = s.kind;
    }
  }
  rep.results["constant_lower_bound"] = best;
  rep.results["argmax_kind"] = best_kind;
  rep.results["samples_used"] = used;
  rep.results["filtered"] = filtered;
  if (!oracle.empty()) rep.results["cos_oracle"] = oracle;
  if (opt.variant == PoincareVariant::AmpleZero) {
    rep.results["min_zero_fraction"] = zero_fraction;
    rep.expect_ge("vanishing set fraction", zero_fraction, opt.delta - 1e-12);
  }
  rep.expect_ge("samples used", used, 200);
  rep.expect("constant finite", std::isfinite(best) && best > 0, best);
  return rep;
}

// --- trace inequalities -------------------------------------------------------------

ExperimentReport run_trace(MeshPtr mesh, Real p, int samples, std::uint64_t seed) {
  constexpr Real n = 3;
  if (!(p >= 1 && p < n)) throw Error("trace inequality: p must lie in [1, n), got " + std::to_string(p));
  ExperimentReport rep;
  rep.seed = seed;
  rep.record_mesh(*mesh);
  const Real q = p * (n - 1) / (n - p), s = n * p / (n - p);
  const bool weak = p > 1;
  rep.inputs["p"] = p;
  rep.inputs["boundary_exponent"] = q;
  rep.inputs["volume_exponent"] = s;
  rep.inputs["samples"] = samples;

  auto strong_ratio = [&](const FeFunction& u) {
    const Real top = lp_norm(u, q, Region::boundary());
    return top / (lp_norm(u, s) + grad_lp_norm(u, p));
  };
  auto weak_ratio = [&](const FeFunction& u) {
    const Real top = lorentz_norm(u, LorentzSpec::weak(q), Measure::Surface);
    return top / (lorentz_norm(u, LorentzSpec::weak(s)) + gradient_lorentz_norm(u, LorentzSpec::weak(p)));
  };

  auto family = random_family(mesh, samples, seed);
  Real best = 0, best_weak = 0;
  for (const auto& smp : family) {
    best = std::max(best, strong_ratio(smp.u));
    if (weak) best_weak = std::max(best_weak, weak_ratio(smp.u));
  }
  const FeFunction one = interpolate(mesh, [](const Vec3&) { return 1.0; });
  const FeFunction x1 = interpolate(mesh, [](const Vec3& x) { return x.x(); });
  rep.results["constant_lower_bound"] = best;
  rep.results["ratio_one"] = strong_ratio(one);
  rep.results["ratio_x1"] = strong_ratio(x1);
  rep.results["boundary_norm_x1"] = lp_norm(x1, q, Region::boundary());
  rep.results["volume_norm_x1"] = lp_norm(x1, s);
  if (weak) {
    rep.results["weak_constant_lower_bound"] = best_weak;
    rep.results["weak_ratio_one"] = weak_ratio(one);
  }
  rep.expect("constant finite", std::isfinite(best) && best > 0, best);
  if (weak) rep.expect("weak constant finite", std::isfinite(best_weak) && best_weak > 0, best_weak);
  return rep;
}

// --- main estimate ------------------------------------------------------------------

namespace {

struct DataNorms {
  Real f = 0, F = 0, g = 0;
};

DataNorms data_norms(const ProblemSpec& spec, bool positive) {
  const auto& mesh = *spec.mesh;
  DataNorms d;
  d.f = lp_norm(mesh, positive ? positive_part(spec.f) : spec.f, kDual);
  d.F = lp_norm(mesh, spec.F, 2);
  d.g = lp_norm(mesh, positive ? positive_part(spec.g) : spec.g, kTrace, spec.gamma());
  return d;
}

struct YEstimate {
  Real ratio = 0, lhs = 0, rhs = 0;
};

// Scale-invariant solution-to-data estimate on the Y space.
YEstimate y_estimate(const ProblemSpec& spec, const FeFunction& u, MainCase which) {
  YEstimate y;
  if (which == MainCase::DeltaPositive) {
    const DataNorms d = data_norms(spec, false);
    y.lhs = y_norm(u);
    y.rhs = d.f + d.F + d.g;
  } else {
    const DataNorms d = data_norms(spec, true);
    const Real vol = spec.mesh->total_volume();
    y.lhs = positive_lp_norm(u, kSob) + std::sqrt(positive_grad_energy(u));
    y.rhs = d.f + d.F + d.g + std::pow(vol, -5.0 / 6) * positive_integral(u);
  }
  y.ratio = y.rhs > 0 ? y.lhs / y.rhs : (y.lhs == 0 ? 0 : std::numeric_limits<Real>::infinity());
  return y;
}

void require_conditions(const ProblemSpec& spec, MainCase which, ExperimentReport& rep) {
  const IntegralD id = integral_d(spec);
  rep.inputs["integral_d"] = id.value;
  rep.inputs["delta0"] = id.delta0;
  if (which == MainCase::DeltaPositive && !(id.delta0 > 0))
    throw Error("estimate with integral d > 0: integral of d is " + std::to_string(id.value));
  if (which == MainCase::DeltaZero && std::abs(id.value) > 1e-10 * std::max<Real>(1, std::abs(id.delta0)))
    throw Error("estimate with integral d = 0: integral of d is " + std::to_string(id.value));
  const auto bd = check_sign_condition(spec, ConditionPair::BD);
  const auto cd = check_sign_condition(spec, ConditionPair::CD);
  rep.inputs["condition_bd"] = bd.holds;
  rep.inputs["condition_cd"] = cd.holds;
  if (!bd.holds && !cd.holds)
    throw Error("neither (b, d) nor (c, d) satisfies the sign condition (min hat values " +
                std::to_string(bd.min_value) + ", " + std::to_string(cd.min_value) + ")");
}

}  // namespace

ExperimentReport run_main_estimate(const ProblemSpec& spec, MainCase which, Real C0) {
  ExperimentReport rep;
  const auto& mesh = *spec.mesh;
  rep.record_mesh(mesh);
  rep.inputs["case"] = which == MainCase::DeltaZero ? "delta_zero" : "delta_positive";
  rep.inputs["C0"] = C0;
  require_conditions(spec, which, rep);

  const SolveResult sol = solve_neumann(spec);
  const FeFunction& u = sol.solution;
  rep.results["solve_residual"] = sol.residual;
  const Real vol = mesh.total_volume();
  const Real eps = spec.lambda / (8 * std::max<Real>(C0, 1));
  const auto h = drift_difference(mesh, spec.b, spec.c);
  const SplitResult sp = split_plain(u, ScalarField::per_cell(h), eps);
  rep.results["epsilon"] = eps;
  rep.results["pieces"] = sp.N;
  rep.results["h_norm"] = sp.h_norm;

  Real intd = 0;
  if (which == MainCase::DeltaPositive) intd = integral(mesh, spec.d, 6);
  std::vector<Real> x, a, c0;
  for (int i = 0; i < sp.N; ++i) {
    const ClampPiece& pc = sp.pieces[i];
    const std::vector<Real> lv{pc.s, pc.t};
    Real energy = 0;
    for (Index k = 0; k < mesh.num_cells(); ++k)
      energy += mesh.volume(k) * u.gradient(k).squaredNorm() *
                tet_slab_fraction(u.cell_values(k), pc.s, pc.t);
    Real ai;
    if (which == MainCase::DeltaZero) {
      ai = piece_integral(sp, i) / vol;
    } else {
      const Real num = integrate_levels(u, lv, [&](Index k, const Vec3& p, Real v) {
        const Real slope = pc.slope(v);
        return slope * spec.c.at_cell(k, p).dot(u.gradient(k)) + spec.d.at_cell(k, p) * pc.value(v);
      }, 4);
      ai = num / intd;
    }
    const Real dev = std::pow(integrate_levels(u, lv, [&](Index, const Vec3&, Real v) {
      return std::pow(pc.value(v) - ai, 6);
    }, 6), 1.0 / 6);
    x.push_back(std::sqrt(energy));
    a.push_back(ai);
    c0.push_back(energy > 0 ? dev / std::sqrt(energy) : 0);
  }
  Real asum = 0, amin = 0;
  for (Real v : a) asum += v, amin = std::min(amin, v);
  rep.results["x"] = x;
  rep.results["a"] = a;
  rep.results["piece_poincare_ratio"] = c0;
  rep.results["a_sum"] = asum;

  const Real lhs = positive_grad_energy(u);
  const DataNorms dn = data_norms(spec, true);
  const Real rhs = asum * asum + dn.f * dn.f + dn.g * dn.g + dn.F * dn.F;
  const Real ratio = rhs > 0 ? lhs / rhs : (lhs == 0 ? 0 : std::numeric_limits<Real>::infinity());
  rep.results["lhs"] = lhs;
  rep.results["rhs"] = rhs;
  rep.results["ratio"] = ratio;
  rep.results["volume"] = vol;
  const YEstimate ye = y_estimate(spec, u, which);
  rep.results["y_lhs"] = ye.lhs;
  rep.results["y_rhs"] = ye.rhs;
  rep.results["y_ratio"] = ye.ratio;
  rep.expect_ge("averages nonnegative", amin, -1e-12 * (1 + std::abs(asum)));
  rep.expect("measured constant finite", std::isfinite(ratio), ratio);
  rep.expect("Y-estimate constant finite", std::isfinite(ye.ratio), ye.ratio);
  return rep;
}

// --- averaged inequality ------------------------------------------------------------

ExperimentReport run_avg_inequality(const ProblemSpec& spec, const FeFunction& u) {
  if (!spec.F.is_zero())
    throw Error("averaged inequality: the divergence data F must vanish (the argument does not "
                "extend to the F term)");
  ExperimentReport rep;
  const auto& mesh = *spec.mesh;
  rep.record_mesh(mesh);
  const ResidualReport rr = residual_vector(spec, u);
  rep.results["residual_max"] = rr.max_abs;
  rep.results["subsolution"] = rr.subsolution;
  if (!rr.subsolution) throw Error("averaged inequality: u is not a discrete subsolution");
  const Real lhs = integrate_levels(u, {0.0}, [&](Index k, const Vec3& p, Real v) {
    if (v <= 0) return 0.0;
    return spec.c.at_cell(k, p).dot(u.gradient(k)) + spec.d.at_cell(k, p) * v;
  }, 4);
  const Real rhs = integral(mesh, positive_part(spec.f), 6) +
                   boundary_integral(mesh, positive_part(spec.g), spec.gamma(), 6);
  rep.results["lhs"] = lhs;
  rep.results["rhs"] = rhs;
  rep.results["margin"] = rhs - lhs;
  return rep;
}

// --- Caccioppoli --------------------------------------------------------------------

ExperimentReport run_caccioppoli(const ProblemSpec& spec, const Vec3& center, Real r) {
  const auto& mesh = *spec.mesh;
  if (std::abs(mesh.total_volume() - 1) > 1e-9) throw Error("Caccioppoli estimate: |Omega| must be 1");
  const Bounds bb = bounds(mesh);
  if ((center.array() < bb.lo.array()).any() || (center.array() > bb.hi.array()).any())
    throw Error("Caccioppoli estimate: ball centre outside the mesh bounding box");
  require(r > 0 && 2 * r <= mesh.diameter(), "Caccioppoli estimate: need 0 < 2r <= diam");
  require(spec.g.is_zero(), "Caccioppoli estimate: boundary data must be F . nu only (g = 0)");
  ExperimentReport rep;
  rep.record_mesh(mesh);
  rep.inputs["center"] = {center.x(), center.y(), center.z()};
  rep.inputs["r"] = r;
  const FeFunction u = solve_neumann(spec).solution;
  const Real lhs = ball_integral(mesh, center, r, [&](Index c, const Vec3&) {
    return u.gradient(c).squaredNorm();
  });
  const Real u2 = ball_integral(mesh, center, 2 * r, [&](Index c, const Vec3& x) {
    const Real v = u.evaluate_in_cell(c, x);
    return v * v;
  });
  const Real F2 = ball_integral(mesh, center, 2 * r, [&](Index c, const Vec3& x) {
    return spec.F.at_cell(c, x).squaredNorm();
  });
  const Real fp = ball_integral(mesh, center, 2 * r, [&](Index c, const Vec3& x) {
    return std::pow(std::abs(spec.f.at_cell(c, x)), kDual);
  });
  const Real t1 = u2 / (r * r), t3 = std::pow(fp, 2 / kDual);
  const Real rhs = t1 + F2 + t3;
  rep.results["lhs"] = lhs;
  rep.results["u2_integral"] = u2;
  rep.results["term_u"] = t1;
  rep.results["term_F"] = F2;
  rep.results["term_f"] = t3;
  rep.results["ratio"] = rhs > 0 ? lhs / rhs : 0;
  return rep;
}

// --- pointwise bounds ---------------------------------------------------------------

namespace {

// Lorentz norm of scalar data: P1 interpolant for analytic fields, exact P0 otherwise.
Real data_lorentz(const SimplicialMesh& mesh, MeshPtr ptr, const ScalarField& f, const LorentzSpec& ls,
                  Measure measure, const Region& region = {}) {
  if (f.is_zero()) return 0;
  if (f.kind() == ScalarField::Kind::Analytic) {
    const FeFunction fi = interpolate(ptr, f.function());
    return lorentz_norm(fi, ls, measure, region);
  }
  if (region.kind == Region::Kind::All) return lorentz_norm(mesh, f, ls, measure);
  std::vector<Real> vals, meas;
  for (Index c : region.ids) {
    vals.push_back(std::abs(f.at_cell(c, mesh.centroid(c))));
    meas.push_back(mesh.volume(c));
  }
  return lorentz_norm(Distribution(vals, meas), ls);
}

Real vector_lorentz(const SimplicialMesh& mesh, const VectorField& F, const LorentzSpec& ls,
                    const std::vector<Index>* cells = nullptr) {
  if (F.is_zero()) return 0;
  const auto mag = cell_magnitudes(mesh, F);
  std::vector<Real> vals, meas;
  if (cells) {
    for (Index c : *cells) vals.push_back(mag[c]), meas.push_back(mesh.volume(c));
  } else {
    vals = mag;
    for (Index c = 0; c < mesh.num_cells(); ++c) meas.push_back(mesh.volume(c));
  }
  return lorentz_norm(Distribution(vals, meas), ls);
}

}  // namespace

ExperimentReport run_pointwise_suite(const ProblemSpec& spec) {
  ExperimentReport rep;
  const auto& mesh = *spec.mesh;
  rep.record_mesh(mesh);
  const auto bd = check_sign_condition(spec, ConditionPair::BD);
  rep.inputs["condition_bd"] = bd.holds;
  if (!bd.holds) throw Error("pointwise bound: (b, d) violates the sign condition, min hat value " +
                             std::to_string(bd.min_value));
  const FeFunction u = solve_neumann(spec).solution;
  const Real vol = mesh.total_volume();
  const Real sup = std::max<Real>(0, u.values.maxCoeff());
  const Real avg = positive_integral(u) / vol;
  const Real nF = vector_lorentz(mesh, spec.F, {3, 1});
  const Real nf = data_lorentz(mesh, spec.mesh, positive_part(spec.f), {1.5, 1}, Measure::Volume);
  const Real ng = data_lorentz(mesh, spec.mesh, positive_part(spec.g), {2, 1}, Measure::Surface);
  const Real rhs = avg + nF + nf + ng;
  rep.results["sup_u_plus"] = sup;
  rep.results["mean_u_plus"] = avg;
  rep.results["F_L31"] = nF;
  rep.results["f_plus_L3/2,1"] = nf;
  rep.results["g_plus_L21"] = ng;
  rep.results["ratio"] = rhs > 0 ? sup / rhs : 0;
  if (spec.F.is_zero() && spec.g.is_zero()) {
    const Real linf = u.values.cwiseAbs().maxCoeff();
    const Real nfa = data_lorentz(mesh, spec.mesh, spec.f, {1.5, 1}, Measure::Volume);
    rep.results["linf_ratio"] = nfa > 0 ? linf / nfa : 0;
  }
  return rep;
}

namespace {

// Boundary-local bound near a boundary point q of a graph domain.
ExperimentReport boundary_local(const ProblemSpec& spec, const GraphDomainSpec& gs, const Vec3& q, Real r) {
  ExperimentReport rep;
  const auto& mesh = *spec.mesh;
  rep.record_mesh(mesh);
  const Real R = 6 * (gs.M + 1) * r;
  rep.inputs["r"] = r;
  rep.inputs["enlarged_radius"] = R;
  rep.inputs["M"] = gs.M;
  const auto bd = check_sign_condition(spec, ConditionPair::BD);
  if (!bd.holds) throw Error("boundary-local bound: (b, d) violates the sign condition");
  const FeFunction u = solve_neumann(spec).solution;

  Real sup = 0;
  for (Index i = 0; i < mesh.num_vertices(); ++i)
    if ((mesh.vertex(i) - q).norm() <= r) sup = std::max(sup, u.values[i]);
  // P1 maxima on B_r also occur where the sphere cuts edges; sample the small ball densely
  const PointLocator loc(spec.mesh);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<Real> U(-r, r);
  for (int k = 0; k < 2000; ++k) {
    const Vec3 x = q + Vec3(U(rng), U(rng), U(rng));
    if ((x - q).norm() > r) continue;
    try {
      sup = std::max(sup, u.evaluate(loc, x));
    } catch (const OutsideDomain&) {
    }
  }
  const auto cells = cells_in_ball(mesh, q, R);
  Real vb = 0, ib = 0;
  for (Index c : cells) {
    vb += mesh.volume(c);
    ib += mesh.volume(c) * tet_positive_part_mean(u.cell_values(c), 0);
  }
  const Region reg = Region::cells(cells);
  const Real nF = vector_lorentz(mesh, spec.F, {3, 1}, &cells);
  const Real nf = data_lorentz(mesh, spec.mesh, positive_part(spec.f), {1.5, 1}, Measure::Volume, reg);
  const Real rhs = ib / vb + nF + nf;
  rep.results["sup_local"] = sup;
  rep.results["mean_local"] = ib / vb;
  rep.results["F_L31_local"] = nF;
  rep.results["f_plus_L3/2,1_local"] = nf;
  rep.results["ratio"] = rhs > 0 ? sup / rhs : 0;

  // ||b - c||_n on the domain and on the reflected double
  VectorField diff = VectorField::per_cell([&] {
    std::vector<Vec3> v(mesh.num_cells());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
      const Vec3 x = mesh.centroid(c);
      v[c] = spec.b.at_cell(c, x) - spec.c.at_cell(c, x);
    }
    return v;
  }());
  const ReflectedMesh refl = reflect_mesh(mesh, ReflectionMap(gs));
  const VectorField rdiff = reflect_field(mesh, diff, refl);
  rep.results["drift_difference_L3"] = lp_norm(mesh, diff, 3);
  rep.results["drift_difference_L3_reflected"] = lp_norm(refl.mesh, rdiff, 3);
  rep.expect("local constant finite", std::isfinite(rhs > 0 ? sup / rhs : 0));
  rep.expect_ge("enlarged ball inside the domain column", R, 0);
  return rep;
}

}  // namespace

// --- registered wrappers ------------------------------------------------------------

namespace exp {

namespace {

MeshPtr mesh_or(const ExperimentContext& ctx, int n) {
  if (ctx.mesh) return std::make_shared<const SimplicialMesh>(build_mesh(*ctx.mesh));
  return unit_cube(n);
}

Real relative_change(Real a, Real b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

ProblemSpec main_positive_problem(MeshPtr mesh) {
  ProblemSpec s;
  s.mesh = mesh;
  // outward drift with div b = 3: (b, d) satisfies the sign condition when d >= 3
  s.b = VectorField::analytic([](const Vec3& x) { return Vec3(x - Vec3::Constant(0.5)); });
  s.d = ScalarField::constant(4);
  s.f = ScalarField::analytic([](const Vec3& x) {
    return std::sin(2 * kPi * x.x()) * std::cos(kPi * x.y()) + 0.5 * x.z();
  });
  s.F = VectorField::analytic([](const Vec3& x) { return Vec3(0.2 * std::sin(kPi * x.y()), 0, 0.1 * x.x()); });
  s.g = ScalarField::analytic([](const Vec3& x) { return 0.3 * x.y() - 0.1; });
  return s;
}

ProblemSpec main_zero_problem(MeshPtr mesh) {
  ProblemSpec s;
  s.mesh = mesh;
  s.b = VectorField::analytic([](const Vec3& x) {
    return Vec3(0.5 * std::sin(kPi * x.y()), 0.5 * std::sin(kPi * x.z()), 0.5 * std::sin(kPi * x.x()));
  });
  s.f = ScalarField::analytic([](const Vec3& x) { return std::cos(kPi * x.x()) + 0.5 * std::cos(kPi * x.y()); });
  return s;
}

Real poincare_constant(MeshPtr mesh, const ProblemSpec& spec, MainCase which, std::uint64_t seed) {
  PoincareOptions po;
  po.samples = 200;
  po.seed = seed;
  if (which == MainCase::DeltaPositive && std::abs(mesh->total_volume() - 1) < 1e-9) {
    po.variant = PoincareVariant::Modified;
    po.c = spec.c;
    po.d = spec.d;
  }
  return run_poincare(mesh, po).results["constant_lower_bound"].get<Real>();
}

}  // namespace

ExperimentReport poincare(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const auto levels = ctx.levels({8, 16});
  const int samples = ctx.option("samples", 200);
  const Real stab = ctx.tolerance("refinement_stability", 0.2, rep);
  const Real oracle_tol = ctx.tolerance("cos_oracle", 0.01, rep);
  std::map<std::string, std::vector<Real>> series;
  for (int n : levels) {
    auto mesh = unit_cube(n);
    for (auto v : {PoincareVariant::Plain, PoincareVariant::AmpleZero, PoincareVariant::Modified}) {
      PoincareOptions po;
      po.variant = v;
      po.samples = samples;
      po.seed = ctx.seed;
      po.c = VectorField::constant(Vec3(0.3, -0.2, 0.1));
      po.d = ScalarField::analytic([](const Vec3& x) { return 1 + x.x(); });
      po.delta0 = 0.5;
      const auto r = run_poincare(mesh, po);
      const std::string key = std::string(variant_name(v)) + "_" + std::to_string(n);
      merge_into(rep, key, r);
      series[variant_name(v)].push_back(r.results["constant_lower_bound"].get<Real>());
      if (v == PoincareVariant::Plain && n == levels.back()) {
        const Real l2 = r.results["cos_oracle"]["l2_ratio"].get<Real>();
        rep.expect_le("cos(pi x1) L2 ratio vs 1/pi", std::abs(l2 * kPi - 1), oracle_tol);
      }
    }
  }
  for (const auto& [k, s] : series) {
    rep.results["series_" + k] = s;
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      rep.expect_le(k + " refinement stability", relative_change(s[i], s[i + 1]), stab);
  }
  rep.inputs["levels"] = levels;
  return rep;
}

ExperimentReport trace(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const auto levels = ctx.levels({6, 12});
  const int samples = ctx.option("samples", 200);
  const Real stab = ctx.tolerance("refinement_stability", 0.2, rep);
  std::vector<Real> strong, weak;
  for (int n : levels) {
    auto mesh = unit_cube(n);
    const auto r = run_trace(mesh, 2, samples, ctx.seed);
    merge_into(rep, "p2_" + std::to_string(n), r);
    strong.push_back(r.results["constant_lower_bound"].get<Real>());
    weak.push_back(r.results["weak_constant_lower_bound"].get<Real>());
    const Real one = r.results["ratio_one"].get<Real>();
    rep.expect_le("u=1 ratio 6^{1/4} at n=" + std::to_string(n), std::abs(one - std::pow(6.0, 0.25)), 1e-12);
    rep.expect_le("u=1 weak ratio 6^{1/4} at n=" + std::to_string(n),
                  std::abs(r.results["weak_ratio_one"].get<Real>() - std::pow(6.0, 0.25)), 1e-12);
    // u = x1: boundary (1 + 4/(q+1))^{1/q}, volume (1/7)^{1/6} + 1 with q = 4
    const Real bx = std::pow(1 + 4.0 / 5, 0.25), vx = std::pow(1.0 / 7, 1.0 / 6);
    rep.expect_le("u=x1 boundary norm closed form", std::abs(r.results["boundary_norm_x1"].get<Real>() - bx), 1e-12);
    rep.expect_le("u=x1 volume norm closed form", std::abs(r.results["volume_norm_x1"].get<Real>() - vx), 1e-12);
  }
  const auto p1 = run_trace(unit_cube(levels.front()), 1, std::min(samples, 50), ctx.seed);
  merge_into(rep, "p1", p1);
  rep.results["series_strong"] = strong;
  rep.results["series_weak"] = weak;
  for (std::size_t i = 0; i + 1 < strong.size(); ++i) {
    rep.expect_le("strong refinement stability", relative_change(strong[i], strong[i + 1]), stab);
    rep.expect_le("weak refinement stability", relative_change(weak[i], weak[i + 1]), stab);
  }
  rep.inputs["levels"] = levels;
  return rep;
}

ExperimentReport main_estimate(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const int n = ctx.option("resolution", 10);
  const Real bound = ctx.tolerance("ratio_bound", 10, rep);
  const Real scale_tol = ctx.tolerance("scaling_relative", 1e-9, rep);
  auto mesh = mesh_or(ctx, n);
  for (auto which : {MainCase::DeltaPositive, MainCase::DeltaZero}) {
    const bool pos = which == MainCase::DeltaPositive;
    const ProblemSpec spec = problem_or(ctx, mesh, pos ? main_positive_problem(mesh) : main_zero_problem(mesh));
    const Real C0 = poincare_constant(mesh, spec, which, ctx.seed);
    const auto r = run_main_estimate(spec, which, C0);
    const std::string key = pos ? "delta_positive" : "delta_zero";
    merge_into(rep, key, r);
    if (mesh->total_volume() <= 1 + 1e-12)
      rep.expect_le(key + ": measured constant below regression bound", r.results["ratio"].get<Real>(), bound);
    // scale covariance of the Y-estimate
    std::vector<Real> ratios;
    for (Real s : {0.5, 1.0, 2.0}) {
      const ProblemSpec ss = scale_problem(spec, s);
      ratios.push_back(y_estimate(ss, solve_neumann(ss).solution, which).ratio);
    }
    Real spread = 0;
    for (Real v : ratios) spread = std::max(spread, relative_change(v, ratios[1]));
    rep.results[key]["scaling_ratios"] = ratios;
    rep.expect_le(key + ": ratio invariant under dilation", spread, scale_tol);
  }
  // zero data: both sides vanish
  ProblemSpec z;
  z.mesh = mesh;
  z.d = ScalarField::constant(1);
  const auto rz = run_main_estimate(z, MainCase::DeltaPositive, 1);
  rep.results["zero_data"] = {{"lhs", rz.results["lhs"]}, {"rhs", rz.results["rhs"]}};
  rep.expect_le("zero data: left side", rz.results["lhs"].get<Real>(), 0);
  rep.expect_le("zero data: right side", rz.results["rhs"].get<Real>(), 0);
  return rep;
}

ExperimentReport avg_inequality(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const int n = ctx.option("resolution", 10);
  const Real tol = ctx.tolerance("quadrature_relative", 1e-3, rep);
  auto mesh = mesh_or(ctx, n);
  rep.record_mesh(*mesh);
  struct Case {
    std::string name;
    ScalarField f, g;
    VectorField c;
  };
  std::vector<Case> cases{
      {"nonnegative_f", ScalarField::analytic([](const Vec3& x) { return 1 + 0.5 * std::cos(kPi * x.x()); }), {}, {}},
      {"mixed_sign",
       ScalarField::analytic([](const Vec3& x) { return std::cos(kPi * x.x()) + 0.3; }),
       ScalarField::analytic([](const Vec3& x) { return 0.2 * x.y(); }),
       VectorField::constant(Vec3(0.4, 0, 0))},
      {"nonpositive_u", ScalarField::constant(-1), {}, {}},
      {"zero_data", {}, {}, {}},
  };
  for (const auto& cs : cases) {
    ProblemSpec spec;
    spec.mesh = mesh;
    spec.d = ScalarField::constant(1);
    spec.f = cs.f;
    spec.g = cs.g;
    spec.c = cs.c;
    spec = problem_or(ctx, mesh, spec);
    const FeFunction u = solve_neumann(spec).solution;
    const auto r = run_avg_inequality(spec, u);
    merge_into(rep, cs.name, r);
    const Real lhs = r.results["lhs"].get<Real>(), rhs = r.results["rhs"].get<Real>();
    const Real scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    rep.expect_le(cs.name + ": lhs <= rhs", (lhs - rhs) / scale, tol);
    if (ctx.problem) break;
  }
  // F != 0 is rejected
  ProblemSpec bad;
  bad.mesh = mesh;
  bad.d = ScalarField::constant(1);
  bad.F = VectorField::constant(Vec3(1, 0, 0));
  bool rejected = false;
  try {
    run_avg_inequality(bad, FeFunction::zeros(mesh));
  } catch (const Error&) {
    rejected = true;
  }
  rep.expect("nonzero F rejected", rejected);
  return rep;
}

ExperimentReport caccioppoli(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const auto levels = ctx.levels({8, 16});
  const Real stab = ctx.tolerance("refinement_stability", 0.3, rep);
  const Real r0 = ctx.option("r0", 0.2);
  const std::vector<Vec3> centers{Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0.0)};
  std::map<std::string, std::vector<Real>> series;
  for (int n : levels) {
    auto mesh = unit_cube(n);
    ProblemSpec spec;
    spec.mesh = mesh;
    spec.d = ScalarField::constant(1);
    spec.c = VectorField::constant(Vec3(0.2, -0.1, 0.3));
    spec.f = ScalarField::analytic([](const Vec3& x) { return std::exp(x.x()) * std::cos(2 * kPi * x.y()) + x.z(); });
    spec.F = VectorField::analytic([](const Vec3& x) { return Vec3(0.3 * std::sin(kPi * x.z()), 0.2, 0); });
    spec = problem_or(ctx, mesh, spec);
    for (std::size_t ci = 0; ci < centers.size(); ++ci)
      for (Real r : {r0 / 2, r0, 2 * r0}) {
        const auto rr = run_caccioppoli(spec, centers[ci], r);
        const std::string key = "c" + std::to_string(ci) + "_r" + std::to_string(r);
        merge_into(rep, key + "_n" + std::to_string(n), rr);
        series[key].push_back(rr.results["ratio"].get<Real>());
      }
  }
  for (const auto& [k, s] : series) {
    rep.results["series_" + k] = s;
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      rep.expect_le(k + " refinement stability", relative_change(s[i], s[i + 1]), stab);
  }
  // constant solution: no gradient
  ProblemSpec cst;
  cst.mesh = unit_cube(levels.front());
  cst.d = ScalarField::constant(1);
  cst.f = ScalarField::constant(1);
  const auto rc = run_caccioppoli(cst, centers[0], r0);
  rep.expect_le("constant solution: left side", rc.results["lhs"].get<Real>(), 1e-20);
  rep.inputs["levels"] = levels;
  return rep;
}

ExperimentReport pointwise_suite(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const auto levels = ctx.levels({8, 16});
  const Real stab = ctx.tolerance("refinement_stability", 0.3, rep);
  std::vector<Real> ratios, linf;
  for (int n : levels) {
    auto mesh = unit_cube(n);
    ProblemSpec spec;
    spec.mesh = mesh;
    spec.d = ScalarField::constant(1);
    spec.c = VectorField::constant(Vec3(0.3, -0.2, 0.1));
    spec.f = ScalarField::analytic([](const Vec3& x) {
      return 4 * std::exp(-10 * (x - Vec3(0.3, 0.6, 0.5)).squaredNorm()) - 0.5;
    });
    spec.F = VectorField::analytic([](const Vec3& x) { return Vec3(0.2 * std::sin(kPi * x.y()), 0, 0); });
    spec.g = ScalarField::analytic([](const Vec3& x) { return 0.5 * x.x(); });
    spec = problem_or(ctx, mesh, spec);
    const auto r = run_pointwise_suite(spec);
    merge_into(rep, "global_" + std::to_string(n), r);
    ratios.push_back(r.results["ratio"].get<Real>());

    ProblemSpec only_f = spec;
    only_f.F = {};
    only_f.g = {};
    const auto rf = run_pointwise_suite(only_f);
    merge_into(rep, "f_only_" + std::to_string(n), rf);
    linf.push_back(rf.results["linf_ratio"].get<Real>());
  }
  rep.results["series_global"] = ratios;
  rep.results["series_linf"] = linf;
  for (std::size_t i = 0; i + 1 < ratios.size(); ++i) {
    rep.expect_le("global ratio refinement stability", relative_change(ratios[i], ratios[i + 1]), stab);
    rep.expect_le("L-infinity ratio refinement stability", relative_change(linf[i], linf[i + 1]), stab);
  }

  // zero data with integral d > 0 gives u = 0
  ProblemSpec z;
  z.mesh = unit_cube(levels.front());
  z.d = ScalarField::constant(1);
  const auto rz = run_pointwise_suite(z);
  rep.expect_le("zero data: sup u+", rz.results["sup_u_plus"].get<Real>(), 0);

  // boundary-local version on a graph domain
  GraphDomainSpec gs;
  gs.r = 1;
  gs.M = 0.3;
  gs.psi = [](Real x, Real) { return 0.3 * x; };
  std::vector<Real> local;
  for (int res : {8, 16}) {
    auto gm = std::make_shared<const SimplicialMesh>(build_graph_domain_mesh(gs, res));
    ProblemSpec ls;
    ls.mesh = gm;
    ls.d = ScalarField::constant(1);
    ls.c = VectorField::constant(Vec3(0.5, -0.3, 0.2));
    ls.f = ScalarField::analytic([](const Vec3& x) { return 2 * std::exp(-4 * x.squaredNorm()); });
    ls.F = VectorField::analytic([](const Vec3& x) { return Vec3(0, 0.1 * x.x(), 0.2); });
    const auto rl = boundary_local(ls, gs, Vec3::Zero(), 0.12);
    merge_into(rep, "boundary_local_" + std::to_string(res), rl);
    local.push_back(rl.results["ratio"].get<Real>());
  }
  rep.results["series_boundary_local"] = local;
  rep.expect_le("boundary-local ratio refinement stability", relative_change(local[0], local[1]), stab);
  rep.inputs["levels"] = levels;
  return rep;
}

ExperimentReport scale_invariance(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const int n = ctx.option("resolution", 8);
  const Real tol = ctx.tolerance("relative", 1e-9, rep);
  auto mesh = mesh_or(ctx, n);
  ProblemSpec spec;
  spec.mesh = mesh;
  spec.A = MatrixField::analytic([](const Vec3& x) {
    Mat3 A = Mat3::Identity();
    A(0, 1) = 0.2 * std::sin(x.z());
    A(1, 0) = -0.1;
    A(2, 2) = 1.5 + 0.3 * x.x();
    return A;
  });
  spec.b = VectorField::analytic([](const Vec3& x) { return Vec3(0.3 * x.y(), -0.2, 0.1 * x.x()); });
  spec.c = VectorField::constant(Vec3(0.1, 0.2, -0.3));
  spec.d = ScalarField::analytic([](const Vec3& x) { return 1 + x.squaredNorm(); });
  spec.f = ScalarField::analytic([](const Vec3& x) { return std::sin(3 * x.x()) + x.y() * x.z(); });
  spec.F = VectorField::analytic([](const Vec3& x) { return Vec3(x.z(), 0.5, -x.x() * x.y()); });
  spec.g = ScalarField::analytic([](const Vec3& x) { return std::cos(x.x() + 2 * x.y()); });
  spec.Lambda = 2;
  spec.lambda = 0.5;
  spec = problem_or(ctx, mesh, spec);
  rep.record_mesh(*mesh);
  std::vector<Real> rs{0.5, 1, 2, 4}, ratios;
  const FeFunction base = solve_neumann(spec).solution;
  Real udev = 0;
  for (Real r : rs) {
    const ProblemSpec s = scale_problem(spec, r);
    const FeFunction u = solve_neumann(s).solution;
    udev = std::max(udev, (u.values - base.values).cwiseAbs().maxCoeff() / base.values.cwiseAbs().maxCoeff());
    ratios.push_back(y_estimate(s, u, MainCase::DeltaPositive).ratio);
  }
  Real spread = 0;
  for (Real v : ratios) spread = std::max(spread, relative_change(v, ratios[1]));
  rep.inputs["dilations"] = rs;
  rep.results["ratios"] = ratios;
  rep.results["ratio_spread"] = spread;
  rep.results["solution_deviation"] = udev;
  rep.expect_le("solution-to-data ratio invariant", spread, tol);
  rep.expect_le("nodal solution invariant", udev, tol);
  return rep;
}

ExperimentReport mms_convergence(const ExperimentContext& ctx) {
  ExperimentReport rep;
  const auto levels = ctx.levels({4, 8, 16});
  const Real l2_rate = ctx.tolerance("l2_rate", 1.8, rep);
  const Real h1_rate = ctx.tolerance("h1_rate", 0.9, rep);
  Mat3 A;
  A << 1, 0.2, 0, 0.2, 1, 0, 0, 0, 1;
  const Vec3 b(0.3, 0.2, 0.1), c(-0.1, 0.2, 0.3);
  const Real d = 1.5;
  const Real pi = kPi;
  auto w = [pi](const Vec3& x) { return std::cos(pi * x.x()) * std::cos(pi * x.y()) * std::cos(pi * x.z()); };
  auto uex = [&](const Vec3& x) { return w(x) + 2; };
  auto grad = [pi](const Vec3& x) {
    const Real cx = std::cos(pi * x.x()), cy = std::cos(pi * x.y()), cz = std::cos(pi * x.z());
    const Real sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y()), sz = std::sin(pi * x.z());
    return Vec3(-pi * sx * cy * cz, -pi * cx * sy * cz, -pi * cx * cy * sz);
  };
  auto hess = [pi, w](const Vec3& x) {
    const Real cx = std::cos(pi * x.x()), cy = std::cos(pi * x.y()), cz = std::cos(pi * x.z());
    const Real sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y()), sz = std::sin(pi * x.z());
    Mat3 H;
    H.diagonal().setConstant(-pi * pi * w(x));
    H(0, 1) = H(1, 0) = pi * pi * sx * sy * cz;
    H(0, 2) = H(2, 0) = pi * pi * sx * cy * sz;
    H(1, 2) = H(2, 1) = pi * pi * cx * sy * sz;
    return H;
  };
  std::vector<Real> hs, e0, e1;
  for (int n : levels) {
    auto mesh = unit_cube(n);
    rep.record_mesh(*mesh);
    ProblemSpec s;
    s.mesh = mesh;
    s.A = MatrixField::constant(A);
    s.b = VectorField::constant(b);
    s.c = VectorField::constant(c);
    s.d = ScalarField::constant(d);
    s.f = ScalarField::analytic([=](const Vec3& x) {
      return -(A.cwiseProduct(hess(x))).sum() - b.dot(grad(x)) + c.dot(grad(x)) + d * uex(x);
    });
    s.g = ScalarField::analytic([=](const Vec3& x) {
      Vec3 nu = Vec3::Zero();
      for (int k = 0; k < 3; ++k) {
        if (x[k] < 1e-12) nu[k] = -1;
        if (x[k] > 1 - 1e-12) nu[k] = 1;
      }
      return (A * grad(x) + b * uex(x)).dot(nu);
    });
    s.quad_degree = 6;
    const FeFunction u = solve_neumann(s).solution;
    const Real l2 = std::sqrt(integrate_levels(u, {}, [&](Index, const Vec3& x, Real v) {
      const Real e = v - uex(x);
      return e * e;
    }, 6));
    const Real h1 = std::sqrt(integrate_levels(u, {}, [&](Index k, const Vec3& x, Real) {
      return (u.gradient(k) - grad(x)).squaredNorm();
    }, 6));
    hs.push_back(1.0 / n);
    e0.push_back(l2);
    e1.push_back(h1);
  }
  std::vector<Real> r0, r1;
  for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
    r0.push_back(std::log(e0[i] / e0[i + 1]) / std::log(hs[i] / hs[i + 1]));
    r1.push_back(std::log(e1[i] / e1[i + 1]) / std::log(hs[i] / hs[i + 1]));
  }
  rep.inputs["levels"] = levels;
  rep.results["l2_errors"] = e0;
  rep.results["h1_errors"] = e1;
  rep.results["l2_rates"] = r0;
  rep.results["h1_rates"] = r1;
  if (!r0.empty()) {
    rep.expect_ge("L2 rate", r0.back(), l2_rate);
    rep.expect_ge("H1 seminorm rate", r1.back(), h1_rate);
  }
  return rep;
}

}  // namespace exp

}  // namespace nlab
