#include "nlab/splitting.hpp"

#include "nlab/geometry.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace nlab {

namespace {

// Integral of (u - l)_+ over the mesh.
Real positive_part(const FeFunction& u, Real l) {
  Real s = 0;
  for (Index c = 0; c < u.mesh->num_cells(); ++c)
    s += u.mesh->volume(c) * tet_positive_part_mean(u.cell_values(c), l);
  return s;
}

// Integral of (k - u)_+ over the mesh.
Real negative_part(const FeFunction& u, Real k) {
  Real s = 0;
  for (Index c = 0; c < u.mesh->num_cells(); ++c) {
    auto v = u.cell_values(c);
    for (auto& x : v) x = -x;
    s += u.mesh->volume(c) * tet_positive_part_mean(v, -k);
  }
  return s;
}

Real l1_norm(const FeFunction& u) { return positive_part(u, 0) + negative_part(u, 0); }

// Cell weights |h|^n |cell| restricted to cells with grad u != 0.
struct WeightedCells {
  std::vector<Index> cells;
  std::vector<Real> weight;
  std::vector<std::array<Real, 4>> u;

  Real slab(Real a, Real b) const {
    if (!(a < b)) return 0;
    Real s = 0;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (weight[i] != 0) s += weight[i] * tet_slab_fraction(u[i], a, b);
    return s;
  }
};

SplitResult prepare(const FeFunction& u, const ScalarField& h, Real eps, bool mean_zero) {
  require(eps > 0, "split: epsilon must be positive");
  SplitResult r;
  r.epsilon = eps;
  r.mean_zero = mean_zero;
  r.u = u;
  r.h = sample_cells(*u.mesh, h);
  r.M = u.values.maxCoeff();
  r.m = u.values.minCoeff();
  Real gmax = 0;
  for (Index c = 0; c < u.mesh->num_cells(); ++c) gmax = std::max(gmax, u.gradient(c).norm());
  r.active.assign(u.mesh->num_cells(), 0);
  const int n = u.mesh->dim();
  Real hn = 0;
  for (Index c = 0; c < u.mesh->num_cells(); ++c) {
    r.active[c] = u.gradient(c).norm() > 1e-13 * gmax ? 1 : 0;
    hn += std::pow(std::abs(r.h[c]), n) * u.mesh->volume(c);
  }
  r.h_norm = std::pow(hn, 1.0 / n);
  return r;
}

WeightedCells weighted(const SplitResult& r) {
  WeightedCells w;
  const int n = r.u.mesh->dim();
  for (Index c = 0; c < r.u.mesh->num_cells(); ++c) {
    if (!r.active[c]) continue;
    w.cells.push_back(c);
    w.weight.push_back(std::pow(std::abs(r.h[c]), n) * r.u.mesh->volume(c));
    w.u.push_back(r.u.cell_values(c));
  }
  return w;
}

// s in [0, t] with H(s) = target; H continuous and decreasing in s. Illinois
// regula falsi keeps the bracket and converges superlinearly.
template <typename H>
Real solve_level(H&& Hs, Real t, Real target, Real& slack) {
  Real lo = 0, hi = t;  // H(lo) > target >= H(hi)
  Real flo = Hs(lo) - target, fhi = Hs(hi) - target;
  Real best = std::abs(flo) < std::abs(fhi) ? lo : hi, best_f = std::min(std::abs(flo), std::abs(fhi));
  const Real width = 1e-15 * t;
  int side = 0;
  for (int it = 0; it < 200 && hi - lo > width && best_f > 0; ++it) {
    Real x = flo > fhi ? hi - fhi * (hi - lo) / (fhi - flo) : lo + (hi - lo) / 2;
    if (!(x > lo && x < hi)) x = lo + (hi - lo) / 2;
    const Real fx = Hs(x) - target;
    if (std::abs(fx) < best_f) best_f = std::abs(fx), best = x;
    if (fx > 0) {
      lo = x, flo = fx;
      if (side == 1) fhi /= 2;
      side = 1;
    } else {
      hi = x, fhi = fx;
      if (side == -1) flo /= 2;
      side = -1;
    }
    if (best_f <= 1e-15 * target) break;
  }
  slack = std::max(slack, best_f);
  return best;
}

Real solve_threshold(const FeFunction& u, Real l, Real m, Real M) {
  if (l >= M) return m;
  const Real target = positive_part(u, l);
  // g(k) = integral (k - u)_+ is increasing with g'(k) = |{u < k}|; safeguarded
  // Newton with bisection as the fallback.
  const auto& mesh = *u.mesh;
  auto g = [&](Real k, Real& slope) {
    Real s = 0;
    slope = 0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
      auto v = u.cell_values(c);
      for (auto& x : v) x = -x;
      s += mesh.volume(c) * tet_positive_part_mean(v, -k);
      slope += mesh.volume(c) * tet_above_fraction(v, -k);
    }
    return s;
  };
  Real lo = m, hi = 0, k = 0, best = 0, best_r = std::numeric_limits<Real>::infinity();
  const Real width = 1e-15 * std::abs(m);
  bool last = false;
  for (int it = 0; it < 200 && hi - lo > width; ++it) {
    Real slope;
    const Real r = g(k, slope) - target;
    if (std::abs(r) < best_r) best_r = std::abs(r), best = k;
    if (r == 0 || last) break;
    (r < 0 ? lo : hi) = k;
    // Newton on g^(1/4): g grows like (k - min u)^4 near the minimum vertex
    const Real gk = r + target;
    Real next = slope > 0 && gk > 0 ? k - 4 * gk * (1 - std::pow(target / gk, 0.25)) / slope
                                     : lo + (hi - lo) / 2;
    if (!(next > lo && next < hi)) next = lo + (hi - lo) / 2;
    // quadratic convergence: one more step after a tiny one reaches rounding level
    last = std::abs(next - k) <= 1e-10 * std::abs(m);
    k = next;
  }
  return best;
}

}  // namespace

Real threshold_k(const FeFunction& u, Real l) {
  const Real l1 = l1_norm(u);
  const Real mean = integral(u);
  if (std::abs(mean) > 1e-12 * std::max(l1, 1e-300))
    throw Error("threshold_k: u is not mean-zero (integral " + std::to_string(mean) + ")");
  require(l >= 0, "threshold_k: level must be >= 0");
  return solve_threshold(u, l, u.values.minCoeff(), u.values.maxCoeff());
}

SplitResult split_plain(const FeFunction& u, const ScalarField& h, Real eps) {
  SplitResult r = prepare(u, h, eps, false);
  const int n = u.mesh->dim();
  const Real en = std::pow(eps, n);
  const Real top = std::max<Real>(r.M, 0);
  const WeightedCells w = weighted(r);
  r.levels.push_back(top);
  Real t = top;
  for (;;) {
    const Real remaining = w.slab(0, t);
    if (t <= 0 || remaining <= en) {
      r.levels.push_back(0);
      r.budgets.push_back(remaining);
      break;
    }
    const Real s = solve_level([&](Real x) { return w.slab(x, t); }, t, en, r.max_slack);
    r.budgets.push_back(w.slab(s, t));
    r.levels.push_back(s);
    t = s;
  }
  r.N = static_cast<int>(r.levels.size()) - 1;
  for (int i = 1; i <= r.N; ++i) r.pieces.push_back({r.levels[i], r.levels[i - 1], 0, 0});
  return r;
}

SplitResult split_mean_zero(const FeFunction& u, const ScalarField& h, Real eps) {
  SplitResult r = prepare(u, h, eps, true);
  const Real l1 = l1_norm(u);
  if (std::abs(integral(u)) > 1e-12 * std::max(l1, 1e-300))
    throw Error("split_mean_zero: u is not mean-zero");
  const int n = u.mesh->dim();
  const Real en = std::pow(eps, n);
  const WeightedCells w = weighted(r);
  if (r.M <= 0) {
    // u == 0
    r.levels = {0, 0};
    r.thresholds = {0, 0};
    r.budgets = {0};
    r.N = 1;
    r.pieces.push_back({0, 0, 0, 0});
    return r;
  }
  auto H = [&](Real s, Real ks, Real t, Real kt) { return w.slab(s, t) + w.slab(kt, ks); };
  Real t = r.M, kt = r.m;
  const Real k0 = solve_threshold(u, 0, r.m, r.M);
  r.levels.push_back(t);
  r.thresholds.push_back(kt);
  for (;;) {
    const Real remaining = H(0, k0, t, kt);
    if (remaining <= en) {
      r.levels.push_back(0);
      r.thresholds.push_back(k0);
      r.budgets.push_back(remaining);
      break;
    }
    auto Hs = [&](Real x) { return H(x, solve_threshold(u, x, r.m, r.M), t, kt); };
    const Real s = solve_level(Hs, t, en, r.max_slack);
    const Real ks = solve_threshold(u, s, r.m, r.M);
    r.budgets.push_back(H(s, ks, t, kt));
    r.levels.push_back(s);
    r.thresholds.push_back(ks);
    t = s;
    kt = ks;
  }
  r.N = static_cast<int>(r.levels.size()) - 1;
  for (int i = 1; i <= r.N; ++i)
    r.pieces.push_back({r.levels[i], r.levels[i - 1], r.thresholds[i], r.thresholds[i - 1]});
  return r;
}

Real piece_integral(const SplitResult& r, int i) {
  const auto& p = r.pieces[i];
  // clamp(u,a,b) - a = (u-a)_+ - (u-b)_+ ; clamp(u,a,b) - b = (a-u)_+ - (b-u)_+
  Real v = positive_part(r.u, p.s) - positive_part(r.u, p.t);
  if (r.mean_zero) v += negative_part(r.u, p.kt) - negative_part(r.u, p.ks);
  return v;
}

Real SplitReport::worst_pointwise() const {
  return std::max({support, gradient_match, bounded, sign, sum, g_identity, h_identity});
}

SplitReport verify_split(const SplitResult& r, int samples, std::uint64_t seed) {
  SplitReport rep;
  const auto& mesh = *r.u.mesh;
  const int n = mesh.dim();
  const Real en = std::pow(r.epsilon, n);
  for (int i = 0; i < r.N; ++i) {
    if (i + 1 < r.N)
      rep.budget_error = std::max(rep.budget_error, std::abs(r.budgets[i] - en) / en);
    else
      rep.last_within = r.budgets[i] <= en * (1 + 1e-10);
  }
  rep.count_bound = r.N <= 1 + std::pow(r.h_norm / r.epsilon, n) * (1 + 1e-12);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, mesh.num_cells() - 1);
  std::exponential_distribution<Real> ex(1.0);
  std::vector<Real> val(r.N);
  std::vector<Vec3> grad(r.N);
  for (int k = 0; k < samples; ++k) {
    const Index c = pick(rng);
    Eigen::Vector4d l;
    for (int j = 0; j < 4; ++j) l[j] = ex(rng);
    l /= l.sum();
    const auto uv = r.u.cell_values(c);
    const Real u = l[0] * uv[0] + l[1] * uv[1] + l[2] * uv[2] + l[3] * uv[3];
    const Vec3 gu = r.u.gradient(c);
    // the split function: u+ for the plain split, u itself for the mean-zero one
    const Real U = r.mean_zero ? u : std::max<Real>(u, 0);
    const Vec3 gU = r.mean_zero || u > 0 ? gu : Vec3::Zero();
    Real total = 0;
    for (int i = 0; i < r.N; ++i) {
      val[i] = r.pieces[i].value(u);
      grad[i] = r.active[c] ? Vec3(r.pieces[i].slope(u) * gu) : Vec3::Zero();
      total += val[i];
    }
    rep.sum = std::max(rep.sum, std::abs(total - U));
    for (int i = 0; i < r.N; ++i) {
      const bool inside = r.in_set(i, c, u);
      if (!inside) rep.support = std::max(rep.support, grad[i].norm());
      if (inside) rep.gradient_match = std::max(rep.gradient_match, (gU - grad[i]).norm());
      rep.bounded = std::max(rep.bounded, std::abs(val[i]) - std::abs(U));
      rep.sign = std::max(rep.sign, -U * val[i]);
      Vec3 g = Vec3::Zero();
      for (int j = 0; j <= i; ++j) g += val[i] * grad[j];
      rep.g_identity = std::max(rep.g_identity, (val[i] * gU - g).norm());
      Vec3 hsum = Vec3::Zero();
      for (int j = i; j < r.N; ++j) hsum += val[j] * grad[i];
      rep.h_identity = std::max(rep.h_identity, (U * grad[i] - hsum).norm());
    }
  }

  // pairwise intersections of the level bands, measured on active cells
  Real overlap = 0;
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    if (!r.active[c]) continue;
    const auto uv = r.u.cell_values(c);
    for (int i = 0; i < r.N; ++i)
      for (int j = i + 1; j < r.N; ++j) {
        const auto& a = r.pieces[i];
        const auto& b = r.pieces[j];
        overlap += mesh.volume(c) * tet_slab_fraction(uv, std::max(a.s, b.s), std::min(a.t, b.t));
        if (r.mean_zero)
          overlap += mesh.volume(c) *
                     tet_slab_fraction(uv, std::max(a.kt, b.kt), std::min(a.ks, b.ks));
      }
  }
  rep.overlap = overlap;

  if (r.mean_zero) {
    const Real l1 = l1_norm(r.u);
    for (int i = 0; i < r.N; ++i)
      rep.max_piece_mean = std::max(rep.max_piece_mean, std::abs(piece_integral(r, i)) / l1);
  }
  return rep;
}

std::string SplitResult::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["N"] = N;
  j["variant"] = mean_zero ? "mean_zero" : "plain";
  j["levels"] = levels;
  if (mean_zero) j["thresholds"] = thresholds;
  j["budgets"] = budgets;
  j["h_norm"] = h_norm;
  j["max_slack"] = max_slack;
  return j.dump();
}

}  // namespace nlab
