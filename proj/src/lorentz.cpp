#include "nlab/lorentz.hpp"

#include "nlab/geometry.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nlab {

Real sublevel_volume(const SimplicialMesh& mesh, Index cell, const std::array<Real, 4>& u,
                     Real a, Real b) {
  if (!(a < b)) throw Error("sublevel_volume: empty interval (a >= b)");
  return mesh.volume(cell) * tet_slab_fraction(u, a, b);
}

namespace {

template <int Nv>
Real above_fraction(const std::array<Real, Nv>& u, Real level) {
  if constexpr (Nv == 4)
    return tet_above_fraction(u, level);
  else
    return tri_above_fraction(u, level);
}

}  // namespace

template <int Nv>
LevelVolumeEngine<Nv>::LevelVolumeEngine(std::vector<std::array<Real, Nv>> values,
                                         std::vector<Real> measures)
    : values_(std::move(values)), measures_(std::move(measures)) {
  require(values_.size() == measures_.size(), "LevelVolumeEngine: size mismatch");
  const std::size_t n = values_.size();
  cmin_.resize(n);
  cmax_.resize(n);
  min_value_ = std::numeric_limits<Real>::infinity();
  max_value_ = -std::numeric_limits<Real>::infinity();
  for (std::size_t c = 0; c < n; ++c) {
    cmin_[c] = *std::min_element(values_[c].begin(), values_[c].end());
    cmax_[c] = *std::max_element(values_[c].begin(), values_[c].end());
    min_value_ = std::min(min_value_, cmin_[c]);
    max_value_ = std::max(max_value_, cmax_[c]);
    total_ += measures_[c];
    if (cmin_[c] == cmax_[c]) plateaus_[cmin_[c]] += measures_[c];
  }
  by_min_.resize(n);
  std::iota(by_min_.begin(), by_min_.end(), Index(0));
  std::stable_sort(by_min_.begin(), by_min_.end(),
                   [&](Index a, Index b) { return cmin_[a] < cmin_[b]; });
  suffix_.assign(n + 1, 0);
  for (std::size_t k = n; k-- > 0;) suffix_[k] = suffix_[k + 1] + measures_[by_min_[k]];
}

template <int Nv>
Real LevelVolumeEngine<Nv>::above(Real lambda) const {
  // cells entirely above contribute via the suffix sum
  const auto it = std::upper_bound(by_min_.begin(), by_min_.end(), lambda,
                                   [&](Real l, Index c) { return l < cmin_[c]; });
  const std::size_t k = static_cast<std::size_t>(it - by_min_.begin());
  Real s = suffix_[k];
  for (std::size_t j = 0; j < k; ++j) {
    const Index c = by_min_[j];
    if (cmax_[c] > lambda) s += measures_[c] * above_fraction<Nv>(values_[c], lambda);
  }
  return s;
}

template <int Nv>
Real LevelVolumeEngine<Nv>::above_or_equal(Real lambda) const {
  return above(lambda) + plateau(lambda);
}

template <int Nv>
void LevelVolumeEngine<Nv>::above_sorted(const std::vector<Real>& lambdas,
                                         std::vector<Real>& out) const {
  out.assign(lambdas.size(), 0);
  std::vector<Index> active;
  std::size_t next = 0;
  const std::size_t n = by_min_.size();
  for (std::size_t q = 0; q < lambdas.size(); ++q) {
    const Real l = lambdas[q];
    if (q > 0 && l < lambdas[q - 1]) throw Error("above_sorted: levels must be ascending");
    while (next < n && cmin_[by_min_[next]] <= l) active.push_back(by_min_[next++]);
    std::size_t w = 0;
    Real s = suffix_[next];
    for (std::size_t r = 0; r < active.size(); ++r) {
      const Index c = active[r];
      if (cmax_[c] <= l) continue;  // never straddles again
      active[w++] = c;
      s += measures_[c] * above_fraction<Nv>(values_[c], l);
    }
    active.resize(w);
    out[q] = s;
  }
}

template <int Nv>
std::vector<Real> LevelVolumeEngine<Nv>::vertex_levels() const {
  std::vector<Real> v;
  v.reserve(values_.size() * Nv);
  for (const auto& a : values_) v.insert(v.end(), a.begin(), a.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template class LevelVolumeEngine<3>;
template class LevelVolumeEngine<4>;

// --- distribution ----------------------------------------------------------

Distribution::Distribution(const FeFunction& f, Measure measure, const Region& region) {
  const auto& mesh = *f.mesh;
  std::vector<Real> levels;
  if (measure == Measure::Volume) {
    require(region.kind != Region::Kind::Boundary, "Distribution: volume measure needs a cell region");
    std::vector<std::array<Real, 4>> pos, neg;
    std::vector<Real> meas;
    auto add = [&](Index c) {
      auto u = f.cell_values(c);
      pos.push_back(u);
      for (auto& x : u) x = -x;
      neg.push_back(u);
      meas.push_back(mesh.volume(c));
      for (Real x : pos.back()) levels.push_back(std::abs(x));
    };
    if (region.kind == Region::Kind::Cells)
      for (Index c : region.ids) add(c);
    else
      for (Index c = 0; c < mesh.num_cells(); ++c) add(c);
    pos4_ = std::make_unique<LevelVolumeEngine<4>>(std::move(pos), meas);
    neg4_ = std::make_unique<LevelVolumeEngine<4>>(std::move(neg), std::move(meas));
    total_ = pos4_->total_measure();
  } else {
    std::vector<std::array<Real, 3>> pos, neg;
    std::vector<Real> meas;
    auto add = [&](Index fc) {
      auto u = f.facet_values(fc);
      pos.push_back(u);
      for (auto& x : u) x = -x;
      neg.push_back(u);
      meas.push_back(mesh.facet(fc).area);
      for (Real x : pos.back()) levels.push_back(std::abs(x));
    };
    if (region.kind == Region::Kind::Boundary && !region.ids.empty())
      for (Index fc : region.ids) add(fc);
    else
      for (Index fc = 0; fc < mesh.num_facets(); ++fc) add(fc);
    pos3_ = std::make_unique<LevelVolumeEngine<3>>(std::move(pos), meas);
    neg3_ = std::make_unique<LevelVolumeEngine<3>>(std::move(neg), std::move(meas));
    total_ = pos3_->total_measure();
  }
  levels.push_back(0);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  breaks_ = std::move(levels);
}

Distribution::Distribution(std::vector<Real> values, std::vector<Real> measures) : p0_(true) {
  require(values.size() == measures.size(), "Distribution: size mismatch");
  std::vector<std::pair<Real, Real>> s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    total_ += measures[i];
    s.emplace_back(std::abs(values[i]), measures[i]);
  }
  std::sort(s.begin(), s.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (const auto& e : s) {
    if (!steps_.empty() && steps_.back().first == e.first)
      steps_.back().second += e.second;
    else
      steps_.push_back(e);
  }
  Real cum = 0;
  for (const auto& e : steps_) {
    cum += e.second;
    steps_cum_.push_back(cum);
  }
  breaks_.push_back(0);
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it)
    if (it->first > 0) breaks_.push_back(it->first);
}

Real Distribution::operator()(Real lambda) const {
  if (lambda < 0) return total_;
  if (p0_) {
    // steps_ sorted by decreasing value
    Real s = 0;
    for (std::size_t i = 0; i < steps_.size() && steps_[i].first > lambda; ++i)
      s = steps_cum_[i];
    return s;
  }
  if (pos4_) return pos4_->above(lambda) + neg4_->above(lambda);
  return pos3_->above(lambda) + neg3_->above(lambda);
}

Real Distribution::at_or_above(Real lambda) const {
  if (lambda <= 0) return total_;
  if (p0_) {
    Real s = 0;
    for (std::size_t i = 0; i < steps_.size() && steps_[i].first >= lambda; ++i)
      s = steps_cum_[i];
    return s;
  }
  if (pos4_) return pos4_->above_or_equal(lambda) + neg4_->above_or_equal(lambda);
  return pos3_->above_or_equal(lambda) + neg3_->above_or_equal(lambda);
}

void Distribution::at_or_above_sorted(const std::vector<Real>& lambdas,
                                      std::vector<Real>& out) const {
  if (p0_) {
    out.resize(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) out[i] = at_or_above(lambdas[i]);
    return;
  }
  evaluate_sorted(lambdas, out);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const Real l = lambdas[i];
    if (l <= 0) {
      out[i] = total_;
      continue;
    }
    out[i] += pos4_ ? pos4_->plateau(l) + neg4_->plateau(l) : pos3_->plateau(l) + neg3_->plateau(l);
  }
}

void Distribution::evaluate_sorted(const std::vector<Real>& lambdas, std::vector<Real>& out) const {
  if (p0_) {
    out.resize(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) out[i] = (*this)(lambdas[i]);
    return;
  }
  std::vector<Real> a, b;
  if (pos4_) {
    pos4_->above_sorted(lambdas, a);
    neg4_->above_sorted(lambdas, b);
  } else {
    pos3_->above_sorted(lambdas, a);
    neg3_->above_sorted(lambdas, b);
  }
  out.resize(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) out[i] = a[i] + b[i];
}

// --- rearrangement --------------------------------------------------------

Real RearrangementProfile::fstar(Real s) const {
  if (t.empty() || s >= support) return 0;
  if (exact_steps) {
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    return it == t.end() ? 0 : value[it - t.begin()];
  }
  if (s <= t.front()) return value.front();
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  if (it == t.end()) return value.back();
  const std::size_t k = it - t.begin();
  const Real w = (s - t[k - 1]) / (t[k] - t[k - 1]);
  return value[k - 1] + w * (value[k] - value[k - 1]);
}

Real RearrangementProfile::distribution(Real lambda) const {
  if (lambda < 0) return total_measure;
  if (exact_steps) {
    Real d = 0;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (value[k] > lambda) d = t[k];
    return d;
  }
  // samples ordered by decreasing value
  if (value.empty() || lambda >= value.front()) return 0;
  for (std::size_t k = 1; k < value.size(); ++k) {
    if (value[k] <= lambda) {
      const Real w = (value[k - 1] - lambda) / (value[k - 1] - value[k]);
      return t[k - 1] + w * (t[k] - t[k - 1]);
    }
  }
  return t.back();
}

std::string RearrangementProfile::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "t,fstar\n";
  for (std::size_t k = 0; k < t.size(); ++k) os << t[k] << ',' << value[k] << '\n';
  return os.str();
}

RearrangementProfile decreasing_rearrangement(const FeFunction& f, Measure measure,
                                              const Region& region, int refine) {
  Distribution d(f, measure, region);
  std::vector<Real> levels;
  const auto& b = d.breakpoints();
  for (std::size_t k = 0; k < b.size(); ++k) {
    levels.push_back(b[k]);
    if (k + 1 < b.size())
      for (int j = 1; j <= refine; ++j)
        levels.push_back(b[k] + (b[k + 1] - b[k]) * Real(j) / (refine + 1));
  }
  std::vector<Real> dist, closed;
  d.evaluate_sorted(levels, dist);
  d.at_or_above_sorted(levels, closed);
  RearrangementProfile p;
  p.total_measure = d.total_measure();
  p.support = d(0);
  // reverse: t ascending, value descending; a plateau at a level is a jump of the
  // distribution there and becomes a flat stretch of f* up to |{|f| >= level}|
  for (std::size_t k = levels.size(); k-- > 0;) {
    p.t.push_back(dist[k]);
    p.value.push_back(levels[k]);
    if (closed[k] > dist[k] && levels[k] > 0) {
      p.t.push_back(closed[k]);
      p.value.push_back(levels[k]);
    }
  }
  return p;
}

RearrangementProfile decreasing_rearrangement(std::vector<Real> values, std::vector<Real> measures) {
  Distribution d(std::move(values), std::move(measures));
  RearrangementProfile p;
  p.exact_steps = true;
  p.total_measure = d.total_measure();
  Real cum = 0;
  for (const auto& s : d.steps()) {
    if (s.first == 0) break;
    cum += s.second;
    p.t.push_back(cum);
    p.value.push_back(s.first);
  }
  p.support = cum;
  return p;
}

// --- norms ----------------------------------------------------------------

namespace {

Real p0_lorentz(const Distribution& d, const LorentzSpec& s) {
  Real prev = 0, acc = 0;
  for (const auto& [v, m] : d.steps()) {
    if (v == 0) break;
    const Real T = prev + m;
    if (s.weak_type())
      acc = std::max(acc, v * std::pow(T, 1.0 / s.p));
    else
      acc += std::pow(v, s.q) * (s.p / s.q) * (std::pow(T, s.q / s.p) - std::pow(prev, s.q / s.p));
    prev = T;
  }
  return s.weak_type() ? acc : std::pow(acc, 1.0 / s.q);
}

const std::vector<std::pair<Real, Real>>& gauss_nodes() {
  static const std::vector<std::pair<Real, Real>> nodes = [] {
    using G = boost::math::quadrature::gauss<Real, 15>;
    std::vector<std::pair<Real, Real>> n;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0) {
        n.emplace_back(0.0, w[i]);
      } else {
        n.emplace_back(-x[i], w[i]);
        n.emplace_back(x[i], w[i]);
      }
    }
    std::sort(n.begin(), n.end());
    return n;
  }();
  return nodes;
}

Real p1_strong(const Distribution& d, const LorentzSpec& s) {
  const auto& b = d.breakpoints();
  if (b.size() < 2) return 0;
  const Real e = s.q / s.p;
  auto integrand = [&](Real l, Real dl) {
    return dl > 0 ? std::pow(l, s.q - 1) * std::pow(dl, e) : 0.0;
  };
  // interior pieces: batched Gauss-Legendre
  const auto& gn = gauss_nodes();
  std::vector<Real> lam, wts;
  const std::size_t np = b.size() - 1;
  for (std::size_t k = 1; k + 1 < np; ++k) {
    const Real a = b[k], c = b[k + 1];
    const Real h = (c - a) / 2, m = (a + c) / 2;
    for (const auto& [x, w] : gn) {
      lam.push_back(m + h * x);
      wts.push_back(h * w);
    }
  }
  std::vector<Real> dist;
  d.evaluate_sorted(lam, dist);
  Real total = 0;
  for (std::size_t i = 0; i < lam.size(); ++i) total += wts[i] * integrand(lam[i], dist[i]);
  // end pieces carry the endpoint singularities
  boost::math::quadrature::tanh_sinh<Real> ts;
  auto f = [&](Real l) { return integrand(l, d(l)); };
  total += ts.integrate(f, b[0], b[1], 1e-13);
  if (np > 1) total += ts.integrate(f, b[np - 1], b[np], 1e-13);
  return std::pow(s.p * total, 1.0 / s.q);
}

Real p1_weak(const Distribution& d, const LorentzSpec& s) {
  const auto& b = d.breakpoints();
  if (b.size() < 2) return 0;
  const Real ip = 1.0 / s.p;
  auto phi = [&](Real l, Real dl) { return l * std::pow(dl, ip); };
  auto F = [&](Real l) { return phi(l, d(l)); };
  // Breakpoints use the left limit d(lambda^-) = |{|f| >= lambda}| as well.
  // d is non-increasing, so phi <= b[j] d(b[i])^{1/p} on (b[i], b[j]); a coarse
  // subset of breakpoints is swept first and only promising pieces are refined.
  Real best = 0;
  auto sweep = [&](std::size_t lo, std::size_t hi, std::size_t step, std::vector<std::size_t>& idx,
                   std::vector<Real>& open) {
    idx.clear();
    for (std::size_t k = lo; k < hi; k += step) idx.push_back(k);
    if (idx.back() != hi) idx.push_back(hi);
    std::vector<Real> lam, closed;
    for (auto k : idx) lam.push_back(b[k]);
    d.evaluate_sorted(lam, open);
    d.at_or_above_sorted(lam, closed);
    for (std::size_t i = 0; i < idx.size(); ++i)
      best = std::max({best, phi(lam[i], open[i]), phi(lam[i], closed[i])});
  };
  const std::size_t last = b.size() - 1;
  const std::size_t step = std::max<std::size_t>(1, last / 256);
  std::vector<std::size_t> cidx, fidx;
  std::vector<Real> copen, fopen;
  sweep(0, last, step, cidx, copen);
  std::vector<std::pair<Real, std::size_t>> coarse;
  for (std::size_t i = 0; i + 1 < cidx.size(); ++i) coarse.emplace_back(phi(b[cidx[i + 1]], copen[i]), i);
  std::sort(coarse.begin(), coarse.end(), std::greater<>());
  std::vector<std::pair<Real, std::size_t>> cand;
  for (const auto& [bound, i] : coarse) {
    if (bound <= best * (1 + 1e-12)) break;
    if (cidx[i + 1] - cidx[i] == 1) {
      cand.emplace_back(bound, cidx[i]);
      continue;
    }
    sweep(cidx[i], cidx[i + 1], 1, fidx, fopen);
    for (std::size_t j = 0; j + 1 < fidx.size(); ++j) cand.emplace_back(phi(b[fidx[j + 1]], fopen[j]), fidx[j]);
  }
  std::sort(cand.begin(), cand.end(), std::greater<>());
  constexpr int kInner = 4;
  constexpr std::size_t kMaxPieces = 64, kGolden = 6;
  std::vector<std::pair<Real, std::size_t>> sampled;
  for (std::size_t i = 0; i < std::min(cand.size(), kMaxPieces); ++i) {
    if (cand[i].first <= best * (1 + 1e-12)) break;
    const std::size_t k = cand[i].second;
    Real m = 0;
    for (int j = 1; j <= kInner; ++j) m = std::max(m, F(b[k] + (b[k + 1] - b[k]) * j / (kInner + 1)));
    best = std::max(best, m);
    sampled.emplace_back(m, k);
  }
  std::sort(sampled.begin(), sampled.end(), std::greater<>());
  const Real g = (std::sqrt(5.0) - 1) / 2;
  for (std::size_t i = 0; i < std::min(sampled.size(), kGolden); ++i) {
    Real lo = b[sampled[i].second], hi = b[sampled[i].second + 1];
    Real x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    Real f1 = F(x1), f2 = F(x2);
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(std::abs(hi), 1e-300); ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = F(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = F(x1);
      }
    }
    best = std::max({best, f1, f2});
  }
  return best;
}

}  // namespace

Real lorentz_norm(const Distribution& d, const LorentzSpec& spec) {
  if (d.piecewise_constant()) return p0_lorentz(d, spec);
  return spec.weak_type() ? p1_weak(d, spec) : p1_strong(d, spec);
}

Real lorentz_norm(const FeFunction& f, const LorentzSpec& spec, Measure measure,
                  const Region& region) {
  return lorentz_norm(Distribution(f, measure, region), spec);
}

Real lorentz_norm(const SimplicialMesh& mesh, const ScalarField& f, const LorentzSpec& spec,
                  Measure measure) {
  std::vector<Real> v, m;
  if (measure == Measure::Volume) {
    for (Index c = 0; c < mesh.num_cells(); ++c) {
      v.push_back(f.at_cell(c, mesh.centroid(c)));
      m.push_back(mesh.volume(c));
    }
  } else {
    for (Index fc = 0; fc < mesh.num_facets(); ++fc) {
      v.push_back(f.at_facet(fc, mesh.facet_centroid(fc)));
      m.push_back(mesh.facet(fc).area);
    }
  }
  return lorentz_norm(Distribution(std::move(v), std::move(m)), spec);
}

Real gradient_lorentz_norm(const FeFunction& f, const LorentzSpec& spec) {
  std::vector<Real> v, m;
  for (Index c = 0; c < f.mesh->num_cells(); ++c) {
    v.push_back(f.gradient(c).norm());
    m.push_back(f.mesh->volume(c));
  }
  return lorentz_norm(Distribution(std::move(v), std::move(m)), spec);
}

std::vector<Real> cell_magnitudes(const SimplicialMesh& mesh, const VectorField& F) {
  std::vector<Real> out(mesh.num_cells());
  for (Index c = 0; c < mesh.num_cells(); ++c) out[c] = F.at_cell(c, mesh.centroid(c)).norm();
  return out;
}

}  // namespace nlab
