#include "nlab/fe.hpp"

#include "nlab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace nlab {

FeFunction::FeFunction(MeshPtr m, VectorX v) : mesh(std::move(m)), values(std::move(v)) {
  require(mesh != nullptr, "FeFunction: null mesh");
  require(values.size() == mesh->num_vertices(), "FeFunction: value count != vertex count");
}

FeFunction FeFunction::zeros(MeshPtr m) {
  const Index n = m->num_vertices();
  return FeFunction(std::move(m), VectorX::Zero(n));
}

std::array<Real, 4> FeFunction::cell_values(Index c) const {
  const auto& t = mesh->cell(c);
  return {values[t[0]], values[t[1]], values[t[2]], values[t[3]]};
}

std::array<Real, 3> FeFunction::facet_values(Index f) const {
  const auto& v = mesh->facet(f).v;
  return {values[v[0]], values[v[1]], values[v[2]]};
}

Vec3 FeFunction::gradient(Index c) const {
  const auto& g = mesh->grads(c);
  const auto& t = mesh->cell(c);
  return values[t[0]] * g[0] + values[t[1]] * g[1] + values[t[2]] * g[2] + values[t[3]] * g[3];
}

Real FeFunction::evaluate_in_cell(Index c, const Vec3& x) const {
  const auto l = barycentric(*mesh, c, x);
  const auto u = cell_values(c);
  return l[0] * u[0] + l[1] * u[1] + l[2] * u[2] + l[3] * u[3];
}

Real FeFunction::evaluate(const PointLocator& loc, const Vec3& x) const {
  const auto [c, l] = loc.locate(x);
  const auto& t = mesh->cell(c);
  // exact nodal reproduction at vertices
  for (int i = 0; i < 4; ++i)
    if (mesh->vertex(t[i]) == x) return values[t[i]];
  const auto u = cell_values(c);
  return l[0] * u[0] + l[1] * u[1] + l[2] * u[2] + l[3] * u[3];
}

FeFunction interpolate(MeshPtr mesh, const std::function<Real(const Vec3&)>& fn) {
  VectorX v(mesh->num_vertices());
  for (Index i = 0; i < mesh->num_vertices(); ++i) {
    v[i] = fn(mesh->vertex(i));
    if (!std::isfinite(v[i]))
      throw Error("interpolate: non-finite value at vertex " + std::to_string(i));
  }
  return FeFunction(std::move(mesh), std::move(v));
}

Vec3 gradient(const FeFunction& f, Index cell) { return f.gradient(cell); }

Real evaluate(const FeFunction& f, const Vec3& x) {
  PointLocator loc(f.mesh);
  return f.evaluate(loc, x);
}

Region Region::boundary_tags(const SimplicialMesh& mesh, const std::vector<int>& tags) {
  Region r;
  r.kind = Kind::Boundary;
  for (Index f = 0; f < mesh.num_facets(); ++f)
    if (std::find(tags.begin(), tags.end(), mesh.facet(f).tag) != tags.end())
      r.ids.push_back(f);
  return r;
}

namespace {

template <typename Visit>
void for_each_cell(const SimplicialMesh& mesh, const Region& region, Visit&& visit) {
  if (region.kind == Region::Kind::Cells) {
    for (Index c : region.ids) visit(c);
  } else {
    for (Index c = 0; c < mesh.num_cells(); ++c) visit(c);
  }
}

template <typename Visit>
void for_each_facet(const SimplicialMesh& mesh, const Region& region, Visit&& visit) {
  if (!region.ids.empty()) {
    for (Index f : region.ids) visit(f);
  } else {
    for (Index f = 0; f < mesh.num_facets(); ++f) visit(f);
  }
}

TetPiece cell_piece(const SimplicialMesh& mesh, Index c, const std::array<Real, 4>& u) {
  const auto& t = mesh.cell(c);
  return {{mesh.vertex(t[0]), mesh.vertex(t[1]), mesh.vertex(t[2]), mesh.vertex(t[3])}, u};
}

TriPiece facet_piece(const SimplicialMesh& mesh, Index f, const std::array<Real, 3>& u) {
  const auto& v = mesh.facet(f).v;
  return {{mesh.vertex(v[0]), mesh.vertex(v[1]), mesh.vertex(v[2])}, u};
}

// Divided difference [v_0..v_k] x^beta for sorted v_i > 0. Clustered node sets go
// through the Taylor series about their centre, where the recursion would cancel.
Real power_divided_difference(const Real* v, int k, Real beta) {
  if (k == 0) return std::pow(v[0], beta);
  const Real lo = v[0], hi = v[k], c = (lo + hi) / 2;
  if (hi - lo <= 0.25 * c) {
    // sum_j binom(beta, j) c^(beta-j) h_{j-k}(v - c); h_m = complete homogeneous polynomial
    constexpr int terms = 64;
    std::array<Real, terms> h{};
    h[0] = 1;
    for (int i = 0; i <= k; ++i)
      for (int m = 1; m < terms; ++m) h[m] += (v[i] - c) * h[m - 1];
    Real coef = 1;  // binom(beta, j) c^(beta-j), starting at j = 0
    for (int j = 0; j < k; ++j) coef *= (beta - j) / (j + 1) / c;
    Real s = 0;
    for (int m = 0; m < terms; ++m) {
      const Real term = coef * h[m];
      s += term;
      const int j = k + m;
      coef *= (beta - j) / (j + 1) / c;
    }
    return s * std::pow(c, beta);
  }
  if (k == 1) return (std::pow(hi, beta) - std::pow(lo, beta)) / (hi - lo);
  return (power_divided_difference(v + 1, k - 1, beta) - power_divided_difference(v, k - 1, beta)) /
         (hi - lo);
}

// Mean of |u|^p over a simplex with vertex values u of one sign, from
// mean = n! Gamma(p+1)/Gamma(p+n+1) [u_0..u_n] x^(p+n); zero nodes drop a power each.
template <int Nv>
Real exact_power_mean(const std::array<Real, Nv>& u, Real p) {
  std::array<Real, Nv> v;
  for (int i = 0; i < Nv; ++i) v[i] = std::abs(u[i]);
  std::sort(v.begin(), v.end());
  int zeros = 0;
  while (zeros < Nv && v[zeros] == 0) ++zeros;
  if (zeros == Nv) return 0;
  constexpr int n = Nv - 1;
  Real factor = 1;
  for (int j = 1; j <= n; ++j) factor *= Real(j) / (p + j);
  return factor * power_divided_difference(v.data() + zeros, n - zeros, p + n - zeros);
}

// Integral of |u|^p over a simplex on which u does not change sign.
template <int Nv>
Real signed_piece_power(const LinearPiece<Nv>& piece, Real measure, Real p, int degree) {
  if (std::abs(p - std::round(p)) >= 1e-14) return measure * exact_power_mean<Nv>(piece.u, p);
  const auto& rule = simplex_rule<Nv - 1>(degree);
  Real s = 0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    Real u = 0;
    for (int k = 0; k < Nv; ++k) u += rule.points[q][k] * piece.u[k];
    s += rule.weights[q] * std::pow(std::abs(u), p);
  }
  return s * measure;
}

int power_degree(Real p) {
  const bool integer = std::abs(p - std::round(p)) < 1e-14;
  if (integer) return std::max(1, int(std::round(p)));
  return std::max(int(std::ceil(p)) + 1, 11);
}

Real tet_power_integral(const TetPiece& t, Real p, int degree) {
  const Real umin = *std::min_element(t.u.begin(), t.u.end());
  const Real umax = *std::max_element(t.u.begin(), t.u.end());
  if (umin >= 0 || umax <= 0) {
    const Real v = std::abs(tet_signed_volume(t.p[0], t.p[1], t.p[2], t.p[3]));
    return signed_piece_power<4>(t, v, p, degree);
  }
  std::vector<TetPiece> pieces;
  pieces.reserve(6);
  split_tet(t, 0.0, &pieces, &pieces);
  Real s = 0;
  for (const auto& q : pieces)
    s += signed_piece_power<4>(q, std::abs(tet_signed_volume(q.p[0], q.p[1], q.p[2], q.p[3])),
                               p, degree);
  return s;
}

Real tri_power_integral(const TriPiece& t, Real p, int degree) {
  const Real umin = *std::min_element(t.u.begin(), t.u.end());
  const Real umax = *std::max_element(t.u.begin(), t.u.end());
  if (umin >= 0 || umax <= 0)
    return signed_piece_power<3>(t, triangle_area(t.p[0], t.p[1], t.p[2]), p, degree);
  std::vector<TriPiece> pieces;
  pieces.reserve(3);
  split_triangle(t, 0.0, &pieces, &pieces);
  Real s = 0;
  for (const auto& q : pieces)
    s += signed_piece_power<3>(q, triangle_area(q.p[0], q.p[1], q.p[2]), p, degree);
  return s;
}

}  // namespace

Real integrate(const SimplicialMesh& mesh, const Integrand& fn, int degree,
               const Region& region) {
  Real total = 0;
  if (region.kind == Region::Kind::Boundary) {
    const auto& rule = simplex_rule<2>(degree);
    for_each_facet(mesh, region, [&](Index f) {
      const auto& v = mesh.facet(f).v;
      Real s = 0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec3 x = rule.points[q][0] * mesh.vertex(v[0]) +
                       rule.points[q][1] * mesh.vertex(v[1]) +
                       rule.points[q][2] * mesh.vertex(v[2]);
        s += rule.weights[q] * fn(f, x);
      }
      total += s * mesh.facet(f).area;
    });
    return total;
  }
  const auto& rule = simplex_rule<3>(degree);
  for_each_cell(mesh, region, [&](Index c) {
    const auto& t = mesh.cell(c);
    Real s = 0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& b = rule.points[q];
      const Vec3 x = b[0] * mesh.vertex(t[0]) + b[1] * mesh.vertex(t[1]) +
                     b[2] * mesh.vertex(t[2]) + b[3] * mesh.vertex(t[3]);
      s += rule.weights[q] * fn(c, x);
    }
    total += s * mesh.volume(c);
  });
  return total;
}

Real lp_norm(const FeFunction& f, Real p, const Region& region) {
  if (!(p >= 1)) throw Error("lp_norm: p < 1 (use lorentz_norm for quasi-norms)");
  const int degree = power_degree(p);
  const auto& mesh = *f.mesh;
  Real s = 0;
  if (region.kind == Region::Kind::Boundary) {
    for_each_facet(mesh, region, [&](Index fc) {
      s += tri_power_integral(facet_piece(mesh, fc, f.facet_values(fc)), p, degree);
    });
  } else {
    for_each_cell(mesh, region, [&](Index c) {
      s += tet_power_integral(cell_piece(mesh, c, f.cell_values(c)), p, degree);
    });
  }
  return std::pow(s, 1.0 / p);
}

namespace {

template <typename V>
Real magnitude(const V& v) {
  if constexpr (std::is_arithmetic_v<V>)
    return std::abs(v);
  else
    return v.norm();
}

template <typename V>
Real field_lp(const SimplicialMesh& mesh, const Field<V>& f, Real p, const Region& region) {
  if (!(p >= 1)) throw Error("lp_norm: p < 1 (use lorentz_norm for quasi-norms)");
  Real s = 0;
  const bool bnd = region.kind == Region::Kind::Boundary;
  if (f.kind() == Field<V>::Kind::Analytic) {
    auto fn = [&](Index, const Vec3& x) { return std::pow(magnitude(f.function()(x)), p); };
    s = integrate(mesh, fn, 8, region);
  } else if (bnd) {
    for_each_facet(mesh, region, [&](Index fc) {
      s += std::pow(magnitude(f.at_facet(fc, mesh.facet_centroid(fc))), p) * mesh.facet(fc).area;
    });
  } else {
    for_each_cell(mesh, region, [&](Index c) {
      s += std::pow(magnitude(f.at_cell(c, mesh.centroid(c))), p) * mesh.volume(c);
    });
  }
  return std::pow(s, 1.0 / p);
}

}  // namespace

Real lp_norm(const SimplicialMesh& mesh, const ScalarField& f, Real p, const Region& region) {
  return field_lp(mesh, f, p, region);
}

Real lp_norm(const SimplicialMesh& mesh, const VectorField& f, Real p, const Region& region) {
  return field_lp(mesh, f, p, region);
}

Real grad_lp_norm(const FeFunction& f, Real p, const Region& region) {
  require(p >= 1, "grad_lp_norm: p < 1");
  Real s = 0;
  for_each_cell(*f.mesh, region, [&](Index c) {
    s += std::pow(f.gradient(c).norm(), p) * f.mesh->volume(c);
  });
  return std::pow(s, 1.0 / p);
}

Real y_norm(const FeFunction& f) {
  return lp_norm(f, sobolev_exponent(f.mesh->dim())) + grad_lp_norm(f, 2);
}

Real w_norm(const FeFunction& f) { return lp_norm(f, 2) + grad_lp_norm(f, 2); }

Real integral(const FeFunction& f) {
  Real s = 0;
  for (Index c = 0; c < f.mesh->num_cells(); ++c) {
    const auto u = f.cell_values(c);
    s += f.mesh->volume(c) * (u[0] + u[1] + u[2] + u[3]) / 4;
  }
  return s;
}

Real integral(const SimplicialMesh& mesh, const ScalarField& f, int degree) {
  if (f.is_zero()) return 0;
  if (f.kind() == ScalarField::Kind::Constant) return f.constant_value() * mesh.total_volume();
  if (f.kind() == ScalarField::Kind::PerCell) {
    Real s = 0;
    for (Index c = 0; c < mesh.num_cells(); ++c) s += f.values()[c] * mesh.volume(c);
    return s;
  }
  return integrate(mesh, [&](Index c, const Vec3& x) { return f.at_cell(c, x); }, degree);
}

Real boundary_integral(const SimplicialMesh& mesh, const ScalarField& g, const Region& region,
                       int degree) {
  if (g.is_zero()) return 0;
  return integrate(mesh, [&](Index f, const Vec3& x) { return g.at_facet(f, x); }, degree,
                   region);
}

Real TraceFunction::lp_norm(Real p) const {
  FeFunction f(mesh, values);
  return nlab::lp_norm(f, p, Region::boundary(facets));
}

Real TraceFunction::evaluate_on_facet(Index f, const Vec3& x) const {
  const auto& v = mesh->facet(f).v;
  const Vec3& a = mesh->vertex(v[0]);
  const Vec3& b = mesh->vertex(v[1]);
  const Vec3& c = mesh->vertex(v[2]);
  const Vec3 n = (b - a).cross(c - a);
  const Real A = n.squaredNorm();
  const Real l1 = (x - a).cross(c - a).dot(n) / A;
  const Real l2 = (b - a).cross(x - a).dot(n) / A;
  return (1 - l1 - l2) * values[v[0]] + l1 * values[v[1]] + l2 * values[v[2]];
}

TraceFunction trace_restrict(const FeFunction& f, const Region& boundary) {
  require(boundary.kind == Region::Kind::Boundary, "trace_restrict: region must be a boundary subset");
  TraceFunction t;
  t.mesh = f.mesh;
  if (boundary.ids.empty()) {
    t.facets.resize(f.mesh->num_facets());
    for (Index i = 0; i < f.mesh->num_facets(); ++i) t.facets[i] = i;
  } else {
    t.facets = boundary.ids;
  }
  t.values = VectorX::Zero(f.values.size());
  for (Index fc : t.facets)
    for (Index v : f.mesh->facet(fc).v) t.values[v] = f.values[v];
  return t;
}

SparseMatrix mass_matrix(const SimplicialMesh& mesh) {
  std::vector<Triplet> trip;
  trip.reserve(16 * mesh.num_cells());
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const Real v = mesh.volume(c);
    const auto& t = mesh.cell(c);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        trip.emplace_back(int(t[i]), int(t[j]), v * (i == j ? 2.0 : 1.0) / 20.0);
  }
  SparseMatrix M(mesh.num_vertices(), mesh.num_vertices());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

VectorX lumped_mass(const SimplicialMesh& mesh) { return hat_integrals(mesh); }

VectorX hat_integrals(const SimplicialMesh& mesh) {
  VectorX m = VectorX::Zero(mesh.num_vertices());
  for (Index c = 0; c < mesh.num_cells(); ++c)
    for (Index v : mesh.cell(c)) m[v] += mesh.volume(c) / 4;
  return m;
}

EllipticityReport check_ellipticity(const SimplicialMesh& mesh, const MatrixField& A,
                                    Real lambda, Real Lambda, int degree) {
  EllipticityReport r;
  r.min_lambda = std::numeric_limits<Real>::infinity();
  const auto& rule = simplex_rule<3>(degree);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& t = mesh.cell(c);
    const std::size_t nq = A.piecewise_constant() ? 1 : rule.size();
    for (std::size_t q = 0; q < nq; ++q) {
      const auto& b = rule.points[q];
      const Vec3 x = b[0] * mesh.vertex(t[0]) + b[1] * mesh.vertex(t[1]) +
                     b[2] * mesh.vertex(t[2]) + b[3] * mesh.vertex(t[3]);
      const Mat3 a = A.at_cell(c, x);
      const Mat3 sym = (a + a.transpose()) / 2;
      Eigen::SelfAdjointEigenSolver<Mat3> es(sym, Eigen::EigenvaluesOnly);
      r.min_lambda = std::min(r.min_lambda, es.eigenvalues()[0]);
      Eigen::JacobiSVD<Mat3> svd(a);
      r.max_norm = std::max(r.max_norm, svd.singularValues()[0]);
    }
  }
  r.ok = r.min_lambda >= lambda * (1 - 1e-12) && r.max_norm <= Lambda * (1 + 1e-12);
  return r;
}

// --- reflection -----------------------------------------------------------

FeFunction reflect_function(const FeFunction& upper, const ReflectedMesh& reflected) {
  const Index nv = upper.mesh->num_vertices();
  const Index total = reflected.mesh.num_vertices();
  require(static_cast<Index>(reflected.mirror.size()) == total,
          "reflect_function: meshes are not related by reflect_mesh");
  VectorX v(total);
  for (Index i = 0; i < total; ++i) {
    const Index src = i < nv ? i : reflected.mirror[i];
    if (src < 0 || src >= nv) throw Error("reflect_function: unmatched vertex " + std::to_string(i));
    v[i] = upper.values[src];
  }
  return FeFunction(std::make_shared<SimplicialMesh>(reflected.mesh), std::move(v));
}

std::vector<Vec3> cell_psi_gradients(const SimplicialMesh& mesh) {
  require(mesh.graph.has_value(), "cell_psi_gradients: not a graph mesh");
  const auto& psi = mesh.graph->psi;
  std::vector<Vec3> out(mesh.num_cells());
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto& g = mesh.grads(c);
    const auto& t = mesh.cell(c);
    Vec3 d = Vec3::Zero();
    for (int i = 0; i < 4; ++i) d += psi[t[i]] * g[i];
    d.z() = 0;
    out[c] = d;
  }
  return out;
}

namespace {

template <typename V, typename Transform>
Field<V> reflect_generic(const SimplicialMesh& upper, const Field<V>& f,
                         const ReflectedMesh& r, Transform&& tr) {
  const auto src = sample_cells(upper, f);
  const auto gpsi = cell_psi_gradients(upper);
  ReflectionMap map(GraphDomainSpec{});
  std::vector<V> out(r.mesh.num_cells());
  for (Index c = 0; c < r.source_cells; ++c) {
    out[c] = src[c];
    out[r.cell_mirror[c]] = tr(src[c], map.jacobian(gpsi[c]));
  }
  return Field<V>::per_cell(std::move(out));
}

}  // namespace

ScalarField reflect_field(const SimplicialMesh& upper, const ScalarField& f,
                          const ReflectedMesh& r) {
  return reflect_generic(upper, f, r, [](Real v, const Mat3&) { return v; });
}

VectorField reflect_field(const SimplicialMesh& upper, const VectorField& f,
                          const ReflectedMesh& r) {
  return reflect_generic(upper, f, r, [](const Vec3& v, const Mat3& D) { return Vec3(D * v); });
}

MatrixField reflect_field(const SimplicialMesh& upper, const MatrixField& f,
                          const ReflectedMesh& r) {
  return reflect_generic(upper, f, r,
                         [](const Mat3& a, const Mat3& D) { return Mat3(D * a * D.transpose()); });
}

}  // namespace nlab
