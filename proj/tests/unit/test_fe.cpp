#include "nlab/fe.hpp"
#include "nlab/experiments.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <numeric>
#include <random>

using namespace nlab;

namespace {

FeFunction random_p1(MeshPtr m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> U(-1, 1);
  VectorX v(m->num_vertices());
  for (Index i = 0; i < v.size(); ++i) v[i] = U(rng);
  return FeFunction(m, v);
}

// Tensor Gauss rule on the unit cube, independent of the simplex machinery.
template <typename Fn>
Real cube_integral(Fn fn) {
  using G = boost::math::quadrature::gauss<Real, 20>;
  return G::integrate([&](Real x) {
    return G::integrate([&](Real y) {
      return G::integrate([&](Real z) { return fn(Vec3(x, y, z)); }, 0.0, 1.0);
    }, 0.0, 1.0);
  }, 0.0, 1.0);
}

}  // namespace

TEST_CASE("interpolation") {
  auto m = unit_cube(3);
  const auto one = interpolate(m, [](const Vec3&) { return 1.0; });
  CHECK((one.values.array() == 1).all());
  CHECK_THROWS_AS(interpolate(m, [](const Vec3& x) { return x.x() > 0.5 ? NAN : 0.0; }), Error);

  const auto u = interpolate(m, [](const Vec3& x) { return 2 * x.x() - x.y() + 0.5 * x.z() + 1; });
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<Real> U(0, 1);
  for (int k = 0; k < 40; ++k) {
    const Vec3 x(U(rng), U(rng), U(rng));
    CHECK(std::abs(evaluate(u, x) - (2 * x.x() - x.y() + 0.5 * x.z() + 1)) < 1e-13);
  }
  for (Index v = 0; v < m->num_vertices(); ++v) CHECK(evaluate(u, m->vertex(v)) == doctest::Approx(u[v]).epsilon(1e-14));
}

TEST_CASE("interpolation error of cos(pi x1) is second order") {
  std::vector<Real> err;
  for (int n : {4, 8, 16}) {
    auto m = unit_cube(n);
    const auto u = interpolate(m, [](const Vec3& x) { return std::cos(kPi * x.x()); });
    const Real e2 = integrate(*m, [&](Index c, const Vec3& x) {
      const Real d = u.evaluate_in_cell(c, x) - std::cos(kPi * x.x());
      return d * d;
    }, 8);
    err.push_back(std::sqrt(e2));
  }
  // h^2 rate: factor 4 per halving, within 10%
  CHECK(err[0] / err[1] == doctest::Approx(4).epsilon(0.1));
  CHECK(err[1] / err[2] == doctest::Approx(4).epsilon(0.1));
}

TEST_CASE("gradients") {
  auto m = unit_cube(2);
  const auto x1 = interpolate(m, [](const Vec3& x) { return x.x(); });
  const auto c = interpolate(m, [](const Vec3&) { return 3.0; });
  for (Index k = 0; k < m->num_cells(); ++k) {
    CHECK((gradient(x1, k) - Vec3(1, 0, 0)).norm() < 1e-14);
    CHECK(gradient(c, k).norm() < 1e-14);
  }

  // reference tetrahedron: lambda_1 = x
  auto ref = std::make_shared<const SimplicialMesh>(
      std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)},
      std::vector<SimplicialMesh::Cell>{{0, 1, 2, 3}});
  const FeFunction hat(ref, (VectorX(4) << 0, 1, 0, 0).finished());
  CHECK((gradient(hat, 0) - Vec3(1, 0, 0)).norm() < 1e-15);
  const FeFunction hat0(ref, (VectorX(4) << 1, 0, 0, 0).finished());
  CHECK((gradient(hat0, 0) - Vec3(-1, -1, -1)).norm() < 1e-15);
  CHECK_THROWS_AS(evaluate(hat, Vec3(1, 1, 1)), OutsideDomain);
}

TEST_CASE("integration") {
  auto m = unit_cube(3);
  CHECK(std::abs(integrate(*m, [](Index, const Vec3&) { return 1.0; }, 1) - 1) < 1e-14);
  CHECK(std::abs(integrate(*m, [](Index, const Vec3&) { return 1.0; }, 1, Region::boundary()) - 6) < 6e-14);
  CHECK(std::abs(integrate(*m, [](Index, const Vec3& x) { return x.x() * x.y(); }, 2) - 0.25) < 1e-15);
  const Real oracle = cube_integral([](const Vec3& x) { return std::exp(x.x()) * std::sin(x.y() + x.z()); });
  CHECK(std::abs(integrate(*m, [](Index, const Vec3& x) { return std::exp(x.x()) * std::sin(x.y() + x.z()); }, 9) -
                 oracle) < 1e-6);
  // deterministic: bit-identical repeats
  auto fn = [](Index, const Vec3& x) { return std::sin(7 * x.x()) * x.y() + x.z(); };
  CHECK(integrate(*m, fn, 6) == integrate(*m, fn, 6));
  // boundary tags: face x1 = 1 has area 1
  CHECK(std::abs(integrate(*m, [](Index, const Vec3&) { return 1.0; }, 1, Region::boundary_tags(*m, {2})) - 1) <
        1e-14);
}

TEST_CASE("quadrature rules are exact to their degree") {
  for (int d : {1, 3, 5, 7, 9}) {
    CHECK(max_monomial_error<Real, 3>(simplex_rule<3>(d), simplex_rule<3>(d).degree) < 1e-12);
    CHECK(max_monomial_error<Real, 2>(simplex_rule<2>(d), simplex_rule<2>(d).degree) < 1e-12);
    Real w = 0;
    for (Real x : simplex_rule<3>(d).weights) w += x;
    CHECK(std::abs(w - 1) < 1e-14);
  }
}

TEST_CASE("Lp norms") {
  auto m = unit_cube(4);
  const auto two = interpolate(m, [](const Vec3&) { return 2.0; });
  CHECK(std::abs(lp_norm(two, 2) - 2) < 1e-14);
  const auto x1 = interpolate(m, [](const Vec3& x) { return x.x(); });
  CHECK(std::abs(lp_norm(x1, 2) - 1 / std::sqrt(3.0)) < 1e-14);
  // non-integer exponent: integral of x^p is 1/(p+1)
  CHECK(std::abs(lp_norm(x1, 1.5) - std::pow(1 / 2.5, 1 / 1.5)) < 1e-13);
  CHECK(std::abs(lp_norm(x1, 3.7) - std::pow(1 / 4.7, 1 / 3.7)) < 1e-13);
  CHECK_THROWS_AS(lp_norm(x1, 0.5), Error);

  // P0 indicator of half the cells
  std::vector<Real> ind(m->num_cells(), 0.0);
  Real E = 0;
  for (Index c = 0; c < m->num_cells(); c += 2) {
    ind[c] = 1;
    E += m->volume(c);
  }
  for (Real p : {1.0, 2.0, 3.0, 1.5})
    CHECK(std::abs(lp_norm(*m, ScalarField::per_cell(ind), p) - std::pow(E, 1 / p)) < 1e-13);

  // signed P1 function against the tensor oracle on its interpolant
  const auto u = interpolate(m, [](const Vec3& x) { return x.x() - 0.3 - 0.2 * x.y(); });
  const Real p = 2.5;
  const Real oracle = std::pow(cube_integral([](const Vec3& x) { return std::pow(std::abs(x.x() - 0.3 - 0.2 * x.y()), 2.5); }), 1 / p);
  CHECK(std::abs(lp_norm(u, p) - oracle) < 1e-6);
}

TEST_CASE("trace restriction") {
  auto m = unit_cube(3);
  const auto one = interpolate(m, [](const Vec3&) { return 1.0; });
  const auto t1 = trace_restrict(one);
  CHECK(std::abs(t1.lp_norm(4) - std::pow(6.0, 0.25)) < 1e-13);
  const auto x1 = interpolate(m, [](const Vec3& x) { return x.x(); });
  const auto face = trace_restrict(x1, Region::boundary_tags(*m, {2}));
  for (Index f : face.facets)
    for (Index v : m->facet(f).v) CHECK(face.values[v] == 1);
  CHECK(std::abs(face.lp_norm(2) - 1) < 1e-14);
}

TEST_CASE("norms of random P1 functions") {
  auto m = unit_cube(4);
  const auto u = random_p1(m, 9);
  const Real yn = y_norm(u), wn = w_norm(u);
  CHECK(yn == doctest::Approx(lp_norm(u, 6) + grad_lp_norm(u, 2)).epsilon(1e-14));
  CHECK(wn == doctest::Approx(lp_norm(u, 2) + grad_lp_norm(u, 2)).epsilon(1e-14));
  // unit volume: L2 <= L6
  CHECK(lp_norm(u, 2) <= lp_norm(u, 6) * (1 + 1e-14));
  CHECK(std::abs(integral(u) - hat_integrals(*m).dot(u.values)) < 1e-14);
  const SparseMatrix M = mass_matrix(*m);
  CHECK(std::abs(u.values.dot(M * u.values) - std::pow(lp_norm(u, 2), 2)) < 1e-13);
  CHECK((lumped_mass(*m) - hat_integrals(*m)).norm() < 1e-14);
}

TEST_CASE("ellipticity sampling") {
  auto m = unit_cube(2);
  Mat3 A = Mat3::Identity();
  A(0, 1) = 0.5;  // sym part has eigenvalues 1 +- 0.25
  const auto rep = check_ellipticity(*m, MatrixField::constant(A), 0.7, 1.3);
  CHECK(rep.ok);
  CHECK(std::abs(rep.min_lambda - 0.75) < 1e-12);
  CHECK_FALSE(check_ellipticity(*m, MatrixField::constant(A), 0.8, 1.3).ok);
}

TEST_CASE("reflected functions and fields") {
  GraphDomainSpec flat;
  auto up = std::make_shared<const SimplicialMesh>(build_graph_domain_mesh(flat, 4));
  const auto ref = reflect_mesh(*up, ReflectionMap(flat));
  const auto xn = interpolate(up, [](const Vec3& x) { return x.z(); });
  const auto r = reflect_function(xn, ref);
  for (Index v = 0; v < ref.mesh.num_vertices(); ++v) {
    const Vec3& x = ref.mesh.vertex(v);
    CHECK(std::abs(r[v] - std::abs(x.z())) < 1e-14);  // u(Psi^{-1} y) = -y_n below
  }

  // measure preservation of P0 data
  GraphDomainSpec s;
  s.M = 0.5;
  s.psi = [](Real x, Real) { return 0.5 * x; };
  const auto g = build_graph_domain_mesh(s, 4);
  const auto rg = reflect_mesh(g, ReflectionMap(s));
  std::vector<Real> vals(g.num_cells());
  for (Index c = 0; c < g.num_cells(); ++c) vals[c] = 1 + std::sin(Real(c));
  const auto rf = reflect_field(g, ScalarField::per_cell(vals), rg);
  std::vector<Index> lower;
  for (Index c = rg.source_cells; c < rg.mesh.num_cells(); ++c) lower.push_back(c);
  std::vector<Index> upper(g.num_cells());
  std::iota(upper.begin(), upper.end(), Index(0));
  for (Real p : {1.0, 2.0, 3.0})
    CHECK(lp_norm(rg.mesh, rf, p, Region::cells(lower)) ==
          doctest::Approx(lp_norm(g, ScalarField::per_cell(vals), p)).epsilon(1e-13));
}
