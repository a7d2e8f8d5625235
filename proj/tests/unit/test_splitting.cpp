#include "nlab/experiments.hpp"
#include "nlab/splitting.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

using namespace nlab;

namespace {

// A nodal profile phi(x1) on a uniform grid; its interpolant on the Kuhn cube mesh
// is exactly the piecewise-linear phi in x1, so every integral is one-dimensional.
struct Profile {
  std::vector<Real> nodes;  // values at i / n
  Real operator()(Real x) const {
    const int n = int(nodes.size()) - 1;
    const int i = std::min(n - 1, int(x * n));
    const Real t = x * n - i;
    return (1 - t) * nodes[i] + t * nodes[i + 1];
  }
  // integral over (0,1) of fn(phi(x)), split at the grid and at the given levels
  template <typename Fn>
  Real integrate(Fn fn, std::vector<Real> levels = {}) const {
    const int n = int(nodes.size()) - 1;
    std::vector<Real> cuts;
    for (int i = 0; i <= n; ++i) cuts.push_back(Real(i) / n);
    for (int i = 0; i < n; ++i)
      for (Real l : levels) {
        const Real a = nodes[i], b = nodes[i + 1];
        if ((a - l) * (b - l) < 0) cuts.push_back((i + (l - a) / (b - a)) / n);
      }
    std::sort(cuts.begin(), cuts.end());
    Real s = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      if (cuts[k + 1] > cuts[k])
        s += boost::math::quadrature::gauss_kronrod<Real, 31>::integrate(
            [&](Real x) { return fn((*this)(x)); }, cuts[k], cuts[k + 1], 0, 1e-15);
    return s;
  }
};

FeFunction on_cube(MeshPtr m, const Profile& p) {
  return interpolate(m, [&](const Vec3& x) { return p(x.x()); });
}

// Root of k -> integral (k - u)_+ = integral (u - l)_+ by plain bisection.
Real oracle_threshold(const Profile& p, Real l) {
  const Real target = p.integrate([l](Real v) { return std::max<Real>(0, v - l); }, {l});
  Real lo = *std::min_element(p.nodes.begin(), p.nodes.end()), hi = 0;
  for (int it = 0; it < 200; ++it) {
    const Real mid = (lo + hi) / 2;
    const Real g = p.integrate([mid](Real v) { return std::max<Real>(0, mid - v); }, {mid});
    (g < target ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

FeFunction random_mean_zero(MeshPtr m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> U(-1, 1);
  VectorX v(m->num_vertices());
  for (Index i = 0; i < v.size(); ++i) v[i] = U(rng);
  FeFunction u(m, v);
  u.values.array() -= integral(u) / m->total_volume();
  return u;
}

}  // namespace

TEST_CASE("threshold for the odd profile x1 - 1/2") {
  auto m = unit_cube(4);
  const auto u = interpolate(m, [](const Vec3& x) { return x.x() - 0.5; });
  CHECK(std::abs(threshold_k(u, 0)) < 1e-12);
  CHECK(std::abs(threshold_k(u, 0.25) + 0.25) < 1e-12);
  CHECK(threshold_k(u, 0.5) == -0.5);  // k_M = m
  CHECK(threshold_k(u, 0.7) == -0.5);
  CHECK(std::abs(threshold_k(u, 0.5 - 1e-9) + 0.5) < 1e-6);
}

TEST_CASE("threshold rejects functions that are not mean-zero") {
  auto m = unit_cube(2);
  const auto u = interpolate(m, [](const Vec3& x) { return x.x(); });
  CHECK_THROWS_AS(threshold_k(u, 0.1), Error);
}

TEST_CASE("threshold for an asymmetric profile matches the 1-D oracle") {
  auto m = unit_cube(8);
  Profile p{{-0.9, -0.8, -0.5, -0.2, 0.1, 0.15, 0.4, 0.9, 1.6}};
  const Real mean = p.integrate([](Real v) { return v; });
  for (auto& v : p.nodes) v -= mean;
  const auto u = on_cube(m, p);
  REQUIRE(std::abs(integral(u)) < 1e-14);
  for (Real l : {0.0, 0.1, 0.37, 0.8, 1.2}) {
    const Real k = threshold_k(u, l), ko = oracle_threshold(p, l);
    CHECK(std::abs(k - ko) < 1e-11);
  }
}

TEST_CASE("plain split basics") {
  auto m = unit_cube(4);
  const auto u = interpolate(m, [](const Vec3& x) { return x.x(); });

  SUBCASE("h = 0 gives one piece equal to u") {
    const auto r = split_plain(u, ScalarField::zero(), 0.1);
    CHECK(r.N == 1);
    for (Real v : {0.0, 0.3, 1.0}) CHECK(r.pieces[0].value(v) == doctest::Approx(v));
  }
  SUBCASE("eps above the norm of h gives one piece") {
    const auto r = split_plain(u, ScalarField::constant(1), 1.01);
    CHECK(r.N == 1);
  }
  SUBCASE("two pieces") {
    // h = 1: the top piece takes measure 0.6, the remaining 0.4 fits in one budget
    const Real eps = std::cbrt(0.6);
    const auto r = split_plain(u, ScalarField::constant(1), eps);
    CHECK(r.N == 2);
    REQUIRE(r.levels.size() == 3);
    CHECK(std::abs(r.levels[1] - 0.4) < 1e-10);
    CHECK(std::abs(r.budgets[0] - 0.6) < 1e-10);
    CHECK(std::abs(r.budgets[1] - 0.4) < 1e-10);
    const auto rep = verify_split(r, 500);
    CHECK(rep.worst_pointwise() < 1e-12);
    CHECK(rep.count_bound);
  }
  CHECK_THROWS_AS(split_plain(u, ScalarField::constant(1), 0), Error);
}

TEST_CASE("plain split of random positive parts") {
  auto m = unit_cube(4);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto u = random_mean_zero(m, seed);
    u.values = u.values.cwiseMax(0);
    std::vector<Real> h(m->num_cells());
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<Real> U(0, 2);
    for (auto& x : h) x = U(rng);
    const auto r = split_plain(u, ScalarField::per_cell(h), 0.3);
    const auto rep = verify_split(r, 400, seed);
    CHECK(rep.worst_pointwise() < 1e-12);
    CHECK(rep.budget_error < 1e-10);
    CHECK(rep.last_within);
    CHECK(rep.overlap == 0);
    CHECK(r.N <= 1 + std::pow(r.h_norm / r.epsilon, 3) + 1e-12);
    // telescoping at random points
    const PointLocator loc(m);
    std::uniform_real_distribution<Real> P(0, 1);
    for (int k = 0; k < 100; ++k) {
      const Vec3 x(P(rng), P(rng), P(rng));
      const Real ux = u.evaluate(loc, x);
      Real s = 0;
      for (const auto& piece : r.pieces) s += piece.value(ux);
      CHECK(std::abs(s - ux) < 1e-12);
    }
  }
}

TEST_CASE("mean-zero split") {
  auto m = unit_cube(8);
  SUBCASE("h = 0") {
    const auto u = interpolate(m, [](const Vec3& x) { return x.x() - 0.5; });
    const auto r = split_mean_zero(u, ScalarField::zero(), 0.2);
    CHECK(r.N == 1);
    CHECK(std::abs(piece_integral(r, 0)) < 1e-14);
    for (Real v : {-0.5, 0.0, 0.4}) CHECK(std::abs(r.pieces[0].value(v) - v) < 1e-15);
  }
  SUBCASE("two pieces integrate to zero against the 1-D oracle") {
    Profile p;
    for (int i = 0; i <= 8; ++i) p.nodes.push_back(Real(i) / 8 - 0.5);
    const auto u = on_cube(m, p);
    // by symmetry k_s = -s, so the top piece stops at s = 0.2
    const auto r = split_mean_zero(u, ScalarField::constant(1), std::cbrt(0.6));
    CHECK(r.N == 2);
    CHECK(std::abs(r.levels[1] - 0.2) < 1e-10);
    CHECK(std::abs(r.thresholds[1] + 0.2) < 1e-10);
    for (int i = 0; i < r.N; ++i) {
      const auto& piece = r.pieces[i];
      const Real oracle = p.integrate([&](Real v) { return piece.value(v); },
                                      {piece.s, piece.t, piece.ks, piece.kt});
      CHECK(std::abs(oracle) < 1e-10);
      CHECK(std::abs(piece_integral(r, i) - oracle) < 1e-12);
    }
    const auto rep = verify_split(r, 500);
    CHECK(rep.worst_pointwise() < 1e-12);
    CHECK(rep.max_piece_mean < 1e-10);
  }
  SUBCASE("random data") {
    auto c = unit_cube(4);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto u = random_mean_zero(c, seed);
      const auto r = split_mean_zero(u, ScalarField::constant(1.5), 0.4);
      const auto rep = verify_split(r, 300, seed);
      CHECK(rep.worst_pointwise() < 1e-12);
      CHECK(rep.budget_error < 1e-10);
      CHECK(rep.max_piece_mean < 1e-10);
      CHECK(rep.count_bound);
      for (std::size_t i = 1; i < r.thresholds.size(); ++i) CHECK(r.thresholds[i] >= r.thresholds[i - 1]);
    }
  }
  SUBCASE("rejects a non-zero mean") {
    const auto u = interpolate(m, [](const Vec3& x) { return x.x(); });
    CHECK_THROWS_AS(split_mean_zero(u, ScalarField::constant(1), 0.3), Error);
  }
}

TEST_CASE("clamp pieces") {
  const ClampPiece p{0.2, 0.6, -0.1, -0.4};
  CHECK(p.value(1.0) == doctest::Approx(0.4));
  CHECK(p.value(0.4) == doctest::Approx(0.2));
  CHECK(p.value(-0.2) == doctest::Approx(-0.1));
  CHECK(p.value(-1) == doctest::Approx(-0.3));
  CHECK(p.in_band(0.6));
  CHECK_FALSE(p.in_band(0.2));
  CHECK(p.in_band(-0.4));
  CHECK_FALSE(p.in_band(-0.1));
  CHECK(p.slope(0.3) == 1);
  CHECK(p.slope(0.7) == 0);
}
