#include "nlab/experiments.hpp"
#include "nlab/geometry.hpp"
#include "nlab/lorentz.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace nlab;

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

MeshPtr reference_tet() {
  return std::make_shared<const SimplicialMesh>(
      std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)},
      std::vector<SimplicialMesh::Cell>{{0, 1, 2, 3}});
}

// Fraction of the reference tetrahedron where a < u <= b, by uniform sampling.
Real monte_carlo_slab(const std::array<Real, 4>& u, Real a, Real b, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<Real> E(1);
  int hit = 0;
  for (int k = 0; k < samples; ++k) {
    // normalised exponentials are uniform on the simplex
    std::array<Real, 4> w;
    Real s = 0;
    for (auto& x : w) s += (x = E(rng));
    Real v = 0;
    for (int i = 0; i < 4; ++i) v += w[i] / s * u[i];
    hit += (a < v && v <= b);
  }
  return Real(hit) / samples;
}

FeFunction random_p1(MeshPtr m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> U(-1, 1);
  VectorX v(m->num_vertices());
  for (Index i = 0; i < v.size(); ++i) v[i] = U(rng);
  return FeFunction(m, v);
}

}  // namespace

TEST_CASE("slab volumes in one cell") {
  auto t = reference_tet();
  const Real vol = 1.0 / 6;
  CHECK(sublevel_volume(*t, 0, {3, 3, 3, 3}, 2, 4) == doctest::Approx(vol).epsilon(1e-15));
  CHECK(sublevel_volume(*t, 0, {3, 3, 3, 3}, 4, 5) == 0);
  CHECK_THROWS_AS(sublevel_volume(*t, 0, {0, 1, 1, 1}, 0.5, 0.5), Error);

  // values (0,1,1,1): u = x + y + z, so {u <= 1/2} is a corner simplex of volume (1/2)^3
  CHECK(sublevel_volume(*t, 0, {0, 1, 1, 1}, 0, 0.5) / vol == doctest::Approx(0.125).epsilon(1e-14));

  const std::array<Real, 4> u{0.1, -0.7, 0.9, 0.3};
  for (auto [a, b] : {std::pair{-0.2, 0.4}, std::pair{0.0, 0.95}, std::pair{-1.0, -0.3}}) {
    const Real exact = sublevel_volume(*t, 0, u, a, b) / vol;
    CHECK(std::abs(exact - monte_carlo_slab(u, a, b, 2'000'000, 17)) < 2e-3);
  }
}

TEST_CASE("slab fractions are additive and complementary") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<Real> U(-1, 1);
  for (int k = 0; k < 200; ++k) {
    const std::array<Real, 4> u{U(rng), U(rng), U(rng), U(rng)};
    const Real a = U(rng), b = a + 0.5 * std::abs(U(rng)), c = b + 0.5 * std::abs(U(rng));
    CHECK(std::abs(tet_slab_fraction(u, a, b) + tet_slab_fraction(u, b, c) - tet_slab_fraction(u, a, c)) < 1e-14);
    CHECK(std::abs(tet_above_fraction(u, a) + tet_below_fraction(u, a) - 1) < 1e-14);
    // positive part mean agrees with the layer-cake integral of the above fraction
    const Real pos = tet_positive_part_mean(u, a);
    std::vector<TetPiece> above;
    TetPiece t;
    t.p = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    t.u = u;
    split_tet(t, a, nullptr, &above);
    Real direct = 0;
    for (const auto& p : above) {
      const Real v = std::abs(tet_signed_volume(p.p[0], p.p[1], p.p[2], p.p[3]));
      direct += v * ((p.u[0] + p.u[1] + p.u[2] + p.u[3]) / 4 - a);
    }
    CHECK(std::abs(pos - 6 * direct) < 1e-14);
  }
}

TEST_CASE("rearrangements") {
  auto m = unit_cube(4);
  SUBCASE("indicator") {
    std::vector<Real> v(m->num_cells(), 0.0), meas(m->num_cells());
    for (Index c = 0; c < m->num_cells(); ++c) {
      meas[c] = m->volume(c);
      if (m->centroid(c).x() < 0.5) v[c] = 1;
    }
    const auto prof = decreasing_rearrangement(v, meas);
    CHECK(prof.exact_steps);
    CHECK(prof.fstar(0.25) == 1);
    CHECK(prof.fstar(0.4999) == 1);
    CHECK(prof.fstar(0.5001) == 0);
    CHECK(std::abs(prof.support - 0.5) < 1e-14);
  }
  SUBCASE("constant") {
    const auto c = interpolate(m, [](const Vec3&) { return -2.5; });
    const auto prof = decreasing_rearrangement(c, Measure::Volume);
    for (Real t : {0.0, 0.3, 0.99}) CHECK(std::abs(prof.fstar(t) - 2.5) < 1e-14);
    CHECK(std::abs(Distribution(c, Measure::Volume)(2.4) - 1) < 1e-14);
    CHECK(Distribution(c, Measure::Volume)(2.5) == 0);
  }
  SUBCASE("x1 on the unit cube") {
    const auto x1 = interpolate(m, [](const Vec3& x) { return x.x(); });
    const Distribution d(x1, Measure::Volume);
    for (Real l : {0.0, 0.1, 0.33, 0.5, 0.77, 0.999}) CHECK(std::abs(d(l) - (1 - l)) < 1e-14);
    const auto prof = decreasing_rearrangement(x1, Measure::Volume);
    for (Real t : {0.05, 0.2, 0.5, 0.8}) CHECK(std::abs(prof.fstar(t) - (1 - t)) < 1e-12);
    // non-increasing
    for (std::size_t k = 1; k < prof.value.size(); ++k) CHECK(prof.value[k] <= prof.value[k - 1]);
  }
  SUBCASE("plateaus at both ends") {
    // clamp(x1, 0.3, 0.7) is P1 on a 10-grid; f* = 0.7 on (0, 0.3), 1 - t, then 0.3 after 0.7
    auto m10 = unit_cube(10);
    const auto u = interpolate(m10, [](const Vec3& x) { return std::clamp(x.x(), 0.3, 0.7); });
    const auto prof = decreasing_rearrangement(u, Measure::Volume);
    for (Real t : {0.05, 0.29, 0.31, 0.5, 0.69, 0.71, 0.95}) {
      const Real exact = t < 0.3 ? 0.7 : t > 0.7 ? 0.3 : 1 - t;
      CHECK(std::abs(prof.fstar(t) - exact) < 1e-12);
    }
    for (Real l : {0.2, 0.5}) CHECK(std::abs(prof.distribution(l) - (l < 0.3 ? 1 : 1 - l)) < 1e-12);
  }
  SUBCASE("profile reproduces the distribution at vertex levels") {
    const auto u = random_p1(m, 4);
    const Distribution d(u, Measure::Volume);
    const auto prof = decreasing_rearrangement(u, Measure::Volume);
    for (Index v = 0; v < m->num_vertices(); v += 7) {
      const Real l = std::abs(u[v]);
      CHECK(std::abs(prof.distribution(l) - d(l)) < 1e-10);
    }
  }
}

TEST_CASE("Lorentz norms of indicators") {
  auto m = unit_cube(4);
  std::vector<Real> v(m->num_cells(), 0.0);
  Real E = 0;
  for (Index c = 0; c < m->num_cells(); ++c)
    if (m->centroid(c).y() > 0.25) {
      v[c] = 1;
      E += m->volume(c);
    }
  const auto chi = ScalarField::per_cell(v);
  for (Real p : {1.0, 1.5, 2.0, 3.0, 6.0}) {
    CHECK(std::abs(lorentz_norm(*m, chi, LorentzSpec::weak(p)) / std::pow(E, 1 / p) - 1) < 1e-12);
    for (Real q : {0.5, 1.0, 2.0, 4.0}) {
      const Real exact = std::pow(p / q, 1 / q) * std::pow(E, 1 / p);
      CHECK(std::abs(lorentz_norm(*m, chi, LorentzSpec(p, q)) / exact - 1) < 1e-12);
    }
  }
  // on indicators the q-family decreases in q for q < p and (p/q)^{1/q} -> 1 as q -> inf
  CHECK(lorentz_norm(*m, chi, LorentzSpec(2, 1)) > lorentz_norm(*m, chi, LorentzSpec(2, 1.5)));
  CHECK(lorentz_norm(*m, chi, LorentzSpec(2, 1.5)) > lorentz_norm(*m, chi, LorentzSpec(2, 2)));
  CHECK(lorentz_norm(*m, chi, LorentzSpec(2, 8)) < lorentz_norm(*m, chi, LorentzSpec::weak(2)));
  CHECK_THROWS(LorentzSpec(0, 1));
  CHECK_THROWS(LorentzSpec(2, 0));
}

TEST_CASE("weak norm of x1") {
  auto m = unit_cube(4);
  const auto x1 = interpolate(m, [](const Vec3& x) { return x.x(); });
  const Real exact = std::sqrt(1.0 / 3) * (2.0 / 3);
  CHECK(std::abs(lorentz_norm(x1, LorentzSpec::weak(2)) / exact - 1) < 1e-10);
  // (3, 3) is the L3 norm
  CHECK(std::abs(lorentz_norm(x1, LorentzSpec(3, 3)) / std::pow(0.25, 1.0 / 3) - 1) < 1e-8);
}

TEST_CASE("equimeasurability against Lp") {
  auto m = unit_cube(4);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto u = random_p1(m, seed);
    for (Real p : {1.0, 2.0, 1.5, 3.0})
      CHECK(std::abs(lorentz_norm(u, LorentzSpec(p, p)) / lp_norm(u, p) - 1) < 1e-8);
  }
  // surface measure
  const auto u = random_p1(m, 7);
  const auto tr = trace_restrict(u);
  CHECK(std::abs(lorentz_norm(u, LorentzSpec(2, 2), Measure::Surface) / tr.lp_norm(2) - 1) < 1e-8);
}

TEST_CASE("dilation covariance") {
  auto m = unit_cube(3);
  auto m2 = std::make_shared<const SimplicialMesh>(dilate_mesh(*m, 2.5));
  const auto u = random_p1(m, 11);
  const FeFunction v(m2, u.values);
  for (auto spec : {LorentzSpec::weak(2), LorentzSpec(1.5, 2), LorentzSpec(3, 1)}) {
    const Real expect = std::pow(2.5, 3 / spec.p) * lorentz_norm(u, spec);
    CHECK(std::abs(lorentz_norm(v, spec) / expect - 1) < 1e-10);
  }
}

TEST_CASE("level engine batches agree with single queries") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<Real> U(-1, 1);
  std::vector<std::array<Real, 4>> vals(300);
  std::vector<Real> meas(300);
  for (std::size_t k = 0; k < vals.size(); ++k) {
    vals[k] = {U(rng), U(rng), U(rng), U(rng)};
    meas[k] = 0.5 + 0.5 * U(rng);
  }
  vals[3] = {0.25, 0.25, 0.25, 0.25};
  const LevelVolumeEngine<4> eng(vals, meas);
  std::vector<Real> lam;
  for (int i = 0; i <= 40; ++i) lam.push_back(-1.1 + i * 0.055);
  std::vector<Real> out;
  eng.above_sorted(lam, out);
  for (std::size_t i = 0; i < lam.size(); ++i) CHECK(std::abs(out[i] - eng.above(lam[i])) < 1e-12);
  CHECK(eng.plateau(0.25) == meas[3]);
  CHECK(std::abs(eng.above_or_equal(0.25) - eng.above(0.25) - meas[3]) < 1e-14);
  CHECK(eng.above(kInf) == 0);
}
