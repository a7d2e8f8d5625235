#include "nlab/experiments.hpp"
#include "nlab/green.hpp"

#include <doctest.h>

#include <cmath>

using namespace nlab;

namespace {

ProblemSpec reaction(MeshPtr m, Real d = 1) {
  ProblemSpec s;
  s.mesh = m;
  if (d != 0) s.d = ScalarField::constant(d);
  return s;
}

ProblemSpec nonsymmetric(MeshPtr m) {
  ProblemSpec s;
  s.mesh = m;
  s.A = MatrixField::constant((Mat3() << 1, 0.3, 0, -0.2, 1, 0.1, 0, 0, 1.2).finished());
  s.b = VectorField::constant(Vec3(0.4, -0.3, 0.2));
  s.c = VectorField::constant(Vec3(-0.2, 0.1, 0.1));
  s.d = ScalarField::constant(1.5);
  return s;
}

}  // namespace

TEST_CASE("mollified delta") {
  auto m = unit_cube(6);
  const Vec3 y(0.5, 0.5, 0.5);
  const auto md = mollified_delta(*m, y, 0.2);
  CHECK(std::abs(md.load.sum() - 1) < 1e-13);
  CHECK(md.load.minCoeff() >= 0);
  CHECK(std::abs(md.ball_volume - 4 * kPi / 3 * 0.008) / md.ball_volume < 0.01);

  // hats supported beyond eps + h carry nothing
  const Real h = 1.0 / 6;
  for (Index v = 0; v < m->num_vertices(); ++v)
    if ((m->vertex(v) - y).norm() > 0.2 + h * std::sqrt(3.0) + 1e-12) CHECK(md.load[v] == 0);

  // a ball covering the domain gives hat integrals over the volume
  const auto all = mollified_delta(*m, y, 2);
  CHECK((all.load - hat_integrals(*m) / m->total_volume()).cwiseAbs().maxCoeff() < 1e-14);

  // boundary source: only the part inside the domain is used
  const auto corner = mollified_delta(*m, Vec3::Zero(), 0.3);
  CHECK(std::abs(corner.load.sum() - 1) < 1e-13);
  CHECK(std::abs(corner.ball_volume - kPi / 6 * 0.027) / corner.ball_volume < 0.01);
}

TEST_CASE("Green columns") {
  SUBCASE("positive for the reaction Laplacian, checked against a dense inverse") {
    auto m = unit_cube(4);
    const ProblemSpec s = reaction(m);
    const Vec3 y(0.5, 0.5, 0.5);
    const Real eps = 0.3;
    const auto G = green_column(s, y, eps);
    const MatrixX Kinv = MatrixX(assemble_matrix(s)).inverse();
    const VectorX oracle = Kinv * mollified_delta(*m, y, eps).load;
    CHECK((G.values - oracle).cwiseAbs().maxCoeff() < 1e-12 * oracle.cwiseAbs().maxCoeff());
    CHECK(G.values.minCoeff() > 0);
  }
  SUBCASE("mean-zero variant integrates to zero") {
    auto m = unit_cube(4);
    const auto G = green_column(reaction(m, 0), Vec3(0.25, 0.5, 0.75), 0.3);
    CHECK(std::abs(integral(G)) < 1e-10 * lp_norm(G, 1));
  }
  SUBCASE("pairing with an adjoint solve") {
    auto m = unit_cube(6);
    ProblemSpec s = nonsymmetric(m);
    const Vec3 y(0.5, 0.5, 0.5);
    const Real eps = 0.25;
    const auto G = green_column(s, y, eps);
    s.f = ScalarField::analytic([](const Vec3& x) { return std::cos(3 * x.x()) + x.y() * x.z(); });
    const auto v = solve_adjoint(s).solution;
    const Real lhs = mollified_delta(*m, y, eps).load.dot(v.values);
    const Real rhs = assemble_load(s).dot(G.values);
    CHECK(std::abs(lhs - rhs) < 1e-9 * std::abs(lhs));
  }
}

TEST_CASE("Green tables") {
  auto m = unit_cube(6);
  const ProblemSpec s = reaction(m);
  const auto src = nearest_vertices(*m, {Vec3(0.5, 0.5, 0.5), Vec3(0.2, 0.3, 0.8)});
  GreenOptions opt;
  opt.eps = 0.25;
  const auto t = green_table(s, src, opt);
  REQUIRE(t.G.cols() == 2);
  for (int k = 0; k < 2; ++k) {
    const auto col = green_column(s, m->vertex(src[k]), 0.25);
    CHECK((t.G.col(k) - col.values).cwiseAbs().maxCoeff() < 1e-14 * col.values.cwiseAbs().maxCoeff());
    const auto& n = t.norms[k];
    CHECK(std::isfinite(n.interior_weak));
    CHECK(std::isfinite(n.gradient_weak));
    CHECK(std::isfinite(n.boundary_weak));
    CHECK(n.boundary_weak > 0);
  }
  // the parallel path gives the same table
  opt.jobs = 3;
  const auto tp = green_table(s, src, opt);
  CHECK((tp.G - t.G).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("pointwise constant against the Newtonian scale") {
  // d = 1 on a cube large compared with the source spacing: r G ~ exp(-r) / (4 pi)
  auto m = box_mesh(Vec3::Constant(-2), Vec3::Constant(2), 32);
  const auto src = nearest_vertices(*m, {Vec3::Zero()});
  GreenOptions opt;
  opt.norms = true;
  const auto t = green_table(reaction(m), src, opt);
  const Real c = pointwise_bound_constant(t);
  const Real newton = 1 / (4 * kPi);
  CHECK(c < 3 * newton);
  CHECK(c > newton / 3);
}

TEST_CASE("representation formula") {
  auto m = unit_cube(6);
  const ProblemSpec s = nonsymmetric(m);
  const auto src = nearest_vertices(*m, {Vec3(0.5, 0.5, 0.5), Vec3(0.25, 0.75, 0.5)});
  GreenOptions opt;
  opt.norms = false;
  const auto t = green_table(s, src, opt);
  for (Real v : represent_solution(t, ScalarField::zero(), VectorField::zero(), ScalarField::zero()))
    CHECK(v == 0);

  // g-only data converges to the direct solve
  std::vector<Real> errs;
  for (int n : {4, 8}) {
    auto mm = unit_cube(n);
    const ProblemSpec sp = nonsymmetric(mm);
    const auto s2 = nearest_vertices(*mm, {Vec3(0.5, 0.5, 0.5), Vec3(0.25, 0.75, 0.5)});
    const auto tt = green_table(sp, s2, opt);
    const auto g = ScalarField::analytic([](const Vec3& x) { return x.x() + 2 * x.y() * x.y(); });
    const auto rep = represent_solution(tt, ScalarField::zero(), VectorField::zero(), g, 6);
    const auto dir = transposed_solution_at_sources(sp, tt, ScalarField::zero(), VectorField::zero(), g);
    Real e = 0, sc = 0;
    for (std::size_t k = 0; k < rep.size(); ++k) {
      e = std::max(e, std::abs(rep[k] - dir[k]));
      sc = std::max(sc, std::abs(dir[k]));
    }
    errs.push_back(e / sc);
  }
  CHECK(errs[1] < errs[0]);
}

TEST_CASE("symmetry") {
  auto m = unit_cube(6);
  const auto src = nearest_vertices(*m, {Vec3(0.5, 0.5, 0.5), Vec3(0.2, 0.3, 0.8), Vec3(0.8, 0.2, 0.3)});
  SUBCASE("d = 1, b = c = 0") {
    const auto r = check_symmetry(reaction(m), src, 0.2);
    CHECK(r.relative_paired() < 1e-12);
  }
  SUBCASE("symmetric A and b = c") {
    ProblemSpec s = reaction(m);
    s.A = MatrixField::constant((Mat3() << 1.5, 0.2, 0, 0.2, 1, 0, 0, 0, 1).finished());
    s.b = s.c = VectorField::constant(Vec3(0.1, 0.2, -0.1));
    CHECK(check_symmetry(s, src, 0.2).relative_paired() < 1e-9);
  }
  SUBCASE("paired values are exact for non-symmetric data") {
    CHECK(check_symmetry(nonsymmetric(m), src, 0.2).relative_paired() < 1e-9);
  }
}

TEST_CASE("scaling") {
  auto m = unit_cube(4);
  const auto src = nearest_vertices(*m, {Vec3(0.5, 0.5, 0.5), Vec3(0.25, 0.25, 0.75)});
  const ProblemSpec s = nonsymmetric(m);
  CHECK(check_green_scaling(s, 1, src).relative() < 1e-15);
  for (Real r : {0.5, 2.0}) {
    const auto rep = check_green_scaling(s, r, src);
    CHECK(rep.relative() < 1e-9);
    CHECK(rep.constant_change < 1e-9);
  }
  CHECK(check_green_scaling(reaction(m, 0), 2, src).relative() < 1e-9);
}
