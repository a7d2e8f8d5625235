#include "nlab/assembly.hpp"
#include "nlab/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nlab;

namespace {

ProblemSpec laplace(MeshPtr m, Real d = 0) {
  ProblemSpec s;
  s.mesh = m;
  if (d != 0) s.d = ScalarField::constant(d);
  return s;
}

FeFunction random_p1(MeshPtr m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> U(-1, 1);
  VectorX v(m->num_vertices());
  for (Index i = 0; i < v.size(); ++i) v[i] = U(rng);
  return FeFunction(m, v);
}

ProblemSpec general(MeshPtr m) {
  ProblemSpec s;
  s.mesh = m;
  s.A = MatrixField::analytic([](const Vec3& x) {
    Mat3 A = Mat3::Identity();
    A(0, 1) = 0.3 * x.y();
    A(2, 0) = -0.2;
    return A;
  });
  s.b = VectorField::constant(Vec3(0.5, -0.2, 0.1));
  s.c = VectorField::analytic([](const Vec3& x) { return Vec3(x.z(), 0.3, -0.4 * x.x()); });
  s.d = ScalarField::analytic([](const Vec3& x) { return 1 + x.x() * x.y(); });
  s.f = ScalarField::analytic([](const Vec3& x) { return std::sin(x.x() + 2 * x.y()); });
  s.g = ScalarField::constant(0.25);
  return s;
}

Real l2_error(const FeFunction& u, const std::function<Real(const Vec3&)>& exact) {
  return std::sqrt(integrate(*u.mesh, [&](Index c, const Vec3& x) {
    const Real e = u.evaluate_in_cell(c, x) - exact(x);
    return e * e;
  }, 6));
}

}  // namespace

TEST_CASE("stiffness on the reference tetrahedron") {
  auto t = std::make_shared<const SimplicialMesh>(
      std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)},
      std::vector<SimplicialMesh::Cell>{{0, 1, 2, 3}});
  const MatrixX K = MatrixX(assemble_matrix(laplace(t)));
  // grad lambda_0 = (-1,-1,-1), grad lambda_k = e_k, volume 1/6
  MatrixX hand(4, 4);
  hand << 3, -1, -1, -1,  //
      -1, 1, 0, 0,        //
      -1, 0, 1, 0,        //
      -1, 0, 0, 1;
  CHECK((K - hand / 6).norm() < 1e-15);
  // mass part: |T| (1 + delta_ij) / 20
  const MatrixX M = MatrixX(assemble_matrix(laplace(t, 1))) - K;
  CHECK(std::abs(M(0, 0) - 2.0 / 120) < 1e-16);
  CHECK(std::abs(M(0, 1) - 1.0 / 120) < 1e-16);
}

TEST_CASE("constants lie in the kernel of the pure Neumann Laplacian") {
  auto m = unit_cube(3);
  const SparseMatrix K = assemble_matrix(laplace(m));
  const VectorX one = VectorX::Ones(m->num_vertices());
  CHECK((K * one).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("drift matrix sums") {
  auto m = unit_cube(3);
  ProblemSpec s = laplace(m);
  s.A = MatrixField::constant(Mat3::Zero());
  const Vec3 b(0.7, -0.3, 1.1);
  s.b = VectorField::constant(b);
  const SparseMatrix K = assemble_matrix(s);
  const VectorX one = VectorX::Ones(m->num_vertices());
  // sum over trial functions: integral of b . grad phi_i; over test functions: 0
  VectorX direct = VectorX::Zero(m->num_vertices());
  for (Index c = 0; c < m->num_cells(); ++c)
    for (int k = 0; k < 4; ++k) direct[m->cell(c)[k]] += m->volume(c) * b.dot(m->grads(c)[k]);
  CHECK((K * one - direct).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((K.transpose() * one).cwiseAbs().maxCoeff() < 1e-14);
  const auto cond = check_sign_condition(s, ConditionPair::BD);
  CHECK((cond.hat_values - direct).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("adjoint is the transpose") {
  auto m = unit_cube(3);
  ProblemSpec s = general(m);
  const SparseMatrix K = assemble_matrix(s);
  s.variant = Variant::Adjoint;
  const SparseMatrix Ka = assemble_matrix(s);
  CHECK(MatrixX(Ka - SparseMatrix(K.transpose())).cwiseAbs().maxCoeff() < 1e-13);
  // reduced drift folds c into b and drops c and d
  s.variant = Variant::ReducedDrift;
  const auto eff = effective(s);
  CHECK(eff.c.is_zero());
  CHECK(eff.d.is_zero());
}

TEST_CASE("sign condition") {
  SUBCASE("b = 0, d >= 0 holds") {
    auto m = unit_cube(3);
    ProblemSpec s = laplace(m);
    s.d = ScalarField::analytic([](const Vec3& x) { return x.x(); });
    const auto r = check_sign_condition(s, ConditionPair::BD);
    CHECK(r.holds);
    CHECK(r.min_value >= 0);
    CHECK(std::abs(r.sum - 0.5) < 1e-14);
    CHECK(std::abs(r.sum - r.integral_d) < 1e-12);
  }
  SUBCASE("b = e_n, d = 0 on the upper half box fails at the bottom") {
    auto m = box_mesh(Vec3(-1, -1, 0), Vec3(1, 1, 1), 4);
    ProblemSpec s = laplace(m);
    s.b = VectorField::constant(Vec3(0, 0, 1));
    const auto r = check_sign_condition(s, ConditionPair::BD);
    CHECK_FALSE(r.holds);
    CHECK(r.min_value < 0);
    CHECK(m->vertex(r.argmin).z() == 0);
    CHECK(std::abs(r.sum) < 1e-13);
    for (Index v = 0; v < m->num_vertices(); ++v)
      if (r.hat_values[v] < -1e-14) CHECK(m->vertex(v).z() == 0);
  }
  SUBCASE("c-pair uses c in place of b") {
    auto m = unit_cube(2);
    ProblemSpec s = laplace(m);
    s.c = VectorField::constant(Vec3(0, 0, 1));
    CHECK(check_sign_condition(s, ConditionPair::BD).holds);
    CHECK_FALSE(check_sign_condition(s, ConditionPair::CD).holds);
  }
  SUBCASE("functional is linear in phi") {
    auto m = unit_cube(3);
    const ProblemSpec s = general(m);
    const auto r = check_sign_condition(s, ConditionPair::BD);
    const auto phi = random_p1(m, 3);
    CHECK(std::abs(condition_functional(s, ConditionPair::BD, phi) - r.hat_values.dot(phi.values)) < 1e-12);
  }
}

TEST_CASE("integral of d and delta0") {
  auto m = unit_cube(2);
  const auto z = integral_d(laplace(m));
  CHECK(z.value == 0);
  CHECK(z.delta0 == 0);
  const auto one = integral_d(laplace(m, 1));
  CHECK(std::abs(one.value - 1) < 1e-14);
  CHECK(std::abs(one.delta0 - 1) < 1e-14);
  auto big = box_mesh(Vec3::Zero(), Vec3::Constant(2), 2);
  // |Omega|^{2/n - 1} integral d = 8^{-1/3} * 8
  CHECK(std::abs(integral_d(laplace(big, 1)).delta0 - 4) < 1e-13);
}

TEST_CASE("kernel dichotomy on a coarse cube") {
  auto m = unit_cube(4);
  const auto k0 = kernel_analysis(laplace(m));
  CHECK(k0.dimension == 1);
  CHECK_FALSE(k0.ambiguous);
  REQUIRE(k0.uhat);
  const Real c = 1 / std::pow(m->total_volume(), 1 / sobolev_exponent(3));
  CHECK((k0.uhat->values.array() - c).abs().maxCoeff() < 1e-10);
  CHECK(std::abs(lp_norm(*k0.uhat, 6) - 1) < 1e-10);
  CHECK(k0.uhat_positive);
  CHECK(kernel_analysis(laplace(m, 1)).dimension == 0);
}

TEST_CASE("Neumann solves") {
  SUBCASE("zero data with positive reaction gives zero") {
    auto m = unit_cube(3);
    const auto r = solve_neumann(laplace(m, 1));
    CHECK(r.solution.values.cwiseAbs().maxCoeff() == 0);
  }
  SUBCASE("manufactured cos(pi x1), d = 0 and d = 1") {
    for (Real d : {0.0, 1.0}) {
      std::vector<Real> err;
      for (int n : {4, 8, 16}) {
        auto m = unit_cube(n);
        ProblemSpec s = laplace(m, d);
        s.f = ScalarField::analytic([d](const Vec3& x) { return (kPi * kPi + d) * std::cos(kPi * x.x()); });
        const auto r = solve_neumann(s);
        CHECK(r.residual < 1e-10);
        CHECK(r.constrained == (d == 0));
        if (r.constrained) CHECK(std::abs(integral(r.solution)) < 1e-10 * lp_norm(r.solution, 1));
        err.push_back(l2_error(r.solution, [](const Vec3& x) { return std::cos(kPi * x.x()); }));
      }
      CHECK(err[1] / err[2] == doctest::Approx(4).epsilon(0.15));
      CHECK(err[0] / err[1] > 3);
    }
  }
  SUBCASE("adjoint equals direct for b = c = 0 and symmetric A") {
    auto m = unit_cube(4);
    ProblemSpec s = laplace(m, 1);
    s.A = MatrixField::constant((Mat3() << 2, 0.3, 0, 0.3, 1, 0.1, 0, 0.1, 1.5).finished());
    s.f = ScalarField::analytic([](const Vec3& x) { return x.x() - x.y() * x.z(); });
    const auto a = solve_neumann(s), b = solve_adjoint(s);
    CHECK((a.solution.values - b.solution.values).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("manufactured adjoint solution") {
    // adjoint operator -div(grad v + c v) + b . grad v + d v with b = 0, c = (0.3, 0, 0), d = 1
    std::vector<Real> err;
    for (int n : {4, 8, 16}) {
      auto m = unit_cube(n);
      ProblemSpec s = laplace(m, 1);
      s.c = VectorField::constant(Vec3(0.3, 0, 0));
      // v = cos(pi x1): -(v'' + 0.3 v') + v
      s.f = ScalarField::analytic([](const Vec3& x) {
        const Real t = kPi * x.x();
        return (kPi * kPi + 1) * std::cos(t) + 0.3 * kPi * std::sin(t);
      });
      // conormal of the adjoint: (grad v + c v) . nu = 0.3 cos(pi x1) nu_1
      s.g = ScalarField::analytic([](const Vec3& x) {
        if (x.x() < 1e-12) return -0.3 * std::cos(0.0);
        if (x.x() > 1 - 1e-12) return 0.3 * std::cos(kPi);
        return 0.0;
      });
      err.push_back(l2_error(solve_adjoint(s).solution, [](const Vec3& x) { return std::cos(kPi * x.x()); }));
    }
    CHECK(err[1] / err[2] == doctest::Approx(4).epsilon(0.15));
  }
}

TEST_CASE("compatibility") {
  auto m = unit_cube(3);
  ProblemSpec s = laplace(m);
  s.f = ScalarField::constant(1);
  CHECK(std::abs(compatibility_check(s, Compatibility::Comp1) - 1) < 1e-14);
  s.g = ScalarField::constant(-1.0 / 6);
  CHECK(std::abs(compatibility_check(s, Compatibility::Comp1)) < 1e-13);
  // b = 0: uhat is constant, Comp2 = uhat * Comp1
  s.g = ScalarField::zero();
  CHECK(std::abs(compatibility_check(s, Compatibility::Comp2) - 1 / std::pow(1.0, 1 / 6.0)) < 1e-12);
  auto big = box_mesh(Vec3::Zero(), Vec3::Constant(2), 3);
  ProblemSpec t = laplace(big);
  t.f = ScalarField::constant(1);
  const Real c1 = compatibility_check(t, Compatibility::Comp1), c2 = compatibility_check(t, Compatibility::Comp2);
  CHECK(std::abs(c2 / c1 - std::pow(8.0, -1 / 6.0)) < 1e-12);
}

TEST_CASE("residual vectors") {
  auto m = unit_cube(4);
  ProblemSpec s = general(m);
  const auto sol = solve_neumann(s);
  const auto r = residual_vector(s, sol.solution);
  CHECK(r.max_abs <= 1e-10 * r.load_norm);
  CHECK(r.solution);

  SUBCASE("partition of unity identity") {
    const auto u = random_p1(m, 5);
    const auto rr = residual_vector(s, u);
    // B[u, 1] = integral of c . grad u + d u
    const Real Bu1 = integrate(*m, [&](Index c, const Vec3& x) {
      return s.c.at_cell(c, x).dot(u.gradient(c)) + s.d.at_cell(c, x) * u.evaluate_in_cell(c, x);
    }, 6);
    // the load uses the assembly rule, so the data side must too
    const Real data = integral(*m, s.f, s.quad_degree) + boundary_integral(*m, s.g);
    CHECK(std::abs(rr.sum - (Bu1 - data)) < 1e-12);
  }
  SUBCASE("subtracting a hat shifts residuals by a stiffness column") {
    ProblemSpec p = laplace(m, 1);
    p.f = ScalarField::constant(1);
    const auto base = solve_neumann(p);
    const Index k = 40;
    FeFunction u = base.solution;
    const Real alpha = 0.1;
    u.values[k] -= alpha;
    const auto rr = residual_vector(p, u);
    const VectorX col = VectorX(assemble_matrix(p).col(k));
    const VectorX r0 = residual_vector(p, base.solution).r;
    CHECK((rr.r - r0 + alpha * col).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(rr.r[k] < 0);
    CHECK_FALSE(rr.supersolution);
  }
}

TEST_CASE("scaling covariance") {
  auto m = unit_cube(4);
  ProblemSpec s = general(m);
  const auto same = scale_problem(s, 1);
  CHECK((MatrixX(assemble_matrix(same)) - MatrixX(assemble_matrix(s))).cwiseAbs().maxCoeff() < 1e-15);
  const auto u = solve_neumann(s).solution;
  for (Real r : {0.5, 2.0, 4.0}) {
    const auto sr = scale_problem(s, r);
    const auto ur = solve_neumann(sr).solution;
    CHECK((ur.values - u.values).cwiseAbs().maxCoeff() <= 1e-10 * u.values.cwiseAbs().maxCoeff());
    const auto dr = integral_d(sr), d = integral_d(s);
    CHECK(std::abs(dr.value / (std::pow(r, -1) * d.value) - 1) < 1e-12);  // r^{2-n}, domain Omega / r
    CHECK(std::abs(dr.delta0 / d.delta0 - 1) < 1e-12);
  }
  CHECK_THROWS_AS(scale_problem(s, 0), Error);
}

TEST_CASE("solver reuse across right-hand sides") {
  auto m = unit_cube(4);
  const NeumannSolver solver(general(m));
  VectorX l1 = VectorX::Random(m->num_vertices()), l2 = VectorX::Random(m->num_vertices());
  const auto a = solver.solve(l1 + 2 * l2), b = solver.solve(l1), c = solver.solve(l2);
  CHECK((a.solution.values - b.solution.values - 2 * c.solution.values).cwiseAbs().maxCoeff() < 1e-12);
  const auto t = solver.solve_transpose(l1);
  CHECK((SparseMatrix(solver.matrix().transpose()) * t.solution.values - l1).norm() < 1e-10 * l1.norm());
}
