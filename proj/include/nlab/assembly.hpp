#pragma once

#include "nlab/fe.hpp"

#include <Eigen/SparseLU>

#include <optional>
#include <string>

namespace nlab {

enum class Variant { Direct, Adjoint, ReducedDrift };

std::string to_string(Variant v);

// -div(A grad u + b u) + c . grad u + d u = f - div F,  (A grad u + b u) . nu = g + F . nu on Gamma
struct ProblemSpec {
  MeshPtr mesh;
  MatrixField A = MatrixField::constant(Mat3::Identity());
  VectorField b, c;
  ScalarField d;
  ScalarField f;
  VectorField F;
  ScalarField g;
  Real lambda = 1, Lambda = 1;
  Variant variant = Variant::Direct;
  std::optional<std::vector<int>> gamma_tags;  // nullopt: all of the boundary
  int quad_degree = 4;

  bool full_boundary() const { return !gamma_tags.has_value(); }
  Region gamma() const;
};

// Coefficients actually entering the bilinear form for the chosen variant.
struct EffectiveCoefficients {
  MatrixField A;
  VectorField b, c;
  ScalarField d;
  bool transpose_A = false;
};
EffectiveCoefficients effective(const ProblemSpec& spec);

struct System {
  SparseMatrix K;
  VectorX load;
  VectorX mass;  // m_i = integral of phi_i
  Real volume = 0;
  std::vector<std::string> warnings;
};

System assemble_forms(const ProblemSpec& spec);
SparseMatrix assemble_matrix(const ProblemSpec& spec);
VectorX assemble_load(const ProblemSpec& spec);
// Load vector for data (f, F, g) on a mesh, independent of coefficients.
VectorX assemble_load(const SimplicialMesh& mesh, const ScalarField& f, const VectorField& F,
                      const ScalarField& g, const Region& gamma, int degree);

enum class ConditionPair { BD, CD };

struct ConditionReport {
  ConditionPair pair = ConditionPair::BD;
  VectorX hat_values;  // v_j = integral of b . grad phi_j + d phi_j
  Real min_value = 0;
  Index argmin = -1;
  Real sum = 0;  // equals integral of d
  Real integral_d = 0;
  Real delta0 = 0;
  Real tolerance = 0;
  std::vector<Real> cell_div;       // div b per cell (0 inside cells for P0 b)
  std::vector<Real> facet_flux;     // b . nu per boundary facet
  Real max_div = 0;
  Real min_flux = 0;
  bool holds = false;
};

ConditionReport check_sign_condition(const ProblemSpec& spec, ConditionPair pair);
// Value of the functional phi -> integral b.grad phi + d phi for a P1 phi by direct quadrature.
Real condition_functional(const ProblemSpec& spec, ConditionPair pair, const FeFunction& phi);

struct IntegralD {
  Real value = 0;
  Real delta0 = 0;
};
IntegralD integral_d(const ProblemSpec& spec);

struct KernelReport {
  std::vector<Real> singular_values;        // of the mass-normalised matrix
  std::vector<Real> scaled_singular_values; // times |Omega|^{2/n}
  Real floor = 0;                           // (h / |Omega|^{1/n})^2
  std::vector<Real> ratios;                 // r_0 = s_1/floor, r_k = s_{k+1}/s_k
  int dimension = -1;
  bool ambiguous = false;
  std::array<int, 2> candidates{-1, -1};
  Real gap = 0;
  std::vector<FeFunction> basis;  // D-orthonormal nodal kernel vectors
  std::optional<FeFunction> uhat;  // dimension 1: positive, unit L^{2n/(n-2)} norm
  bool uhat_positive = false;
  Real uhat_residual = 0;
  int iterations = 0;
};

struct KernelOptions {
  int count = 6;
  int oversample = 4;
  int max_iterations = 200;
  Real tolerance = 1e-13;
  Real min_gap = 10;
};

KernelReport kernel_analysis(const ProblemSpec& spec, const KernelOptions& opt = {});

struct SolveResult {
  FeFunction solution;
  Real residual = 0;       // ||K u + m mu - load|| / ||load||
  Real multiplier = 0;     // mean-constraint multiplier (integral d = 0 route)
  Real compatibility = 0;  // Comp1 (direct) or Comp2 (adjoint) residual
  bool constrained = false;
  bool reduced = false;
  std::string route;
};

// Factorisation of one Neumann operator reused across right-hand sides.
class NeumannSolver {
 public:
  explicit NeumannSolver(const ProblemSpec& spec);

  // Solve K u = load (integral d > 0) or the mean-zero saddle system.
  SolveResult solve(const VectorX& load) const;
  // Solve with the transposed operator (the adjoint problem).
  SolveResult solve_transpose(const VectorX& load) const;

  const SparseMatrix& matrix() const { return K_; }
  const VectorX& mass() const { return m_; }
  bool constrained() const { return constrained_; }
  bool reduced() const { return reduced_; }
  Real volume() const { return volume_; }
  MeshPtr mesh() const { return mesh_; }
  // Kernel of K (constrained route only), normalised so that m . uhat = 1.
  const VectorX& kernel_vector() const;

 private:
  SolveResult solve_impl(const VectorX& load, bool transpose) const;
  void factorize(bool transpose) const;

  MeshPtr mesh_;
  SparseMatrix K_;
  VectorX m_;
  Real volume_ = 0;
  bool constrained_ = false;
  bool reduced_ = false;
  bool iterative_ = false;
  mutable std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu_, lut_;
  mutable SparseMatrix sys_, syst_;
  mutable std::optional<VectorX> kernel_;
};

SolveResult solve_neumann(const ProblemSpec& spec);
SolveResult solve_adjoint(const ProblemSpec& spec);

enum class Compatibility { Comp1, Comp2 };
// Comp1: integral f + integral g.  Comp2: uhat-weighted (uhat nodal, may be null).
Real compatibility_check(const ProblemSpec& spec, Compatibility which,
                         const FeFunction* uhat = nullptr);

struct ResidualReport {
  VectorX r;                  // B[u, phi_j] - load_j (NaN for excluded hats)
  std::vector<char> admissible;
  Real max_abs = 0;
  Real sum = 0;
  Real load_norm = 0;
  bool subsolution = false, supersolution = false, solution = false;
};
ResidualReport residual_vector(const ProblemSpec& spec, const FeFunction& u, Real tol = 1e-10);

ProblemSpec scale_problem(const ProblemSpec& spec, Real r);

// Kernel vector of the reduced operator (integral d = 0) with integral 1.
VectorX reduced_kernel(const ProblemSpec& spec);

}  // namespace nlab
