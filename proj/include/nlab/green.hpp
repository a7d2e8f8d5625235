#pragma once

#include "nlab/assembly.hpp"

namespace nlab {

struct MollifiedDelta {
  VectorX load;        // integral of phi_y^eps phi_j, sums to 1
  Real ball_volume = 0;  // |Omega ∩ B_eps(y)|
  Real volume_error = 0; // change against one refinement level less
  Index cells = 0;       // cells carrying weight
};

// Normalised indicator of Omega ∩ B_eps(y) tested against the hats. Cut cells
// are refined adaptively `depth` times and integrated with an order-6 rule.
MollifiedDelta mollified_delta(const SimplicialMesh& mesh, const Vec3& y, Real eps, int depth = 4);

// Default radius: factor * local mesh size at the vertex.
Real default_epsilon(const SimplicialMesh& mesh, Index vertex, Real factor = 2);

struct GreenOptions {
  Real eps_factor = 2;
  std::optional<Real> eps;  // fixed radius overrides the rule
  bool adjoint = false;     // columns of G* instead of G
  bool norms = true;
  int jobs = 1;
  int depth = 4;
};

struct GreenNorms {
  Real interior_weak = 0;  // ||G(., y)||_{L^{n/(n-2), inf}(Omega)}
  Real gradient_weak = 0;  // ||grad G(., y)||_{L^{n/(n-1), inf}(Omega)}
  Real boundary_weak = 0;  // ||G(., y)||_{L^{(n-1)/(n-2), inf}(dOmega)}
  Real pointwise = 0;      // max |x-y|^{n-2} |G(x, y)| over |x-y| >= 2 eps
};

struct GreenTable {
  MeshPtr mesh;
  std::vector<Index> sources;  // vertex indices
  std::vector<Vec3> points;
  std::vector<Real> eps;
  MatrixX G;    // G(x_j, y_k): rows vertices, columns sources
  MatrixX Phi;  // mollified source loads, same layout
  bool mean_zero = false;
  bool adjoint = false;
  std::vector<GreenNorms> norms;
  std::vector<Real> residuals;
  std::vector<Real> ball_volumes, ball_errors;

  FeFunction column(Index k) const { return FeFunction(mesh, G.col(k)); }
  std::string to_csv() const;
  std::string norms_json() const;
};

FeFunction green_column(const ProblemSpec& spec, const Vec3& y, Real eps, bool adjoint = false);
GreenTable green_table(const ProblemSpec& spec, const std::vector<Index>& sources,
                       const GreenOptions& opt = {});
// Same, reusing an existing factorisation.
GreenTable green_table(const NeumannSolver& solver, const std::vector<Index>& sources,
                       const GreenOptions& opt = {});

GreenNorms green_norms(const FeFunction& G, const Vec3& y, Real eps);
Real pointwise_bound_constant(const GreenTable& table);

// v(y_k) = integral of G f + grad G . F + boundary integral of G g, per source.
std::vector<Real> represent_solution(const GreenTable& table, const ScalarField& f,
                                     const VectorField& F, const ScalarField& g, int degree = 4);
// Nodal values at the sources of the solution with the transposed operator and data (f, F, g).
std::vector<Real> transposed_solution_at_sources(const ProblemSpec& spec, const GreenTable& table,
                                                 const ScalarField& f, const VectorField& F,
                                                 const ScalarField& g);

struct SymmetryReport {
  Real paired = 0;     // max |Phi_a . G(., y_b) - Phi_b . G*(., y_a)|
  Real pointwise = 0;  // max |G(y_a, y_b) - G*(y_b, y_a)| over |y_a - y_b| >= separation
  Real scale = 0;      // max |G|
  Index pairs = 0;
  Real relative_paired() const { return paired / scale; }
  Real relative_pointwise() const { return pointwise / scale; }
};

SymmetryReport check_symmetry(const ProblemSpec& spec, const std::vector<Index>& sources,
                              Real separation, const GreenOptions& opt = {});

struct ScalingReport {
  Real deviation = 0;  // max |G_Omega - r^{2-n} G_{Omega_r}|
  Real scale = 0;      // max |G_Omega|
  Real constant_change = 0;  // relative change of the pointwise constant
  Real relative() const { return deviation / scale; }
};

ScalingReport check_green_scaling(const ProblemSpec& spec, Real r, const std::vector<Index>& sources,
                                  const GreenOptions& opt = {});

// Vertices nearest to the given points (deterministic source placement).
std::vector<Index> nearest_vertices(const SimplicialMesh& mesh, const std::vector<Vec3>& points);

}  // namespace nlab
