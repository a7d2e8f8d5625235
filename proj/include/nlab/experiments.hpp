#pragma once

#include "nlab/config.hpp"
#include "nlab/green.hpp"
#include "nlab/splitting.hpp"

#include <map>

namespace nlab {

struct Check {
  std::string name;
  bool pass = false;
  Real value = 0;
  Real bound = 0;
  std::string relation;  // "<=", ">=", "==" or "holds"
};

// Structured result of one experiment. Everything in to_json() is a pure
// function of (config, seed); timings go to the run metadata instead.
struct ExperimentReport {
  std::string name, anchor;
  std::uint64_t seed = 0;
  Json inputs = Json::object();
  Json results = Json::object();
  Json tolerances = Json::object();
  std::vector<std::string> mesh_hashes;
  std::vector<Check> checks;
  std::map<std::string, std::string> tables;  // file name -> CSV text
  double runtime = 0;

  void record_mesh(const SimplicialMesh& mesh);
  bool expect_le(const std::string& what, Real value, Real bound);
  bool expect_ge(const std::string& what, Real value, Real bound);
  bool expect(const std::string& what, bool ok, Real value = 0);
  bool passed() const;
  const Check* find_check(const std::string& what) const;
  Json to_json() const;
};

struct ExperimentContext {
  std::uint64_t seed = 1;
  Json options = Json::object();
  std::vector<int> refinements;
  std::map<std::string, Real> tolerances;
  std::optional<MeshConfig> mesh;
  std::optional<ProblemConfig> problem;
  int jobs = 1;

  template <typename T>
  T option(const std::string& key, const T& fallback) const {
    if (!options.contains(key)) return fallback;
    try {
      return options.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("options." + key, e.what());
    }
  }
  // Tolerance with an optional config override; recorded in the report.
  Real tolerance(const std::string& key, Real fallback, ExperimentReport& report) const;
  std::vector<int> levels(const std::vector<int>& fallback) const {
    return refinements.empty() ? fallback : refinements;
  }
};

using ExperimentFn = ExperimentReport (*)(const ExperimentContext&);

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string anchor;
  ExperimentFn run;
};

// Stable order; names are unique.
const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo* find_experiment(const std::string& name);
ExperimentReport run_experiment(const ExperimentInfo& info, const ExperimentContext& ctx);

// --- shared helpers ---------------------------------------------------------------

MeshPtr box_mesh(const Vec3& lo, const Vec3& hi, int n);
MeshPtr unit_cube(int n);

// ||u||_{L^{2n/(n-2)}} and ||grad u||_{L^2} for P1 u.
struct YNorm {
  Real value = 0, lp = 0, grad = 0;
};
YNorm y_norm_parts(const FeFunction& u);
// Positive part of a nodal function, exact on each cell through zero-level clipping.
Real positive_integral(const FeFunction& u);
Real positive_grad_energy(const FeFunction& u);
Real positive_lp_norm(const FeFunction& u, Real p);

// Integral of fn(cell, x, u(x)) with every cell cut along the given level sets of u,
// so piecewise-polynomial functions of u with kinks at those levels integrate exactly.
using LevelIntegrand = std::function<Real(Index, const Vec3&, Real)>;
Real integrate_levels(const FeFunction& u, const std::vector<Real>& levels, const LevelIntegrand& fn,
                      int degree, const std::vector<Index>* cells = nullptr);

// Integral over Omega ∩ B_rho(center) with adaptive refinement of cut cells.
Real ball_integral(const SimplicialMesh& mesh, const Vec3& center, Real rho, const Integrand& fn,
                   int degree = 4, int depth = 3);
Real ball_volume(const SimplicialMesh& mesh, const Vec3& center, Real rho);
std::vector<Index> cells_in_ball(const SimplicialMesh& mesh, const Vec3& center, Real rho);

Real slope_fit(const std::vector<Real>& x, const std::vector<Real>& y);  // least squares in log-log

// --- named operations -------------------------------------------------------------

enum class PoincareVariant { Plain, AmpleZero, Modified };

struct PoincareOptions {
  PoincareVariant variant = PoincareVariant::Plain;
  Real delta = 0.5;                  // ample_zero: |E| >= delta |Omega|
  VectorField c;                     // modified
  ScalarField d = ScalarField::constant(1);
  Real delta0 = 0;                   // modified: require integral d >= delta0
  int samples = 200;
  std::uint64_t seed = 1;
};
ExperimentReport run_poincare(MeshPtr mesh, const PoincareOptions& opt);

ExperimentReport run_trace(MeshPtr mesh, Real p, int samples = 200, std::uint64_t seed = 1);

enum class MainCase { DeltaZero, DeltaPositive };
ExperimentReport run_main_estimate(const ProblemSpec& spec, MainCase which, Real C0);

ExperimentReport run_avg_inequality(const ProblemSpec& spec, const FeFunction& u);

ExperimentReport run_caccioppoli(const ProblemSpec& spec, const Vec3& center, Real r);

struct OneDimensional {
  Real delta = 0;
  Real f_at_delta = 0;
  Real f0 = 0, f2 = 0;
  Real du_left = 0, du_right = 0;  // u'(-1), u'(1)
  int iterations = 0;
  // u on [-1, 1] by its closed form
  Real u(Real x) const;
  Real b(Real x) const { return 2 * x - delta; }
};
Real appendix_f(Real x);
OneDimensional solve_one_dimensional();
ExperimentReport counterexample_1d_delta();

ProblemSpec tensor_kernel_problem(MeshPtr mesh, Real delta);
ExperimentReport counterexample_tensor_kernel(Real delta, int detect_resolution = 12,
                                              int projection_resolution = 16);

enum class LogSingularVariant { Halfball, Cone };
ExperimentReport counterexample_log_singular(LogSingularVariant variant, std::uint64_t seed = 1);

ExperimentReport counterexample_ds_family(const std::vector<Real>& s_values);

ExperimentReport run_pointwise_suite(const ProblemSpec& spec);

}  // namespace nlab
