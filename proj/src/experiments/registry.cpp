#include "internal.hpp"

#include <chrono>

namespace nlab {

const std::vector<ExperimentInfo>& experiment_registry() {
  using namespace exp;
  static const std::vector<ExperimentInfo> reg{
      {"kernel-dim-cube", "kernel dimension of the pure Neumann Laplacian with d = 0 and d = 1",
       "kernel characterisation: constants span the kernel iff integral d = 0", kernel_dim_cube},
      {"appendix-eigen-cube", "three near-zero singular values on (0,pi)^3 with d = -1",
       "non-uniqueness example: cos x_i solve -Lap u - u = 0", appendix_eigen_cube},
      {"appendix-1d", "bisection for the drift parameter of the one-dimensional construction",
       "one-dimensional non-uniqueness construction, f(delta) = 1", appendix_1d},
      {"appendix-tensor-kernel", "kernel of dimension >= 2 for the tensor drift on (-1,1)^3",
       "tensor non-uniqueness example with d = -2", appendix_tensor_kernel},
      {"appendix-log-singular", "unbounded solutions for drifts of log type (half ball and cone)",
       "unboundedness examples u = ln|x| and u = -ln x_n", appendix_log_singular},
      {"ds-family", "energy blow-up of u_s while integral d_s vanishes",
       "sharpness of the dependence on delta0 via the d_s family", ds_family},
      {"poincare", "Sobolev-Poincare constants: plain, vanishing on a large set, modified average",
       "Sobolev-Poincare inequalities", poincare},
      {"trace", "trace inequality constants, strong and weak-type",
       "trace inequality and its Lorentz-space variant", trace},
      {"main-estimate", "gradient estimate for subsolutions through the splitting lemma",
       "main energy estimate, integral d = 0 and integral d > 0", main_estimate},
      {"avg-inequality", "averaged inequality for c . grad u+ + d u+",
       "choice of constants in the integral d > 0 estimate", avg_inequality},
      {"caccioppoli", "local energy against local L2 and data norms",
       "Caccioppoli inequality", caccioppoli},
      {"pointwise-suite", "sup bounds from Lorentz data norms, global and boundary-local",
       "pointwise bounds for subsolutions", pointwise_suite},
      {"scale-invariance", "solution-to-data ratio under dilations of the domain",
       "scale invariance of the estimates", scale_invariance},
      {"mms-convergence", "manufactured solution convergence rates",
       "consistency of the weak formulation", mms_convergence},
      {"green-symmetry", "G(x,y) against the adjoint Green function G*(y,x)",
       "Green function symmetry", green_symmetry},
      {"green-scaling", "Green function under dilation", "Green function scaling", green_scaling},
      {"green-pointwise", "pointwise constant and weak-type norms of G",
       "Green function bounds", green_pointwise},
      {"green-representation", "representation formula and duality pairing",
       "Green representation formula", green_representation},
      {"lorentz-engine", "closed-form indicator norms and equimeasurability",
       "Lorentz quasi-norms", lorentz_engine},
      {"splitting-properties", "properties of the splitting on random P1 functions",
       "splitting lemma", splitting_properties},
      {"subsolution-rigidity", "discrete subsolutions with compatible data are solutions",
       "subsolutions imply solutions when d = 0", subsolution_rigidity},
      {"condition-checker", "sign condition on hat functions and cone exactness",
       "sign condition on (b, d)", condition_checker},
      {"neumann-solvability", "solver routes, compatibility and adjoint transpose",
       "existence and uniqueness for the Neumann problem", neumann_solvability},
      {"reflection-extension", "reflection across a Lipschitz graph",
       "extension by reflection", reflection_extension},
  };
  return reg;
}

const ExperimentInfo* find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return &e;
  return nullptr;
}

ExperimentReport run_experiment(const ExperimentInfo& info, const ExperimentContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep = info.run(ctx);
  rep.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.name = info.name;
  rep.anchor = info.anchor;
  rep.seed = ctx.seed;
  if (!ctx.options.empty()) rep.inputs["options"] = ctx.options;
  return rep;
}

}  // namespace nlab
