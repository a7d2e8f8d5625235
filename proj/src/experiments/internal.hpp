#pragma once

#include "nlab/experiments.hpp"

#include <random>

namespace nlab::exp {

// Registered experiments, one per file group.
ExperimentReport kernel_dim_cube(const ExperimentContext& ctx);
ExperimentReport appendix_eigen_cube(const ExperimentContext& ctx);
ExperimentReport appendix_1d(const ExperimentContext& ctx);
ExperimentReport appendix_tensor_kernel(const ExperimentContext& ctx);
ExperimentReport appendix_log_singular(const ExperimentContext& ctx);
ExperimentReport ds_family(const ExperimentContext& ctx);

ExperimentReport poincare(const ExperimentContext& ctx);
ExperimentReport trace(const ExperimentContext& ctx);
ExperimentReport main_estimate(const ExperimentContext& ctx);
ExperimentReport avg_inequality(const ExperimentContext& ctx);
ExperimentReport caccioppoli(const ExperimentContext& ctx);
ExperimentReport pointwise_suite(const ExperimentContext& ctx);
ExperimentReport scale_invariance(const ExperimentContext& ctx);
ExperimentReport mms_convergence(const ExperimentContext& ctx);

ExperimentReport green_symmetry(const ExperimentContext& ctx);
ExperimentReport green_scaling(const ExperimentContext& ctx);
ExperimentReport green_pointwise(const ExperimentContext& ctx);
ExperimentReport green_representation(const ExperimentContext& ctx);

ExperimentReport lorentz_engine(const ExperimentContext& ctx);
ExperimentReport splitting_properties(const ExperimentContext& ctx);
ExperimentReport subsolution_rigidity(const ExperimentContext& ctx);
ExperimentReport condition_checker(const ExperimentContext& ctx);
ExperimentReport neumann_solvability(const ExperimentContext& ctx);
ExperimentReport reflection_extension(const ExperimentContext& ctx);

// Pulls the problem from the config when present, otherwise uses the fallback.
ProblemSpec problem_or(const ExperimentContext& ctx, MeshPtr mesh, const ProblemSpec& fallback);

// Positive part of a field, keeping its kind where possible.
ScalarField positive_part(const ScalarField& f);
// |b - c| per cell at centroids.
std::vector<Real> drift_difference(const SimplicialMesh& mesh, const VectorField& b,
                                   const VectorField& c);

// Summary of a sub-report merged into a parent under `prefix`.
void merge_into(ExperimentReport& parent, const std::string& prefix, const ExperimentReport& child);

}  // namespace nlab::exp
