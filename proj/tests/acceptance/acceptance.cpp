// Acceptance run: each criterion executes the registered experiments with their
// default settings and checks the reported values against tolerances pinned here.
#include "nlab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace nlab;

namespace {

struct Verdict {
  std::vector<std::string> failures;
  void need(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void le(Real v, Real bound, const std::string& what) {
    need(std::isfinite(v) && v <= bound, what + " = " + std::to_string(v) + " (bound " + std::to_string(bound) + ")");
  }
  void ge(Real v, Real bound, const std::string& what) {
    need(std::isfinite(v) && v >= bound, what + " = " + std::to_string(v) + " (bound " + std::to_string(bound) + ")");
  }
};

ExperimentReport run(const std::string& name, Verdict& v) {
  const auto* info = find_experiment(name);
  if (!info) throw Error("missing experiment " + name);
  ExperimentContext ctx;
  ctx.seed = 1;
  auto rep = run_experiment(*info, ctx);
  if (!rep.passed())
    for (const auto& c : rep.checks)
      if (!c.pass) v.failures.push_back(name + ": check '" + c.name + "' failed");
  return rep;
}

Real num(const Json& j) { return j.get<Real>(); }

// Largest ratio max(a,b)/min(a,b) between consecutive refinement levels.
Real change_factor(Real a, Real b) { return std::max(a, b) / std::min(a, b); }

void kernel_dichotomy(Verdict& v) {
  const auto r = run("kernel-dim-cube", v).results;
  v.need(r["d0"]["dimension"] == 1, "d=0 kernel dimension is 1");
  v.need(r["d1"]["dimension"] == 0, "d=1 kernel dimension is 0");
  v.le(num(r["d0"]["uhat_residual"]), 1e-10, "d=0 uhat residual");
  v.le(num(r["d0"]["uhat_constant_deviation"]), 1e-10, "d=0 uhat deviation from the normalised constant");
  v.ge(num(r["d0"]["gap"]), 10, "d=0 spectral gap");
  v.ge(num(r["d1"]["gap"]), 10, "d=1 spectral gap");
}

void eigen_cube(Verdict& v) {
  const auto r = run("appendix-eigen-cube", v).results;
  const auto& lv = r["levels"];
  v.need(lv.size() == 2, "two refinement levels");
  if (lv.size() != 2) return;
  for (const auto& l : lv) v.ge(num(l["dimension"]), 3, "near-zero singular values");
  for (int i = 0; i < 3; ++i)
    v.ge(num(lv[0]["scaled_singular_values"][i]) / num(lv[1]["scaled_singular_values"][i]), 3,
         "shrink of singular value " + std::to_string(i + 1) + " from 8^3 to 16^3");
}

void one_dimensional(Verdict& v) {
  const auto r = run("appendix-1d", v).results;
  const Real d = num(r["delta"]);
  v.need(d > 0 && d < 2, "delta in (0,2)");
  v.le(num(r["f_residual"]), 1e-12, "|f(delta) - 1|");
  v.le(std::abs(num(r["du_right"])), 1e-10, "u'(1) residual");
  v.need(num(r["f2"]) == 0, "f(2) == 0 exactly");
  v.need(num(r["f0"]) > 1, "f(0) > 1");
}

void tensor_kernel(Verdict& v) {
  const auto r = run("appendix-tensor-kernel", v).results;
  v.ge(num(r["detect"]["dimension"]), 2, "kernel dimension at 12^3");
  v.ge(num(r["captured_energy_ux"]), 0.99, "captured energy of u(x)");
  v.ge(num(r["captured_energy_uy"]), 0.99, "captured energy of u(y)");
}

void green_symmetry(Verdict& v) {
  const auto r = run("green-symmetry", v).results;
  v.le(num(r["symmetric"]["paired_relative"]), 1e-9, "symmetric transpose deviation");
  const auto& ns = r["nonsymmetric_pointwise"];
  v.need(ns.size() >= 2, "at least two refinements");
  for (std::size_t k = 1; k < ns.size(); ++k)
    v.need(num(ns[k]) < num(ns[k - 1]), "non-symmetric deviation decreases at step " + std::to_string(k));
}

void green_scaling(Verdict& v) {
  const auto r = run("green-scaling", v).results;
  for (const char* key : {"symmetric_r0.5", "symmetric_r2", "nonsymmetric_r0.5", "nonsymmetric_r2", "mean_zero_r2"})
    v.le(num(r[key]["relative_deviation"]), 1e-9, std::string(key) + " deviation");
}

void green_pointwise(Verdict& v) {
  const auto r = run("green-pointwise", v).results;
  const auto& c = r["pointwise_constants"];
  v.need(c.size() == 2, "two refinement levels");
  if (c.size() != 2) return;
  v.need(change_factor(num(c[0]), num(c[1])) < 1.5, "pointwise constant change factor < 1.5");
  const auto& norms = r["norms"];
  for (std::size_t s = 0; s < norms[0].size(); ++s)
    for (const char* key : {"interior_weak", "gradient_weak", "boundary_weak"}) {
      const Real a = num(norms[0][s][key]), b = num(norms[1][s][key]);
      v.need(std::isfinite(a) && std::isfinite(b) && a > 0 && b > 0, std::string(key) + " finite");
      v.le(change_factor(a, b), 1.5, std::string(key) + " change at source " + std::to_string(s));
    }
}

void representation(Verdict& v) {
  const auto r = run("green-representation", v).results;
  const auto& e = r["relative_errors"];
  v.need(e.size() == 2 && r["levels"].back() == 16, "levels end at 16^3");
  if (e.size() != 2) return;
  v.le(num(e[1]), 0.05, "relative error at 16^3");
  v.ge(num(e[0]) / num(e[1]), 2, "error decrease per refinement");
  v.need(r["pairing_sources"].size() == 5, "five sources, ten pairs");
  v.le(num(r["pairing_relative"]), 1e-9, "duality pairing");
}

void lorentz(Verdict& v) {
  const auto r = run("lorentz-engine", v).results;
  v.le(num(r["worst_closed_form_error"]), 1e-12, "indicator closed forms");
  v.le(num(r["worst_equimeasurability_error"]), 1e-8, "equimeasurability");
}

void splitting(Verdict& v) {
  const auto rep = run("splitting-properties", v);
  const auto& r = rep.results;
  v.need(rep.inputs["functions"] == 50, "50 random functions");
  v.le(num(r["worst_pointwise"]), 1e-12, "worst pointwise violation");
  v.le(num(r["worst_budget_error"]), 1e-10, "budget error");
  v.le(num(r["worst_piece_mean"]), 1e-10, "mean-zero piece integrals");
  const Check* bound = rep.find_check("piece count bound");
  v.need(bound && bound->pass, "piece count bound");
}

void scale_invariance(Verdict& v) {
  const auto r = run("scale-invariance", v).results;
  v.need(r["ratios"].size() == 4, "four dilations");
  v.le(num(r["ratio_spread"]), 1e-9, "solution-to-data ratio spread");
}

void rigidity(Verdict& v) {
  const auto r = run("subsolution-rigidity", v).results;
  v.le(num(r["worst_sum_identity"]), 1e-12, "sum of residuals");
  v.need(r["strict_subsolutions_found"] == 0, "no strict subsolution");
}

void ds_family(Verdict& v) {
  const auto r = run("ds-family", v).results;
  constexpr Real n = 3;
  v.le(std::abs(num(r["slope_energy_Bs"]) + (n - 2)) / (n - 2), 0.1, "energy slope vs -(n-2)");
  v.le(std::abs(num(r["slope_integral_d"]) - (n - 2)) / (n - 2), 0.1, "integral d slope vs n-2");
  v.need(r["integral_d"].size() == 6, "s = 2^-k for k = 2..7");
}

void condition_checker(Verdict& v) {
  const auto rep = run("condition-checker", v);
  const auto& r = rep.results;
  v.need(r["half_space"]["holds"] == false, "half-space drift fails");
  v.need(num(r["half_space"]["min_value"]) < 0, "negative hat value");
  v.need(num(r["half_space"]["argmin_height"]) == 0, "negative hat on the bottom face");
  v.need(r["zero_drift"]["holds"] == true, "b = 0, d >= 0 passes");
  for (const char* key : {"half_space", "zero_drift"})
    v.le(num(r[key]["cone_worst"]), 1e-12, std::string(key) + " cone linearity");
  v.ge(num(r["zero_drift"]["cone_min_scaled_value"]), 0, "zero drift nonnegative on the cone");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"kernel dichotomy on the unit cube", kernel_dichotomy},
      {"eigen-cube near-zero singular values", eigen_cube},
      {"one-dimensional construction", one_dimensional},
      {"tensor kernel", tensor_kernel},
      {"Green symmetry", green_symmetry},
      {"Green scaling", green_scaling},
      {"Green pointwise constant and weak norms", green_pointwise},
      {"representation formula and duality", representation},
      {"Lorentz engine", lorentz},
      {"splitting", splitting},
      {"scale invariance of estimates", scale_invariance},
      {"subsolution rigidity", rigidity},
      {"d_s blow-up family", ds_family},
      {"condition checker", condition_checker},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = v.failures.empty();
    failed += !ok;
    std::printf("%s criterion %zu: %s (%.1f s)\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs);
    for (const auto& f : v.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
