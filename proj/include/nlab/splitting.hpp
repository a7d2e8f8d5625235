#pragma once

#include "nlab/fe.hpp"

namespace nlab {

// One piece u_{s,t} = clamp(u, s, t) - s + clamp(u, kt, ks) - ks.
// The plain split uses kt = ks = 0, which drops the negative band.
struct ClampPiece {
  Real s = 0, t = 0;
  Real ks = 0, kt = 0;

  Real value(Real u) const {
    return std::clamp(u, s, t) - s + std::clamp(u, kt, ks) - ks;
  }
  // d u_i / d u at a point with value u (the level sets themselves are null).
  Real slope(Real u) const { return (u > s && u < t) || (u > kt && u < ks) ? 1.0 : 0.0; }
  // Omega_i membership by value; the caller also checks grad u != 0.
  bool in_band(Real u) const { return (s < u && u <= t) || (kt <= u && u < ks); }
};

struct SplitResult {
  Real epsilon = 0;
  int N = 0;
  bool mean_zero = false;
  Real m = 0, M = 0;               // ess inf / ess sup of u
  std::vector<Real> levels;        // s_0 = M > s_1 > ... > s_N = 0
  std::vector<Real> thresholds;    // k_{s_i} (mean-zero variant)
  std::vector<ClampPiece> pieces;  // pieces[i-1] = u_i
  std::vector<Real> budgets;       // integral of |h|^n over Omega_i
  Real h_norm = 0;                 // ||h||_{L^n(Omega)}
  Real max_slack = 0;              // |budget - eps^n| accepted at plateaus
  FeFunction u;
  std::vector<Real> h;        // P0 weight
  std::vector<char> active;   // cells with grad u != 0

  bool in_set(int i, Index cell, Real uval) const {
    return active[cell] && pieces[i].in_band(uval);
  }
  std::string to_json() const;
};

// Solve g(k) = integral over {u > l} of (u - l) for k in (m, 0].
Real threshold_k(const FeFunction& u, Real l);

SplitResult split_plain(const FeFunction& u, const ScalarField& h, Real eps);
SplitResult split_mean_zero(const FeFunction& u, const ScalarField& h, Real eps);

struct SplitReport {
  Real budget_error = 0;       // (a): max relative |budget_i - eps^n| for i < N
  bool last_within = true;     // (a): budget_N <= eps^n
  Real support = 0;            // (b)
  Real gradient_match = 0;     // (c)
  Real bounded = 0;            // (d)
  Real sign = 0;               // (e)
  Real sum = 0;                // (f)
  Real g_identity = 0;         // (g)
  Real h_identity = 0;         // (h)
  Real overlap = 0;            // pairwise measure of Omega_i intersections
  Real max_piece_mean = 0;     // mean-zero variant, scaled by ||u||_1
  bool count_bound = true;     // N <= 1 + (||h||_n / eps)^n
  Real worst_pointwise() const;
};

SplitReport verify_split(const SplitResult& r, int samples, std::uint64_t seed = 1);

// Integral of u_i over Omega (exact for P1 u).
Real piece_integral(const SplitResult& r, int i);

}  // namespace nlab
