#pragma once

#include "nlab/fe.hpp"

#include <limits>
#include <map>

namespace nlab {

enum class Measure { Volume, Surface };

struct LorentzSpec {
  Real p = 2;
  Real q = std::numeric_limits<Real>::infinity();

  LorentzSpec() = default;
  LorentzSpec(Real p_, Real q_) : p(p_), q(q_) {
    require(p > 0 && std::isfinite(p), "LorentzSpec: p must be in (0, inf)");
    require(q > 0, "LorentzSpec: q must be positive or infinite");
  }
  static LorentzSpec weak(Real p) { return {p, std::numeric_limits<Real>::infinity()}; }
  bool weak_type() const { return std::isinf(q); }
};

// Volume of {a < u <= b} inside one cell for the linear interpolant of u.
Real sublevel_volume(const SimplicialMesh& mesh, Index cell, const std::array<Real, 4>& u,
                     Real a, Real b);

// Measure of {u > lambda} for a P1 function given on a list of simplices.
// Batched queries sweep cells sorted by their minimum with an active set.
template <int Nv>
class LevelVolumeEngine {
 public:
  LevelVolumeEngine(std::vector<std::array<Real, Nv>> values, std::vector<Real> measures);

  Real above(Real lambda) const;
  // Measure of {u >= lambda}; differs from above() only on constant simplices.
  Real above_or_equal(Real lambda) const;
  // Measure of cells on which u is identically lambda.
  Real plateau(Real lambda) const {
    auto it = plateaus_.find(lambda);
    return it == plateaus_.end() ? 0 : it->second;
  }
  // `lambdas` must be ascending.
  void above_sorted(const std::vector<Real>& lambdas, std::vector<Real>& out) const;

  Real min_value() const { return min_value_; }
  Real max_value() const { return max_value_; }
  Real total_measure() const { return total_; }
  std::vector<Real> vertex_levels() const;

 private:
  std::vector<std::array<Real, Nv>> values_;
  std::vector<Real> measures_;
  std::vector<Real> cmin_, cmax_;
  std::vector<Index> by_min_;
  std::vector<Real> suffix_;  // measure of cells by_min_[k..]
  std::map<Real, Real> plateaus_;
  Real min_value_ = 0, max_value_ = 0, total_ = 0;
};

extern template class LevelVolumeEngine<3>;
extern template class LevelVolumeEngine<4>;

// Distribution function of |f|: d(lambda) = |{|f| > lambda}|.
class Distribution {
 public:
  Distribution(const FeFunction& f, Measure measure, const Region& region = {});
  // Piecewise-constant data with measures (P0 fields).
  Distribution(std::vector<Real> values, std::vector<Real> measures);

  Real operator()(Real lambda) const;
  Real at_or_above(Real lambda) const;  // |{|f| >= lambda}|
  void evaluate_sorted(const std::vector<Real>& lambdas, std::vector<Real>& out) const;
  void at_or_above_sorted(const std::vector<Real>& lambdas, std::vector<Real>& out) const;
  // Sorted distinct levels where the piecewise structure changes (includes 0).
  const std::vector<Real>& breakpoints() const { return breaks_; }
  Real sup() const { return breaks_.empty() ? 0 : breaks_.back(); }
  Real total_measure() const { return total_; }
  bool piecewise_constant() const { return p0_; }
  // For P0 data: (value, measure) sorted by decreasing value.
  const std::vector<std::pair<Real, Real>>& steps() const { return steps_; }

 private:
  bool p0_ = false;
  std::unique_ptr<LevelVolumeEngine<4>> pos4_, neg4_;
  std::unique_ptr<LevelVolumeEngine<3>> pos3_, neg3_;
  std::vector<std::pair<Real, Real>> steps_;
  std::vector<Real> steps_cum_;
  std::vector<Real> breaks_;
  Real total_ = 0;
};

struct RearrangementProfile {
  // Samples (t_k, f*(t_k)) with t ascending and f* non-increasing.
  std::vector<Real> t;
  std::vector<Real> value;
  bool exact_steps = false;  // P0 input: f* = value[k] on [t[k-1], t[k])
  Real support = 0;          // measure of {|f| > 0}
  Real total_measure = 0;

  Real fstar(Real s) const;
  Real distribution(Real lambda) const;
  std::string to_csv() const;
};

RearrangementProfile decreasing_rearrangement(const FeFunction& f, Measure measure,
                                              const Region& region = {}, int refine = 3);
RearrangementProfile decreasing_rearrangement(std::vector<Real> values,
                                              std::vector<Real> measures);

Real lorentz_norm(const Distribution& d, const LorentzSpec& spec);
Real lorentz_norm(const FeFunction& f, const LorentzSpec& spec, Measure measure = Measure::Volume,
                  const Region& region = {});
// P0 data on cells (volume) or facets (surface).
Real lorentz_norm(const SimplicialMesh& mesh, const ScalarField& f, const LorentzSpec& spec,
                  Measure measure = Measure::Volume);
// |grad f| as a P0 field.
Real gradient_lorentz_norm(const FeFunction& f, const LorentzSpec& spec);

// Cell-wise P0 values of |v| for vector data.
std::vector<Real> cell_magnitudes(const SimplicialMesh& mesh, const VectorField& F);

}  // namespace nlab
