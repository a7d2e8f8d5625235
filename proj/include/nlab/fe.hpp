#pragma once

#include "nlab/mesh.hpp"
#include "nlab/quadrature.hpp"

#include <functional>
#include <memory>
#include <string>

namespace nlab {

template <typename V>
inline V zero_value() {
  if constexpr (std::is_arithmetic_v<V>)
    return V(0);
  else
    return V::Zero();
}

// Coefficient or data field: zero, constant, analytic, or piecewise constant
// on cells / boundary facets.
template <typename Value>
class Field {
 public:
  enum class Kind { Zero, Constant, Analytic, PerCell, PerFacet };
  using Fn = std::function<Value(const Vec3&)>;

  Field() = default;
  static Field zero() { return Field(); }
  static Field constant(const Value& v) {
    Field f;
    f.kind_ = Kind::Constant;
    f.constant_ = v;
    return f;
  }
  static Field analytic(Fn fn) {
    Field f;
    f.kind_ = Kind::Analytic;
    f.fn_ = std::move(fn);
    return f;
  }
  static Field per_cell(std::vector<Value> v) {
    Field f;
    f.kind_ = Kind::PerCell;
    f.values_ = std::move(v);
    return f;
  }
  static Field per_facet(std::vector<Value> v) {
    Field f;
    f.kind_ = Kind::PerFacet;
    f.values_ = std::move(v);
    return f;
  }

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::Zero; }
  bool piecewise_constant() const { return kind_ != Kind::Analytic; }
  const std::vector<Value>& values() const { return values_; }
  const Value& constant_value() const { return constant_; }
  const Fn& function() const { return fn_; }

  Value at_cell(Index c, const Vec3& x) const {
    switch (kind_) {
      case Kind::Zero: return zero_value<Value>();
      case Kind::Constant: return constant_;
      case Kind::Analytic: return fn_(x);
      case Kind::PerCell: return values_[c];
      case Kind::PerFacet: break;
    }
    throw Error("per-facet field evaluated inside a cell");
  }
  Value at_facet(Index f, const Vec3& x) const {
    switch (kind_) {
      case Kind::Zero: return zero_value<Value>();
      case Kind::Constant: return constant_;
      case Kind::Analytic: return fn_(x);
      case Kind::PerFacet: return values_[f];
      case Kind::PerCell: break;
    }
    throw Error("per-cell field evaluated on a boundary facet");
  }

  // Optional role label (A, b, c, d, f, F, g) for diagnostics.
  std::string role;

 private:
  Kind kind_ = Kind::Zero;
  Value constant_ = zero_value<Value>();
  Fn fn_;
  std::vector<Value> values_;
};

using ScalarField = Field<Real>;
using VectorField = Field<Vec3>;
using MatrixField = Field<Mat3>;

// Degree-1 nodal function.
struct FeFunction {
  MeshPtr mesh;
  VectorX values;

  FeFunction() = default;
  FeFunction(MeshPtr m, VectorX v);
  static FeFunction zeros(MeshPtr m);

  int degree() const { return 1; }
  Real operator[](Index v) const { return values[v]; }
  std::array<Real, 4> cell_values(Index c) const;
  std::array<Real, 3> facet_values(Index f) const;
  Vec3 gradient(Index c) const;
  Real evaluate_in_cell(Index c, const Vec3& x) const;
  // Point location by bucket search; throws OutsideDomain.
  Real evaluate(const PointLocator& loc, const Vec3& x) const;
};

FeFunction interpolate(MeshPtr mesh, const std::function<Real(const Vec3&)>& fn);
Vec3 gradient(const FeFunction& f, Index cell);
Real evaluate(const FeFunction& f, const Vec3& x);

struct Region {
  enum class Kind { All, Cells, Boundary };
  Kind kind = Kind::All;
  std::vector<Index> ids;  // cells or facets; empty Boundary = all facets

  static Region all() { return {}; }
  static Region cells(std::vector<Index> ids) { return {Kind::Cells, std::move(ids)}; }
  static Region boundary(std::vector<Index> ids = {}) {
    return {Kind::Boundary, std::move(ids)};
  }
  static Region boundary_tags(const SimplicialMesh& mesh, const std::vector<int>& tags);
};

// Integrand receives (cell or facet index, point).
using Integrand = std::function<Real(Index, const Vec3&)>;
Real integrate(const SimplicialMesh& mesh, const Integrand& fn, int degree,
               const Region& region = Region::all());

Real lp_norm(const FeFunction& f, Real p, const Region& region = Region::all());
Real lp_norm(const SimplicialMesh& mesh, const ScalarField& f, Real p,
             const Region& region = Region::all());
Real lp_norm(const SimplicialMesh& mesh, const VectorField& f, Real p,
             const Region& region = Region::all());
Real grad_lp_norm(const FeFunction& f, Real p, const Region& region = Region::all());

inline Real sobolev_exponent(int n) { return 2.0 * n / (n - 2); }
// ||u||_{L^{2n/(n-2)}} + ||grad u||_{L^2}
Real y_norm(const FeFunction& f);
// ||u||_{L^2} + ||grad u||_{L^2}
Real w_norm(const FeFunction& f);

Real integral(const FeFunction& f);
Real integral(const SimplicialMesh& mesh, const ScalarField& f, int degree = 6);
Real boundary_integral(const SimplicialMesh& mesh, const ScalarField& g,
                       const Region& region = Region::boundary(), int degree = 6);

// Boundary restriction: nodal values on the chosen facets.
struct TraceFunction {
  MeshPtr mesh;
  std::vector<Index> facets;
  VectorX values;  // full nodal vector; only vertices of `facets` are meaningful
  Real lp_norm(Real p) const;
  Real evaluate_on_facet(Index f, const Vec3& x) const;
};

TraceFunction trace_restrict(const FeFunction& f, const Region& boundary = Region::boundary());

// Consistent and lumped mass matrices.
SparseMatrix mass_matrix(const SimplicialMesh& mesh);
VectorX lumped_mass(const SimplicialMesh& mesh);
// m_i = integral of phi_i
VectorX hat_integrals(const SimplicialMesh& mesh);

struct EllipticityReport {
  Real min_lambda = 0;  // smallest eigenvalue of sym(A) sampled
  Real max_norm = 0;    // largest operator norm sampled
  bool ok = true;
};
EllipticityReport check_ellipticity(const SimplicialMesh& mesh, const MatrixField& A,
                                    Real lambda, Real Lambda, int degree = 4);

// Reflection across the graph: u' = u o Psi^{-1} and coefficient transforms.
FeFunction reflect_function(const FeFunction& upper, const ReflectedMesh& reflected);
// Cellwise gradient of psi (horizontal part) on a graph mesh.
std::vector<Vec3> cell_psi_gradients(const SimplicialMesh& mesh);
enum class ReflectRule { Scalar, Vector, Matrix };
ScalarField reflect_field(const SimplicialMesh& upper, const ScalarField& f,
                          const ReflectedMesh& reflected);
VectorField reflect_field(const SimplicialMesh& upper, const VectorField& f,
                          const ReflectedMesh& reflected);
MatrixField reflect_field(const SimplicialMesh& upper, const MatrixField& f,
                          const ReflectedMesh& reflected);

// Sample a field to per-cell values at cell centroids (exact for P0 fields).
template <typename V>
std::vector<V> sample_cells(const SimplicialMesh& mesh, const Field<V>& f) {
  std::vector<V> out(mesh.num_cells());
  for (Index c = 0; c < mesh.num_cells(); ++c) out[c] = f.at_cell(c, mesh.centroid(c));
  return out;
}

}  // namespace nlab
