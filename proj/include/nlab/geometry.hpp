#pragma once

#include "nlab/core.hpp"

namespace nlab {

template <typename Scalar>
Scalar tet_signed_volume(const Point3<Scalar>& a, const Point3<Scalar>& b,
                         const Point3<Scalar>& c, const Point3<Scalar>& d) {
  return (b - a).cross(c - a).dot(d - a) / Scalar(6);
}

template <typename Scalar>
Scalar triangle_area(const Point3<Scalar>& a, const Point3<Scalar>& b,
                     const Point3<Scalar>& c) {
  return (b - a).cross(c - a).norm() / Scalar(2);
}

// A simplex carrying the values of a linear function at its vertices.
template <int Nv>
struct LinearPiece {
  std::array<Vec3, Nv> p;
  std::array<Real, Nv> u;
};

using TetPiece = LinearPiece<4>;
using TriPiece = LinearPiece<3>;

// Cut a tetrahedron along the level set {u = level}. `below` receives pieces
// with u <= level, `above` pieces with u > level; either may be null.
void split_tet(const TetPiece& t, Real level, std::vector<TetPiece>* below,
               std::vector<TetPiece>* above);
void split_triangle(const TriPiece& t, Real level, std::vector<TriPiece>* below,
                    std::vector<TriPiece>* above);

// Volume (area) fraction of the simplex on which the linear interpolant of u
// exceeds `level`. Exact up to rounding.
Real tet_above_fraction(const std::array<Real, 4>& u, Real level);
Real tri_above_fraction(const std::array<Real, 3>& u, Real level);

// Fraction on which level >= u, i.e. 1 - above, but without cancellation.
Real tet_below_fraction(const std::array<Real, 4>& u, Real level);

// Fraction on which a < u <= b.
inline Real tet_slab_fraction(const std::array<Real, 4>& u, Real a, Real b) {
  if (!(a < b)) return 0;
  return std::max<Real>(0, tet_above_fraction(u, a) - tet_above_fraction(u, b));
}

// Integral of (u - level)_+ over the simplex divided by its volume.
Real tet_positive_part_mean(const std::array<Real, 4>& u, Real level);

// Regular 1:8 refinement of a tetrahedron.
std::array<TetPiece, 8> refine_tet(const TetPiece& t);

}  // namespace nlab
