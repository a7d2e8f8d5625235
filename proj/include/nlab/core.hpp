#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlab {

using Real = double;
using Index = std::ptrdiff_t;

template <typename Scalar>
using Point3 = Eigen::Matrix<Scalar, 3, 1>;

using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Mat3 = Eigen::Matrix<Real, 3, 3>;
using VectorX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatrixX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using SparseMatrix = Eigen::SparseMatrix<Real, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<Real, int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a point cannot be located in any cell.
class OutsideDomain : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(what);
}

constexpr Real kPi = 3.14159265358979323846264338327950288;

}  // namespace nlab
