#pragma once

#include "nlab/core.hpp"

#include <memory>
#include <string>

namespace nlab {

// Small arithmetic language for analytic coefficients:
//   + - * / ^, unary minus, parentheses, numbers, pi,
//   x1 x2 x3, ln exp cos sin abs sqrt.
class Expression {
 public:
  struct Node;

  explicit Expression(const std::string& source);
  Real operator()(const Vec3& x) const;
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace nlab
