#pragma once

#include "nlab/core.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>

namespace nlab {

// Grundmann-Moeller rule on a Dim-simplex. Points are barycentric, weights are
// fractions of the simplex volume (they sum to 1).
template <typename Scalar, int Dim>
struct SimplexRule {
  using Bary = Eigen::Matrix<Scalar, Dim + 1, 1>;
  int degree = 1;
  std::vector<Bary> points;
  std::vector<Scalar> weights;

  std::size_t size() const { return points.size(); }
  // Weight on the reference simplex (volume 1/Dim!).
  Scalar reference_weight(std::size_t i) const {
    Scalar f = 1;
    for (int k = 2; k <= Dim; ++k) f *= k;
    return weights[i] / f;
  }
};

namespace detail {

template <typename Scalar>
Scalar factorial(int n) {
  Scalar f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

template <int Parts, typename Visit>
void compositions(int total, std::array<int, Parts>& cur, int pos, Visit&& visit) {
  if (pos == Parts - 1) {
    cur[pos] = total;
    visit(cur);
    return;
  }
  for (int k = 0; k <= total; ++k) {
    cur[pos] = k;
    compositions<Parts>(total - k, cur, pos + 1, visit);
  }
}

}  // namespace detail

// Exact monomial integral over the reference simplex: prod a_k! / (|a| + Dim)!.
template <typename Scalar, int Dim>
Scalar reference_monomial_integral(const std::array<int, Dim>& a) {
  int sum = 0;
  Scalar num = 1;
  for (int k : a) {
    num *= detail::factorial<Scalar>(k);
    sum += k;
  }
  return num / detail::factorial<Scalar>(sum + Dim);
}

template <typename Scalar, int Dim>
Scalar max_monomial_error(const SimplexRule<Scalar, Dim>& rule, int degree) {
  Scalar worst = 0;
  for (int total = 0; total <= degree; ++total) {
    std::array<int, Dim + 1> e{};
    detail::compositions<Dim + 1>(total, e, 0, [&](const std::array<int, Dim + 1>& ex) {
      std::array<int, Dim> a;
      for (int k = 0; k < Dim; ++k) a[k] = ex[k + 1];
      Scalar q = 0;
      for (std::size_t i = 0; i < rule.size(); ++i) {
        Scalar m = 1;
        for (int k = 0; k < Dim; ++k) m *= std::pow(rule.points[i][k + 1], a[k]);
        q += rule.reference_weight(i) * m;
      }
      const Scalar exact = reference_monomial_integral<Scalar, Dim>(a);
      worst = std::max(worst, std::abs(q - exact) / exact);
    });
  }
  return worst;
}

// Rule exact for polynomials of degree <= `degree` (rounded up to odd).
template <typename Scalar, int Dim>
SimplexRule<Scalar, Dim> grundmann_moeller(int degree) {
  require(degree >= 0 && degree <= 21, "quadrature degree out of range");
  const int s = std::max(0, (degree - 1 + 1) / 2);
  const int d = 2 * s + 1;
  SimplexRule<Scalar, Dim> rule;
  rule.degree = d;
  const Scalar dimfact = detail::factorial<Scalar>(Dim);
  for (int i = 0; i <= s; ++i) {
    const int denom = d + Dim - 2 * i;
    const Scalar w = (i % 2 ? -1 : 1) * std::pow(Scalar(denom), d) /
                     (std::pow(Scalar(2), 2 * s) * detail::factorial<Scalar>(i) *
                      detail::factorial<Scalar>(d + Dim - i)) *
                     dimfact;
    std::array<int, Dim + 1> beta{};
    detail::compositions<Dim + 1>(s - i, beta, 0, [&](const std::array<int, Dim + 1>& b) {
      typename SimplexRule<Scalar, Dim>::Bary p;
      for (int k = 0; k <= Dim; ++k) p[k] = Scalar(2 * b[k] + 1) / denom;
      rule.points.push_back(p);
      rule.weights.push_back(w);
    });
  }
  return rule;
}

// Cached double rules, checked for exactness the first time they are built.
template <int Dim>
const SimplexRule<Real, Dim>& simplex_rule(int degree) {
  static std::mutex mu;
  static std::map<int, SimplexRule<Real, Dim>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(degree);
  if (it != cache.end()) return it->second;
  auto rule = grundmann_moeller<Real, Dim>(degree);
  const Real err = max_monomial_error<Real, Dim>(rule, rule.degree);
  if (err > 1e-10) throw Error("quadrature rule failed its exactness check");
  return cache.emplace(degree, std::move(rule)).first->second;
}

using TetRule = SimplexRule<Real, 3>;
using TriRule = SimplexRule<Real, 2>;

}  // namespace nlab
