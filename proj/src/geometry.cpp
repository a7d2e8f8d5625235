#include "nlab/geometry.hpp"

#include <algorithm>

namespace nlab {

namespace {

template <int Nv>
void cut_point(const LinearPiece<Nv>& t, int i, int j, Real level, Vec3& p) {
  const Real s = (level - t.u[i]) / (t.u[j] - t.u[i]);
  p = t.p[i] + s * (t.p[j] - t.p[i]);
}

// Prism with triangles a and b (a[k] joined to b[k]) split into 3 tetrahedra.
void push_wedge(const std::array<Vec3, 3>& a, const std::array<Real, 3>& ua,
                const std::array<Vec3, 3>& b, const std::array<Real, 3>& ub,
                std::vector<TetPiece>& out) {
  out.push_back({{a[0], a[1], a[2], b[0]}, {ua[0], ua[1], ua[2], ub[0]}});
  out.push_back({{a[1], a[2], b[0], b[1]}, {ua[1], ua[2], ub[0], ub[1]}});
  out.push_back({{a[2], b[0], b[1], b[2]}, {ua[2], ub[0], ub[1], ub[2]}});
}

// Fraction of the reference tetrahedron on the side holding exactly the
// vertices listed in `side` (size 1..3), where `cut` gives the crossing
// parameter along each edge from a side vertex to an off-side vertex.
Real side_fraction(const std::array<Real, 4>& u, Real level, bool above) {
  std::array<int, 4> in{}, out{};
  int ni = 0, no = 0;
  for (int k = 0; k < 4; ++k) {
    const bool is_above = u[k] > level;
    if (is_above == above)
      in[ni++] = k;
    else
      out[no++] = k;
  }
  if (ni == 0) return 0;
  if (no == 0) return 1;
  auto s = [&](int from, int to) { return (level - u[from]) / (u[to] - u[from]); };
  if (ni == 1) {
    Real f = 1;
    for (int k = 0; k < 3; ++k) f *= s(in[0], out[k]);
    return f;
  }
  if (ni == 3) {
    Real f = 1;
    for (int k = 0; k < 3; ++k) f *= s(out[0], in[k]);
    return 1 - f;
  }
  // 2-2: wedge in the reference tetrahedron.
  static const Vec3 E[4] = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  auto P = [&](int a, int b) { return Vec3(E[a] + s(a, b) * (E[b] - E[a])); };
  const Vec3 a0 = E[in[0]], a1 = P(in[0], out[0]), a2 = P(in[0], out[1]);
  const Vec3 b0 = E[in[1]], b1 = P(in[1], out[0]), b2 = P(in[1], out[1]);
  const Real v = std::abs(tet_signed_volume(a0, a1, a2, b0)) +
                 std::abs(tet_signed_volume(a1, a2, b0, b1)) +
                 std::abs(tet_signed_volume(a2, b0, b1, b2));
  return std::clamp<Real>(6 * v, 0, 1);
}

}  // namespace

void split_tet(const TetPiece& t, Real level, std::vector<TetPiece>* below,
               std::vector<TetPiece>* above) {
  std::array<int, 4> lo{}, hi{};
  int nl = 0, nh = 0;
  for (int k = 0; k < 4; ++k) {
    if (t.u[k] > level)
      hi[nh++] = k;
    else
      lo[nl++] = k;
  }
  if (nh == 0) {
    if (below) below->push_back(t);
    return;
  }
  if (nl == 0) {
    if (above) above->push_back(t);
    return;
  }
  auto cut = [&](int i, int j) {
    Vec3 p;
    cut_point<4>(t, i, j, level, p);
    return p;
  };
  if (nl == 1 || nh == 1) {
    // one lonely vertex v, three others w
    const bool lonely_below = nl == 1;
    const int v = lonely_below ? lo[0] : hi[0];
    const auto& w = lonely_below ? hi : lo;
    std::array<Vec3, 3> P{cut(v, w[0]), cut(v, w[1]), cut(v, w[2])};
    std::array<Vec3, 3> W{t.p[w[0]], t.p[w[1]], t.p[w[2]]};
    std::array<Real, 3> uP{level, level, level};
    std::array<Real, 3> uW{t.u[w[0]], t.u[w[1]], t.u[w[2]]};
    TetPiece corner{{t.p[v], P[0], P[1], P[2]}, {t.u[v], level, level, level}};
    auto* corner_out = lonely_below ? below : above;
    auto* wedge_out = lonely_below ? above : below;
    if (corner_out) corner_out->push_back(corner);
    if (wedge_out) push_wedge(P, uP, W, uW, *wedge_out);
    return;
  }
  // two below (b0, b1), two above (a0, a1)
  const int b0 = lo[0], b1 = lo[1], a0 = hi[0], a1 = hi[1];
  const Vec3 p00 = cut(b0, a0), p01 = cut(b0, a1), p10 = cut(b1, a0), p11 = cut(b1, a1);
  if (below)
    push_wedge({t.p[b0], p00, p01}, {t.u[b0], level, level}, {t.p[b1], p10, p11},
               {t.u[b1], level, level}, *below);
  if (above)
    push_wedge({t.p[a0], p00, p10}, {t.u[a0], level, level}, {t.p[a1], p01, p11},
               {t.u[a1], level, level}, *above);
}

void split_triangle(const TriPiece& t, Real level, std::vector<TriPiece>* below,
                    std::vector<TriPiece>* above) {
  std::array<int, 3> lo{}, hi{};
  int nl = 0, nh = 0;
  for (int k = 0; k < 3; ++k) {
    if (t.u[k] > level)
      hi[nh++] = k;
    else
      lo[nl++] = k;
  }
  if (nh == 0) {
    if (below) below->push_back(t);
    return;
  }
  if (nl == 0) {
    if (above) above->push_back(t);
    return;
  }
  const bool lonely_below = nl == 1;
  const int v = lonely_below ? lo[0] : hi[0];
  const auto& w = lonely_below ? hi : lo;
  Vec3 p0, p1;
  cut_point<3>(t, v, w[0], level, p0);
  cut_point<3>(t, v, w[1], level, p1);
  TriPiece corner{{t.p[v], p0, p1}, {t.u[v], level, level}};
  auto* corner_out = lonely_below ? below : above;
  auto* quad_out = lonely_below ? above : below;
  if (corner_out) corner_out->push_back(corner);
  if (quad_out) {
    quad_out->push_back({{p0, t.p[w[0]], t.p[w[1]]}, {level, t.u[w[0]], t.u[w[1]]}});
    quad_out->push_back({{p0, t.p[w[1]], p1}, {level, t.u[w[1]], level}});
  }
}

Real tet_above_fraction(const std::array<Real, 4>& u, Real level) {
  return side_fraction(u, level, true);
}

Real tet_below_fraction(const std::array<Real, 4>& u, Real level) {
  return side_fraction(u, level, false);
}

Real tri_above_fraction(const std::array<Real, 3>& u, Real level) {
  std::array<int, 3> in{}, out{};
  int ni = 0, no = 0;
  for (int k = 0; k < 3; ++k) {
    if (u[k] > level)
      in[ni++] = k;
    else
      out[no++] = k;
  }
  if (ni == 0) return 0;
  if (no == 0) return 1;
  auto s = [&](int from, int to) { return (level - u[from]) / (u[to] - u[from]); };
  if (ni == 1) return s(in[0], out[0]) * s(in[0], out[1]);
  return 1 - s(out[0], in[0]) * s(out[0], in[1]);
}

Real tet_positive_part_mean(const std::array<Real, 4>& u, Real level) {
  const Real umax = *std::max_element(u.begin(), u.end());
  if (!(umax > level)) return 0;
  const Real umin = *std::min_element(u.begin(), u.end());
  if (umin >= level) return (u[0] + u[1] + u[2] + u[3]) / 4 - level;
  // Work on the reference tetrahedron (volume 1/6).
  static const Vec3 E[4] = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  TetPiece t{{E[0], E[1], E[2], E[3]}, u};
  thread_local std::vector<TetPiece> above;
  above.clear();
  split_tet(t, level, nullptr, &above);
  Real s = 0;
  for (const auto& p : above) {
    const Real v = std::abs(tet_signed_volume(p.p[0], p.p[1], p.p[2], p.p[3]));
    s += v * ((p.u[0] + p.u[1] + p.u[2] + p.u[3]) / 4 - level);
  }
  return 6 * s;
}

std::array<TetPiece, 8> refine_tet(const TetPiece& t) {
  auto mid = [&](int i, int j) {
    return std::pair<Vec3, Real>((t.p[i] + t.p[j]) / 2, (t.u[i] + t.u[j]) / 2);
  };
  const auto m01 = mid(0, 1), m02 = mid(0, 2), m03 = mid(0, 3);
  const auto m12 = mid(1, 2), m13 = mid(1, 3), m23 = mid(2, 3);
  auto mk = [](std::pair<Vec3, Real> a, std::pair<Vec3, Real> b, std::pair<Vec3, Real> c,
               std::pair<Vec3, Real> d) {
    return TetPiece{{a.first, b.first, c.first, d.first},
                    {a.second, b.second, c.second, d.second}};
  };
  const std::pair<Vec3, Real> v0{t.p[0], t.u[0]}, v1{t.p[1], t.u[1]}, v2{t.p[2], t.u[2]},
      v3{t.p[3], t.u[3]};
  return {mk(v0, m01, m02, m03), mk(m01, v1, m12, m13), mk(m02, m12, v2, m23),
          mk(m03, m13, m23, v3),  mk(m02, m13, m01, m12), mk(m02, m13, m12, m23),
          mk(m02, m13, m23, m03), mk(m02, m13, m03, m01)};
}

}  // namespace nlab
