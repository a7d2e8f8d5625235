#include "nlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace nlab {

namespace {

Real tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

struct FaceRecord {
  std::array<Index, 3> key;
  Index cell;
  int local;
};

}  // namespace

SimplicialMesh::SimplicialMesh(std::vector<Vec3> vertices, std::vector<Cell> cells,
                               const Tagger& tagger)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  build();
  if (tagger) retag(tagger);
}

void SimplicialMesh::build() {
  const Index nc = num_cells();
  const Index nv = num_vertices();
  signed_volume_.assign(nc, 0.0);
  grads_.assign(nc, {});
  vertex_cells_.assign(nv, {});
  total_volume_ = 0;
  for (Index c = 0; c < nc; ++c) {
    const auto& t = cells_[c];
    for (Index v : t) require(v >= 0 && v < nv, "cell references a missing vertex");
    Mat3 J;
    J.col(0) = vertices_[t[1]] - vertices_[t[0]];
    J.col(1) = vertices_[t[2]] - vertices_[t[0]];
    J.col(2) = vertices_[t[3]] - vertices_[t[0]];
    const Real det = J.determinant();
    signed_volume_[c] = det / 6.0;
    total_volume_ += std::abs(signed_volume_[c]);
    auto& g = grads_[c];
    if (det != 0.0) {
      const Mat3 Jinv = J.inverse();
      for (int i = 0; i < 3; ++i) g[i + 1] = Jinv.row(i).transpose();
      g[0] = -(g[1] + g[2] + g[3]);
    } else {
      for (auto& gi : g) gi.setZero();
    }
    for (Index v : t) vertex_cells_[v].push_back(c);
  }

  std::vector<FaceRecord> faces;
  faces.reserve(4 * nc);
  for (Index c = 0; c < nc; ++c) {
    for (int i = 0; i < 4; ++i) {
      FaceRecord r{{}, c, i};
      int k = 0;
      for (int j = 0; j < 4; ++j)
        if (j != i) r.key[k++] = cells_[c][j];
      std::sort(r.key.begin(), r.key.end());
      faces.push_back(r);
    }
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRecord& a, const FaceRecord& b) {
    return a.key != b.key ? a.key < b.key : a.cell < b.cell;
  });

  facets_.clear();
  overused_faces_ = 0;
  boundary_area_ = 0;
  std::vector<char> on_boundary(nv, 0);
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    const std::size_t count = j - i;
    if (count == 1) {
      const auto& r = faces[i];
      BoundaryFacet f;
      f.cell = r.cell;
      f.local = r.local;
      const Vec3& gi = grads_[r.cell][r.local];
      const Real gn = gi.norm();
      f.normal = gn > 0 ? Vec3(-gi / gn) : Vec3::Zero();
      f.area = 3.0 * std::abs(signed_volume_[r.cell]) * gn;
      f.v = r.key;
      const Vec3 cr = (vertices_[f.v[1]] - vertices_[f.v[0]])
                          .cross(vertices_[f.v[2]] - vertices_[f.v[0]]);
      if (cr.dot(f.normal) < 0) std::swap(f.v[1], f.v[2]);
      for (Index v : f.v) on_boundary[v] = 1;
      boundary_area_ += f.area;
      facets_.push_back(f);
    } else if (count > 2) {
      ++overused_faces_;
    }
    i = j;
  }
  boundary_vertices_.clear();
  for (Index v = 0; v < nv; ++v)
    if (on_boundary[v]) boundary_vertices_.push_back(v);
}

void SimplicialMesh::retag(const Tagger& tagger) {
  for (auto& f : facets_) f.tag = tagger(*this, f);
}

Vec3 SimplicialMesh::centroid(Index c) const {
  const auto& t = cells_[c];
  return (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]] + vertices_[t[3]]) / 4.0;
}

Vec3 SimplicialMesh::facet_centroid(Index f) const {
  const auto& v = facets_[f].v;
  return (vertices_[v[0]] + vertices_[v[1]] + vertices_[v[2]]) / 3.0;
}

Real SimplicialMesh::diameter() const {
  if (vertices_.empty()) return 0;
  Vec3 lo = vertices_[0], hi = vertices_[0];
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

Real SimplicialMesh::local_size(Index v) const {
  const auto& cs = vertex_cells_[v];
  if (cs.empty()) return 0;
  Real s = 0;
  for (Index c : cs) s += volume(c);
  return std::cbrt(6.0 * s / static_cast<Real>(cs.size()));
}

std::uint64_t SimplicialMesh::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& v : vertices_) mix(v.data(), 3 * sizeof(Real));
  for (const auto& c : cells_) mix(c.data(), 4 * sizeof(Index));
  for (const auto& f : facets_) mix(&f.tag, sizeof(int));
  return h;
}

Eigen::Vector4d barycentric(const SimplicialMesh& mesh, Index c, const Vec3& x) {
  const auto& g = mesh.grads(c);
  const auto& t = mesh.cell(c);
  Eigen::Vector4d l;
  for (int i = 1; i < 4; ++i) l[i] = g[i].dot(x - mesh.vertex(t[0]));
  l[0] = 1.0 - l[1] - l[2] - l[3];
  return l;
}

// --- builders -------------------------------------------------------------

SimplicialMesh build_box_mesh(const Box& box, const std::array<int, 3>& n) {
  for (int k = 0; k < 3; ++k) {
    require(n[k] >= 1, "box mesh: subdivisions must be >= 1");
    require(box.hi[k] > box.lo[k], "box mesh: degenerate box (hi <= lo on axis " +
                                       std::to_string(k) + ")");
  }
  const Index nx = n[0] + 1, ny = n[1] + 1, nz = n[2] + 1;
  auto id = [&](Index i, Index j, Index k) { return i + nx * (j + ny * k); };
  std::vector<Vec3> verts(nx * ny * nz);
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i) {
        // Boundary planes are hit exactly so faces are flat in floating point.
        auto coord = [&](int axis, Index m) {
          if (m == 0) return box.lo[axis];
          if (m == n[axis]) return box.hi[axis];
          return box.lo[axis] + (box.hi[axis] - box.lo[axis]) * Real(m) / n[axis];
        };
        verts[id(i, j, k)] = Vec3(coord(0, i), coord(1, j), coord(2, k));
      }

  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<SimplicialMesh::Cell> cells;
  cells.reserve(6 * Index(n[0]) * n[1] * n[2]);
  for (Index k = 0; k < n[2]; ++k)
    for (Index j = 0; j < n[1]; ++j)
      for (Index i = 0; i < n[0]; ++i)
        for (const auto& p : perms) {
          std::array<Index, 3> off{0, 0, 0};
          SimplicialMesh::Cell c;
          c[0] = id(i, j, k);
          for (int s = 0; s < 3; ++s) {
            off[p[s]] = 1;
            c[s + 1] = id(i + off[0], j + off[1], k + off[2]);
          }
          if (tet_signed_volume(verts[c[0]], verts[c[1]], verts[c[2]], verts[c[3]]) < 0)
            std::swap(c[2], c[3]);
          cells.push_back(c);
        }

  SimplicialMesh mesh(std::move(verts), std::move(cells),
                      [](const SimplicialMesh&, const BoundaryFacet& f) {
                        int axis;
                        f.normal.cwiseAbs().maxCoeff(&axis);
                        return 2 * axis + (f.normal[axis] > 0 ? 2 : 1);
                      });
  LipschitzCharacter ch;
  ch.M = 1;
  const Real side = (box.hi - box.lo).minCoeff();
  ch.r0 = side / 40.0;
  // Cover count for balls of radius r0 centred on a boundary grid of spacing r0.
  Index count = 0;
  std::array<Index, 3> m;
  for (int a = 0; a < 3; ++a) m[a] = Index(std::ceil((box.hi[a] - box.lo[a]) / *ch.r0)) + 1;
  count = m[0] * m[1] * m[2] - std::max<Index>(m[0] - 2, 0) * std::max<Index>(m[1] - 2, 0) *
                                  std::max<Index>(m[2] - 2, 0);
  ch.N = static_cast<int>(count);
  mesh.character = ch;
  return mesh;
}

namespace {

struct BaseTriangulation {
  std::vector<Eigen::Vector2d> pts;
  std::vector<std::array<Index, 3>> tris;
};

BaseTriangulation square_base(Real r, int k) {
  BaseTriangulation b;
  const Index m = k + 1;
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < m; ++i) {
      auto coord = [&](Index q) {
        if (q == 0) return -r;
        if (q == k) return r;
        return -r + 2 * r * Real(q) / k;
      };
      b.pts.emplace_back(coord(i), coord(j));
    }
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < k; ++i) {
      const Index a = i + m * j, bb = a + 1, c = a + m, d = c + 1;
      b.tris.push_back({a, bb, d});
      b.tris.push_back({a, d, c});
    }
  return b;
}

BaseTriangulation disk_base(Real r, int rings, int segments) {
  BaseTriangulation b;
  b.pts.emplace_back(0.0, 0.0);
  for (int j = 1; j <= rings; ++j) {
    const Real rho = r * Real(j) / rings;
    for (int s = 0; s < segments; ++s) {
      const Real th = 2 * kPi * s / segments;
      b.pts.emplace_back(rho * std::cos(th), rho * std::sin(th));
    }
  }
  auto ring = [&](int j, int s) -> Index {
    return 1 + Index(j - 1) * segments + ((s % segments) + segments) % segments;
  };
  for (int s = 0; s < segments; ++s) b.tris.push_back({0, ring(1, s), ring(1, s + 1)});
  for (int j = 1; j < rings; ++j)
    for (int s = 0; s < segments; ++s) {
      b.tris.push_back({ring(j, s), ring(j + 1, s), ring(j + 1, s + 1)});
      b.tris.push_back({ring(j, s), ring(j + 1, s + 1), ring(j, s + 1)});
    }
  return b;
}

Real triangle_slope(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                    const Eigen::Vector2d& p2, Real z0, Real z1, Real z2) {
  Eigen::Matrix2d E;
  E.col(0) = p1 - p0;
  E.col(1) = p2 - p0;
  const Eigen::Vector2d dz(z1 - z0, z2 - z0);
  // grad^T E = dz^T
  const Eigen::Vector2d g = E.transpose().fullPivLu().solve(dz);
  return g.norm();
}

}  // namespace

SimplicialMesh build_graph_domain_mesh(const GraphDomainSpec& spec, int resolution,
                                       int layers) {
  require(spec.r > 0, "graph domain: base radius must be positive");
  require(spec.M >= 0, "graph domain: Lipschitz bound must be nonnegative");
  require(resolution >= 1, "graph domain: resolution must be >= 1");
  require(spec.psi(0.0, 0.0) == 0.0, "graph domain: psi(0) must be 0");

  BaseTriangulation base;
  if (spec.base == BaseShape::Square) {
    require(resolution % 2 == 0, "graph domain: square base needs an even resolution "
                                 "so that the origin is a base vertex");
    base = square_base(spec.r, resolution);
  } else {
    require(spec.disk_segments >= 3, "graph domain: disk needs >= 3 segments");
    base = disk_base(spec.r, resolution, spec.disk_segments);
  }

  const Index nb = static_cast<Index>(base.pts.size());
  std::vector<Real> psi(nb);
  for (Index i = 0; i < nb; ++i) {
    psi[i] = spec.psi(base.pts[i].x(), base.pts[i].y());
    require(std::isfinite(psi[i]), "graph domain: psi not finite at base vertex " +
                                       std::to_string(i));
  }
  Real slope = 0;
  for (const auto& t : base.tris)
    slope = std::max(slope, triangle_slope(base.pts[t[0]], base.pts[t[1]], base.pts[t[2]],
                                           psi[t[0]], psi[t[1]], psi[t[2]]));
  if (slope > spec.M * (1 + 1e-12) + 1e-14)
    throw Error("graph domain: psi slope " + std::to_string(slope) +
                " exceeds declared M = " + std::to_string(spec.M));

  const Real H = spec.height();
  if (layers <= 0) {
    const Real h = spec.base == BaseShape::Square ? 2 * spec.r / resolution
                                                  : spec.r / resolution;
    layers = std::max(1, int(std::ceil(H / h - 1e-9)));
  }
  const Index L = layers;
  std::vector<Vec3> verts;
  GraphColumns cols;
  cols.M = spec.M;
  cols.r = spec.r;
  verts.reserve(nb * (L + 1));
  for (Index l = 0; l <= L; ++l)
    for (Index i = 0; i < nb; ++i) {
      const Real z = l == 0 ? psi[i] : (l == L ? psi[i] + H : psi[i] + H * Real(l) / L);
      verts.emplace_back(base.pts[i].x(), base.pts[i].y(), z);
      cols.psi.push_back(psi[i]);
      cols.bottom.push_back(l == 0 ? 1 : 0);
    }
  auto id = [&](Index b, Index l) { return b + nb * l; };
  std::vector<SimplicialMesh::Cell> cells;
  for (Index l = 0; l < L; ++l)
    for (auto t : base.tris) {
      std::sort(t.begin(), t.end());
      const Index a = id(t[0], l), b = id(t[1], l), c = id(t[2], l);
      const Index a1 = id(t[0], l + 1), b1 = id(t[1], l + 1), c1 = id(t[2], l + 1);
      for (SimplicialMesh::Cell cell : {SimplicialMesh::Cell{a, b, c, c1},
                                        SimplicialMesh::Cell{a, b, b1, c1},
                                        SimplicialMesh::Cell{a, a1, b1, c1}}) {
        if (tet_signed_volume(verts[cell[0]], verts[cell[1]], verts[cell[2]],
                              verts[cell[3]]) < 0)
          std::swap(cell[2], cell[3]);
        cells.push_back(cell);
      }
    }

  const Index top_start = nb * L;
  SimplicialMesh mesh(std::move(verts), std::move(cells),
                      [&](const SimplicialMesh&, const BoundaryFacet& f) {
                        bool bottom = true, top = true;
                        for (Index v : f.v) {
                          bottom = bottom && v < nb;
                          top = top && v >= top_start;
                        }
                        return bottom ? 1 : (top ? 2 : 3);
                      });
  mesh.graph = std::move(cols);
  LipschitzCharacter ch;
  ch.M = slope;
  ch.r0 = spec.r;
  mesh.character = ch;
  return mesh;
}

Real measured_slope(const SimplicialMesh& mesh) {
  Real s = 0;
  for (const auto& f : mesh.facets()) {
    if (f.tag != 1) continue;
    const Real nn = std::abs(f.normal.z());
    if (nn == 0) return std::numeric_limits<Real>::infinity();
    s = std::max(s, std::hypot(f.normal.x(), f.normal.y()) / nn);
  }
  return s;
}

Mat3 ReflectionMap::jacobian(const Vec3& grad_psi) const {
  Mat3 D = Mat3::Identity();
  D(2, 0) = 2 * grad_psi.x();
  D(2, 1) = 2 * grad_psi.y();
  D(2, 2) = -1;
  return D;
}

ReflectedMesh reflect_mesh(const SimplicialMesh& upper, const ReflectionMap& map) {
  if (!upper.graph)
    throw Error("reflect_mesh: mesh is not graph-conforming (no column data)");
  const auto& cols = *upper.graph;
  const Index nv = upper.num_vertices();
  require(static_cast<Index>(cols.psi.size()) == nv, "reflect_mesh: column data size mismatch");
  for (Index v = 0; v < nv; ++v) {
    const Real z = upper.vertex(v).z();
    if (cols.bottom[v] ? z != cols.psi[v] : !(z > cols.psi[v]))
      throw Error("reflect_mesh: vertex " + std::to_string(v) + " not graph-conforming");
  }

  ReflectedMesh out;
  std::vector<Vec3> verts = upper.vertices();
  out.mirror.assign(nv, -1);
  for (Index v = 0; v < nv; ++v) {
    if (cols.bottom[v]) {
      out.mirror[v] = v;
    } else {
      out.mirror[v] = static_cast<Index>(verts.size());
      verts.push_back(map.apply(upper.vertex(v), cols.psi[v]));
    }
  }
  const Index total = static_cast<Index>(verts.size());
  out.mirror.resize(total);
  for (Index v = 0; v < nv; ++v)
    if (!cols.bottom[v]) out.mirror[out.mirror[v]] = v;

  std::vector<SimplicialMesh::Cell> cells = upper.cells();
  out.source_cells = upper.num_cells();
  out.cell_mirror.resize(2 * out.source_cells);
  for (Index c = 0; c < out.source_cells; ++c) {
    SimplicialMesh::Cell m;
    for (int i = 0; i < 4; ++i) m[i] = out.mirror[upper.cell(c)[i]];
    std::swap(m[2], m[3]);  // Psi reverses orientation
    out.cell_mirror[c] = static_cast<Index>(cells.size());
    out.cell_mirror[cells.size()] = c;
    cells.push_back(m);
  }

  std::vector<char> lower(total, 0);
  for (Index v = nv; v < total; ++v) lower[v] = 1;
  out.mesh = SimplicialMesh(std::move(verts), std::move(cells),
                            [&](const SimplicialMesh& m, const BoundaryFacet& f) {
                              const bool below = f.cell >= out.source_cells;
                              (void)m;
                              // top of the upper half 2, its mirror 4; lateral 3 / 5
                              if (std::abs(f.normal.z()) > 1e-9) return below ? 4 : 2;
                              return below ? 5 : 3;
                            });
  GraphColumns cols2;
  cols2.M = cols.M;
  cols2.r = cols.r;
  cols2.psi.resize(total);
  cols2.bottom.assign(total, 0);
  for (Index v = 0; v < total; ++v) cols2.psi[v] = cols.psi[v < nv ? v : out.mirror[v]];
  out.mesh.graph = std::move(cols2);
  out.mesh.character = upper.character;
  return out;
}

SimplicialMesh dilate_mesh(const SimplicialMesh& mesh, Real r) {
  require(r > 0 && std::isfinite(r), "dilate_mesh: scale factor must be positive");
  std::vector<Vec3> verts = mesh.vertices();
  if (r != 1.0)
    for (auto& v : verts) v *= r;
  std::vector<int> tags;
  for (const auto& f : mesh.facets()) tags.push_back(f.tag);
  std::vector<SimplicialMesh::Cell> cells = mesh.cells();
  SimplicialMesh out(std::move(verts), std::move(cells));
  // Facet ordering depends only on connectivity, so tags carry over by position.
  Index i = 0;
  out.retag([&](const SimplicialMesh&, const BoundaryFacet&) { return tags[i++]; });
  if (mesh.character) {
    auto ch = *mesh.character;
    if (ch.r0) ch.r0 = *ch.r0 * r;
    out.character = ch;
  }
  if (mesh.graph) {
    auto g = *mesh.graph;
    for (auto& p : g.psi) p *= r;
    g.r *= r;
    out.graph = std::move(g);
  }
  return out;
}

MeshDiagnostics verify_mesh(const SimplicialMesh& mesh) {
  MeshDiagnostics d;
  d.conforming = mesh.interior_face_overuse() == 0;
  d.min_quality = std::numeric_limits<Real>::infinity();
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const Real v = mesh.signed_volume(c);
    if (!(v > 0)) {
      ++d.negative_cells;
      d.oriented = false;
    }
    const auto& t = mesh.cell(c);
    Real lmax = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        lmax = std::max(lmax, (mesh.vertex(t[i]) - mesh.vertex(t[j])).norm());
    // 1 for the regular tetrahedron
    const Real q = lmax > 0 ? 6 * std::sqrt(2.0) * std::abs(v) / (lmax * lmax * lmax) : 0;
    d.min_quality = std::min(d.min_quality, q);
  }
  for (Index f = 0; f < mesh.num_facets(); ++f) {
    const auto& bf = mesh.facet(f);
    d.closure += bf.normal * bf.area;
    d.max_normal_error = std::max(d.max_normal_error, std::abs(bf.normal.norm() - 1.0));
    if (!(bf.normal.dot(mesh.facet_centroid(f) - mesh.centroid(bf.cell)) > 0))
      d.outward_normals = false;
  }
  if (mesh.num_cells() == 0) d.min_quality = 0;
  d.total_volume = mesh.total_volume();
  return d;
}

// --- point location -------------------------------------------------------

PointLocator::PointLocator(MeshPtr mesh) : mesh_(std::move(mesh)) {
  const auto& m = *mesh_;
  Vec3 lo = m.vertex(0), hi = m.vertex(0);
  for (const auto& v : m.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Real pad = 1e-9 * (hi - lo).norm();
  lo_ = lo.array() - pad;
  hi = hi.array() + pad;
  const int per = std::max(1, int(std::cbrt(Real(m.num_cells()) / 4.0)));
  for (int a = 0; a < 3; ++a) {
    dims_[a] = per;
    step_[a] = (hi[a] - lo_[a]) / per;
  }
  buckets_.assign(Index(per) * per * per, {});
  for (Index c = 0; c < m.num_cells(); ++c) {
    Vec3 clo = m.vertex(m.cell(c)[0]), chi = clo;
    for (Index v : m.cell(c)) {
      clo = clo.cwiseMin(m.vertex(v));
      chi = chi.cwiseMax(m.vertex(v));
    }
    std::array<int, 3> a0, a1;
    for (int a = 0; a < 3; ++a) {
      a0[a] = std::clamp(int((clo[a] - lo_[a]) / step_[a]), 0, dims_[a] - 1);
      a1[a] = std::clamp(int((chi[a] - lo_[a]) / step_[a]), 0, dims_[a] - 1);
    }
    for (int k = a0[2]; k <= a1[2]; ++k)
      for (int j = a0[1]; j <= a1[1]; ++j)
        for (int i = a0[0]; i <= a1[0]; ++i)
          buckets_[i + dims_[0] * (j + dims_[1] * Index(k))].push_back(c);
  }
}

std::pair<Index, Eigen::Vector4d> PointLocator::locate(const Vec3& x, Real tol) const {
  std::array<int, 3> b;
  for (int a = 0; a < 3; ++a) {
    const Real s = (x[a] - lo_[a]) / step_[a];
    if (!(s >= -1e-9) || !(s <= dims_[a] + 1e-9))
      throw OutsideDomain("point outside mesh bounding box");
    b[a] = std::clamp(int(s), 0, dims_[a] - 1);
  }
  Index best = -1;
  Real best_min = -std::numeric_limits<Real>::infinity();
  Eigen::Vector4d best_l;
  for (Index c : buckets_[b[0] + dims_[0] * (b[1] + dims_[1] * Index(b[2]))]) {
    const Eigen::Vector4d l = barycentric(*mesh_, c, x);
    const Real mn = l.minCoeff();
    if (mn > best_min) {
      best_min = mn;
      best = c;
      best_l = l;
    }
  }
  if (best < 0 || best_min < -tol) throw OutsideDomain("point outside the mesh");
  return {best, best_l};
}

}  // namespace nlab
