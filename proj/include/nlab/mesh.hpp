#pragma once

#include "nlab/core.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace nlab {

struct LipschitzCharacter {
  Real M = 0;
  std::optional<int> N;
  std::optional<Real> r0;
};

struct BoundaryFacet {
  std::array<Index, 3> v{};
  Index cell = -1;
  int local = -1;  // local index of the cell vertex opposite the facet
  Vec3 normal = Vec3::Zero();
  Real area = 0;
  int tag = 0;
};

// Vertical structure kept for graph-domain meshes so that the reflection is
// an exact vertex map.
struct GraphColumns {
  std::vector<Real> psi;  // psi(x') at every vertex
  std::vector<char> bottom;
  Real M = 0;
  Real r = 1;
};

class SimplicialMesh {
 public:
  using Cell = std::array<Index, 4>;
  using Tagger = std::function<int(const SimplicialMesh&, const BoundaryFacet&)>;

  SimplicialMesh() = default;
  SimplicialMesh(std::vector<Vec3> vertices, std::vector<Cell> cells,
                 const Tagger& tagger = {});

  int dim() const { return 3; }
  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_cells() const { return static_cast<Index>(cells_.size()); }
  Index num_facets() const { return static_cast<Index>(facets_.size()); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const Vec3& vertex(Index i) const { return vertices_[i]; }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(Index c) const { return cells_[c]; }
  const std::vector<BoundaryFacet>& facets() const { return facets_; }
  const BoundaryFacet& facet(Index f) const { return facets_[f]; }

  // Signed volume; positive for a correctly oriented cell.
  Real signed_volume(Index c) const { return signed_volume_[c]; }
  Real volume(Index c) const { return std::abs(signed_volume_[c]); }
  Real total_volume() const { return total_volume_; }
  Real boundary_area() const { return boundary_area_; }
  // Gradients of the four barycentric coordinates, constant on the cell.
  const std::array<Vec3, 4>& grads(Index c) const { return grads_[c]; }
  Vec3 centroid(Index c) const;
  Vec3 facet_centroid(Index f) const;
  Real diameter() const;
  // Local length scale (6 * mean incident cell volume)^(1/3) at a vertex.
  Real local_size(Index v) const;
  const std::vector<std::vector<Index>>& vertex_cells() const { return vertex_cells_; }
  const std::vector<Index>& boundary_vertices() const { return boundary_vertices_; }
  int interior_face_overuse() const { return overused_faces_; }

  std::optional<LipschitzCharacter> character;
  std::optional<GraphColumns> graph;

  // Retag boundary facets after construction.
  void retag(const Tagger& tagger);
  std::uint64_t hash() const;

 private:
  void build();

  std::vector<Vec3> vertices_;
  std::vector<Cell> cells_;
  std::vector<BoundaryFacet> facets_;
  std::vector<Real> signed_volume_;
  std::vector<std::array<Vec3, 4>> grads_;
  std::vector<std::vector<Index>> vertex_cells_;
  std::vector<Index> boundary_vertices_;
  Real total_volume_ = 0;
  Real boundary_area_ = 0;
  int overused_faces_ = 0;
};

using MeshPtr = std::shared_ptr<const SimplicialMesh>;

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
};

// Kuhn triangulation, 6 tetrahedra per sub-box. Facet tags: 1,2 = x1 low/high,
// 3,4 = x2 low/high, 5,6 = x3 low/high.
SimplicialMesh build_box_mesh(const Box& box, const std::array<int, 3>& subdivisions);

enum class BaseShape { Square, Disk };

struct GraphDomainSpec {
  Real r = 1;
  Real M = 0;
  std::function<Real(Real, Real)> psi = [](Real, Real) { return 0.0; };
  BaseShape base = BaseShape::Square;
  int disk_segments = 64;
  Real height() const { return (M + 1) * r; }
};

// Facet tags: 1 = bottom (graph of psi), 2 = top, 3 = lateral.
SimplicialMesh build_graph_domain_mesh(const GraphDomainSpec& spec, int resolution,
                                       int layers = 0);

// Max slope of the piecewise-linear psi sampled on the base triangulation.
Real measured_slope(const SimplicialMesh& mesh);

class ReflectionMap {
 public:
  explicit ReflectionMap(GraphDomainSpec spec) : spec_(std::move(spec)) {}
  const GraphDomainSpec& spec() const { return spec_; }
  // Psi(x', x_n) = (x', 2 psi(x') - x_n) with psi taken from the vertex data.
  Vec3 apply(const Vec3& x, Real psi_at_x) const {
    return Vec3(x.x(), x.y(), 2 * psi_at_x - x.z());
  }
  Mat3 jacobian(const Vec3& grad_psi) const;

 private:
  GraphDomainSpec spec_;
};

struct ReflectedMesh {
  SimplicialMesh mesh;
  Index source_cells = 0;        // cells [0, source_cells) are the original
  std::vector<Index> mirror;     // vertex -> reflected vertex (bottom maps to itself)
  std::vector<Index> cell_mirror;
};

ReflectedMesh reflect_mesh(const SimplicialMesh& upper, const ReflectionMap& map);

SimplicialMesh dilate_mesh(const SimplicialMesh& mesh, Real r);

struct MeshDiagnostics {
  bool conforming = true;
  bool oriented = true;
  bool outward_normals = true;
  Index negative_cells = 0;
  Real min_quality = 0;
  Vec3 closure = Vec3::Zero();
  Real max_normal_error = 0;
  Real total_volume = 0;
  bool ok() const { return conforming && oriented && outward_normals; }
};

MeshDiagnostics verify_mesh(const SimplicialMesh& mesh);

std::string mesh_to_json(const SimplicialMesh& mesh);
SimplicialMesh mesh_from_json(const std::string& text);

// Uniform bucket grid for locating points in cells.
class PointLocator {
 public:
  explicit PointLocator(MeshPtr mesh);
  // Returns the cell index and barycentric coordinates; throws OutsideDomain.
  std::pair<Index, Eigen::Vector4d> locate(const Vec3& x, Real tol = 1e-12) const;

 private:
  MeshPtr mesh_;
  Vec3 lo_, step_;
  std::array<int, 3> dims_{};
  std::vector<std::vector<Index>> buckets_;
};

Eigen::Vector4d barycentric(const SimplicialMesh& mesh, Index c, const Vec3& x);

}  // namespace nlab
