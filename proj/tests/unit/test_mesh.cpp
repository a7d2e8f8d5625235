#include "nlab/fe.hpp"
#include "nlab/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nlab;

namespace {

SimplicialMesh cube(int n) { return build_box_mesh(Box{}, {n, n, n}); }

GraphDomainSpec sloped(Real slope) {
  GraphDomainSpec s;
  s.M = slope;
  s.psi = [slope](Real x, Real) { return slope * x; };
  return s;
}

// Sum over facets of (w . nu) area against sum over cells of div(w) volume for w(x) = G x + w0.
Real divergence_defect(const SimplicialMesh& m, const Mat3& G, const Vec3& w0) {
  Real flux = 0;
  for (Index f = 0; f < m.num_facets(); ++f) {
    const auto& F = m.facet(f);
    flux += (G * m.facet_centroid(f) + w0).dot(F.normal) * F.area;
  }
  return std::abs(flux - G.trace() * m.total_volume());
}

}  // namespace

TEST_CASE("single-box Kuhn split") {
  const auto m = cube(1);
  CHECK(m.num_cells() == 6);
  CHECK(m.num_facets() == 12);
  CHECK(m.total_volume() == doctest::Approx(1).epsilon(1e-15));
  CHECK(m.boundary_area() == doctest::Approx(6).epsilon(1e-15));
}

TEST_CASE("cell counts and exact volumes") {
  CHECK(cube(2).num_cells() == 48);
  CHECK(std::abs(cube(2).total_volume() - 1) < 1e-14);
  const auto m = build_box_mesh(Box{Vec3::Zero(), Vec3::Constant(kPi)}, {4, 4, 4});
  CHECK(std::abs(m.total_volume() - std::pow(kPi, 3)) < 1e-12 * std::pow(kPi, 3));
  const auto r = build_box_mesh(Box{Vec3(-1, 0, 2), Vec3(1, 3, 2.5)}, {2, 3, 1});
  CHECK(r.num_cells() == 6 * 2 * 3 * 1);
  CHECK(std::abs(r.total_volume() - 3) < 1e-14);
}

TEST_CASE("degenerate boxes are rejected") {
  CHECK_THROWS_AS(build_box_mesh(Box{Vec3::Zero(), Vec3(1, 0, 1)}, {1, 1, 1}), Error);
  CHECK_THROWS_AS(build_box_mesh(Box{}, {0, 1, 1}), Error);
}

TEST_CASE("every cell positively oriented, normals outward and unit") {
  for (const auto& m : {cube(3), build_graph_domain_mesh(sloped(0.5), 4)}) {
    for (Index c = 0; c < m.num_cells(); ++c) CHECK(m.signed_volume(c) > 0);
    for (Index f = 0; f < m.num_facets(); ++f) {
      const auto& F = m.facet(f);
      CHECK(std::abs(F.normal.norm() - 1) < 1e-14);
      CHECK(F.normal.dot(m.facet_centroid(f) - m.centroid(F.cell)) > 0);
    }
    const auto d = verify_mesh(m);
    CHECK(d.ok());
    CHECK(d.closure.norm() < 1e-13);
  }
}

TEST_CASE("flipped cell is flagged") {
  const auto m = cube(2);
  auto cells = m.cells();
  std::swap(cells[5][0], cells[5][1]);
  const SimplicialMesh bad(m.vertices(), cells);
  CHECK_FALSE(verify_mesh(bad).oriented);
}

TEST_CASE("discrete divergence theorem for affine fields") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<Real> U(-1, 1);
  for (const auto& m : {cube(3), build_graph_domain_mesh(sloped(0.5), 4), dilate_mesh(cube(2), 2.5)}) {
    for (int k = 0; k < 5; ++k) {
      Mat3 G;
      for (int i = 0; i < 9; ++i) G(i / 3, i % 3) = U(rng);
      const Vec3 w0(U(rng), U(rng), U(rng));
      CHECK(divergence_defect(m, G, w0) < 1e-12);
    }
  }
}

TEST_CASE("graph domains") {
  GraphDomainSpec flat;
  const auto box = build_graph_domain_mesh(flat, 2);
  CHECK(std::abs(box.total_volume() - 4) < 1e-13);

  const auto s = build_graph_domain_mesh(sloped(0.5), 4);
  CHECK(std::abs(measured_slope(s) - 0.5) < 1e-12);
  REQUIRE(s.character);
  CHECK(s.character->M == 0.5);
  // the graph raises the column but keeps its height (M + 1) r, so the volume is that of the box
  CHECK(std::abs(s.total_volume() - 4 * 1.5) < 1e-12);

  SUBCASE("declared slope too small") {
    GraphDomainSpec bad = sloped(0.5);
    bad.M = 0.25;
    CHECK_THROWS_AS(build_graph_domain_mesh(bad, 4), Error);
  }
  SUBCASE("polygonal disk base") {
    GraphDomainSpec disk;
    disk.base = BaseShape::Disk;
    disk.disk_segments = 64;
    const auto m = build_graph_domain_mesh(disk, 8);
    const Real deficit = 1 - m.total_volume() / kPi;
    CHECK(std::abs(deficit - (1 - 64 / (2 * kPi) * std::sin(2 * kPi / 64))) < 1e-12);
  }
}

TEST_CASE("reflection across a graph") {
  const GraphDomainSpec spec = sloped(0.5);
  const auto upper = build_graph_domain_mesh(spec, 4);
  const ReflectionMap map(spec);
  const auto ref = reflect_mesh(upper, map);
  CHECK(ref.source_cells == upper.num_cells());
  CHECK(ref.mesh.num_cells() == 2 * upper.num_cells());
  CHECK(std::abs(ref.mesh.total_volume() / (2 * upper.total_volume()) - 1) < 1e-14);
  for (Index c = 0; c < upper.num_cells(); ++c)
    CHECK(std::abs(ref.mesh.volume(ref.cell_mirror[c]) - upper.volume(c)) < 1e-14);
  CHECK(verify_mesh(ref.mesh).ok());

  // Psi o Psi = id, and mirrored vertices are Psi images
  Real worst = 0;
  for (Index v = 0; v < upper.num_vertices(); ++v) {
    const Real psi = upper.graph->psi[v];
    const Vec3 once = map.apply(upper.vertex(v), psi);
    worst = std::max(worst, (once - ref.mesh.vertex(ref.mirror[v])).norm());
    worst = std::max(worst, (map.apply(once, psi) - upper.vertex(v)).norm());
  }
  CHECK(worst < 1e-14);
  CHECK(std::abs(std::abs(map.jacobian(Vec3(0.5, 0, 0)).determinant()) - 1) < 1e-15);

  SUBCASE("flat graph mirrors the box") {
    GraphDomainSpec flat;
    const auto up = build_graph_domain_mesh(flat, 2);
    const auto r = reflect_mesh(up, ReflectionMap(flat));
    CHECK(std::abs(r.mesh.total_volume() - 8) < 1e-13);
  }
  SUBCASE("non-graph mesh rejected") {
    CHECK_THROWS_AS(reflect_mesh(cube(2), map), Error);
  }
}

TEST_CASE("dilation") {
  const auto m = cube(2);
  CHECK(std::abs(dilate_mesh(m, 2).total_volume() - 8) < 1e-13);
  const auto same = dilate_mesh(m, 1);
  for (Index v = 0; v < m.num_vertices(); ++v) CHECK((same.vertex(v) - m.vertex(v)).norm() == 0);
  const auto back = dilate_mesh(dilate_mesh(m, 3.7), 1 / 3.7);
  for (Index v = 0; v < m.num_vertices(); ++v) CHECK((back.vertex(v) - m.vertex(v)).norm() < 1e-13);
  CHECK_THROWS_AS(dilate_mesh(m, 0), Error);
  CHECK_THROWS_AS(dilate_mesh(m, -1), Error);

  const auto g = build_graph_domain_mesh(sloped(0.5), 4);
  const auto g3 = dilate_mesh(g, 3);
  REQUIRE(g3.character);
  CHECK(g3.character->M == 0.5);
  if (g.character->r0 && g3.character->r0) CHECK(std::abs(*g3.character->r0 - 3 * *g.character->r0) < 1e-14);
}

TEST_CASE("json round trip") {
  const auto m = build_graph_domain_mesh(sloped(0.5), 2);
  const auto back = mesh_from_json(mesh_to_json(m));
  CHECK(back.num_vertices() == m.num_vertices());
  CHECK(back.num_cells() == m.num_cells());
  CHECK(back.hash() == m.hash());
  CHECK(std::abs(back.total_volume() - m.total_volume()) < 1e-14);
  CHECK_THROWS(mesh_from_json("{\"version\": 1, \"n\": 3}"));
}

TEST_CASE("point location") {
  auto m = std::make_shared<const SimplicialMesh>(cube(3));
  const PointLocator loc(m);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<Real> U(0, 1);
  for (int k = 0; k < 50; ++k) {
    const Vec3 x(U(rng), U(rng), U(rng));
    const auto [c, bary] = loc.locate(x);
    CHECK(bary.minCoeff() > -1e-12);
    Vec3 back = Vec3::Zero();
    for (int i = 0; i < 4; ++i) back += bary[i] * m->vertex(m->cell(c)[i]);
    CHECK((back - x).norm() < 1e-13);
  }
  CHECK_THROWS_AS(loc.locate(Vec3(2, 0.5, 0.5)), OutsideDomain);
}
