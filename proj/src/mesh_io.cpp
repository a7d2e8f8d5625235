#include "nlab/mesh.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>

namespace nlab {

using nlohmann::json;

namespace {
constexpr int kMeshVersion = 1;
}

std::string mesh_to_json(const SimplicialMesh& mesh) {
  json j;
  j["version"] = kMeshVersion;
  j["n"] = mesh.dim();
  json verts = json::array();
  for (const auto& v : mesh.vertices()) verts.push_back({v.x(), v.y(), v.z()});
  j["vertices"] = std::move(verts);
  json cells = json::array();
  for (const auto& c : mesh.cells()) cells.push_back({c[0], c[1], c[2], c[3]});
  j["cells"] = std::move(cells);
  json bnd = json::array();
  for (const auto& f : mesh.facets()) bnd.push_back({f.v[0], f.v[1], f.v[2], f.tag});
  j["boundary"] = std::move(bnd);
  if (mesh.character) {
    json ch;
    ch["M"] = mesh.character->M;
    ch["N"] = mesh.character->N ? json(*mesh.character->N) : json(nullptr);
    ch["r0"] = mesh.character->r0 ? json(*mesh.character->r0) : json(nullptr);
    j["character"] = ch;
  }
  return j.dump(1);
}

SimplicialMesh mesh_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("mesh json: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kMeshVersion)
      throw Error("mesh json: unsupported version");
    if (j.at("n").get<int>() != 3) throw Error("mesh json: only n = 3 is supported");
    std::vector<Vec3> verts;
    for (const auto& v : j.at("vertices")) {
      require(v.size() == 3, "mesh json: vertex must have 3 coordinates");
      verts.emplace_back(v[0].get<Real>(), v[1].get<Real>(), v[2].get<Real>());
    }
    std::vector<SimplicialMesh::Cell> cells;
    for (const auto& c : j.at("cells")) {
      require(c.size() == 4, "mesh json: cell must have 4 vertices");
      cells.push_back({c[0].get<Index>(), c[1].get<Index>(), c[2].get<Index>(),
                       c[3].get<Index>()});
    }
    std::map<std::array<Index, 3>, int> tags;
    for (const auto& b : j.at("boundary")) {
      require(b.size() == 4, "mesh json: boundary entry is [v0, v1, v2, tag]");
      std::array<Index, 3> key{b[0].get<Index>(), b[1].get<Index>(), b[2].get<Index>()};
      std::sort(key.begin(), key.end());
      tags[key] = b[3].get<int>();
    }
    SimplicialMesh mesh(std::move(verts), std::move(cells));
    require(static_cast<std::size_t>(mesh.num_facets()) == tags.size(),
            "mesh json: boundary list does not match the cell complex");
    mesh.retag([&](const SimplicialMesh&, const BoundaryFacet& f) {
      auto key = f.v;
      std::sort(key.begin(), key.end());
      auto it = tags.find(key);
      if (it == tags.end()) throw Error("mesh json: boundary facet not listed");
      return it->second;
    });
    if (j.contains("character")) {
      const auto& c = j["character"];
      LipschitzCharacter ch;
      ch.M = c.at("M").get<Real>();
      if (c.contains("N") && !c["N"].is_null()) ch.N = c["N"].get<int>();
      if (c.contains("r0") && !c["r0"].is_null()) ch.r0 = c["r0"].get<Real>();
      mesh.character = ch;
    }
    const auto d = verify_mesh(mesh);
    if (!d.conforming) throw Error("mesh json: non-conforming mesh");
    if (!d.oriented)
      throw Error("mesh json: " + std::to_string(d.negative_cells) + " cells with nonpositive volume");
    if (!d.outward_normals) throw Error("mesh json: inconsistent facet normals");
    return mesh;
  } catch (const json::exception& e) {
    throw Error(std::string("mesh json: ") + e.what());
  }
}

}  // namespace nlab
