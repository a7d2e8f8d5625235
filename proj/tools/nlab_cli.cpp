#include "nlab/experiments.hpp"
#include "nlab/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace nlab;

namespace {

constexpr int kPass = 0, kFail = 1, kConfig = 2;

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

int cmd_list(bool json) {
  if (json) {
    Json j = Json::array();
    for (const auto& e : experiment_registry())
      j.push_back({{"name", e.name}, {"description", e.description}, {"anchor", e.anchor}});
    std::cout << j.dump(2) << '\n';
    return kPass;
  }
  for (const auto& e : experiment_registry())
    std::cout << e.name << "\n    " << e.description << "\n    anchor: " << e.anchor << '\n';
  return kPass;
}

struct Outcome {
  ExperimentReport report;
  std::string error;
  bool config_error = false;
};

int cmd_run(const std::string& path, std::optional<int> jobs, std::optional<std::string> out,
            std::optional<std::uint64_t> seed) {
  RunConfig cfg;
  try {
    cfg = load_run_config(path);
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    if (out) cfg.output = *out;
    if (cfg.jobs < 1) throw ConfigError("jobs", "must be >= 1");
    for (const auto& name : cfg.experiments)
      if (!find_experiment(name)) throw ConfigError("config.experiments", "unknown experiment '" + name + "'");
    for (const auto& [name, v] : cfg.options.items()) {
      if (std::find(cfg.experiments.begin(), cfg.experiments.end(), name) == cfg.experiments.end())
        throw ConfigError("config.options." + name, "options given for an experiment that is not run");
      if (!v.is_object()) throw ConfigError("config.options." + name, "must be an object");
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }

  const std::string hash = cfg.hash();
  const fs::path dir = fs::path(cfg.output) / hash;
  const auto& names = cfg.experiments;
  std::vector<Outcome> results(names.size());
  const int workers = std::min<int>(cfg.jobs, int(names.size()));
  parallel_for(Index(names.size()), workers, [&](Index i) {
    ExperimentContext ctx;
    ctx.seed = cfg.seed;
    if (cfg.options.contains(names[i])) ctx.options = cfg.options[names[i]];
    ctx.refinements = cfg.refinements;
    ctx.tolerances = cfg.tolerances;
    ctx.mesh = cfg.mesh;
    ctx.problem = cfg.problem;
    ctx.jobs = std::max(1, cfg.jobs / std::max(1, workers));
    try {
      results[i].report = run_experiment(*find_experiment(names[i]), ctx);
    } catch (const ConfigError& e) {
      results[i].error = e.what();
      results[i].config_error = true;
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  });

  for (const auto& r : results)
    if (r.config_error) {
      std::cerr << "config error: " << r.error << '\n';
      return kConfig;
    }

  fs::create_directories(dir);
  write_file(dir / "config.json", cfg.to_json().dump(2) + "\n");
  Json meta;
  meta["config_hash"] = hash;
  meta["jobs"] = cfg.jobs;
  meta["finished_at"] = std::time(nullptr);
  int status = kPass;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& o = results[i];
    const fs::path sub = dir / names[i];
    fs::create_directories(sub);
    if (!o.error.empty()) {
      Json j{{"schema", 1}, {"experiment", names[i]}, {"error", o.error}, {"passed", false}};
      write_file(sub / "report.json", j.dump(2) + "\n");
      std::cout << "ERROR " << names[i] << ": " << o.error << '\n';
      status = kFail;
      continue;
    }
    write_file(sub / "report.json", o.report.to_json().dump(2) + "\n");
    for (const auto& [file, text] : o.report.tables) write_file(sub / file, text);
    meta["runtime_seconds"][names[i]] = o.report.runtime;
    const bool ok = o.report.passed();
    std::cout << (ok ? "PASS  " : "FAIL  ") << names[i] << "  (" << o.report.checks.size() << " checks, "
              << o.report.runtime << " s)\n";
    for (const auto& c : o.report.checks)
      if (!c.pass) std::cout << "      failed: " << c.name << "  value " << c.value << ' ' << c.relation << ' ' << c.bound << '\n';
    if (!ok) status = kFail;
  }
  write_file(dir / "metadata.json", meta.dump(2) + "\n");
  std::cout << "run directory: " << dir.string() << '\n';
  return status;
}

int cmd_mesh(const std::string& path, const std::string& out) {
  SimplicialMesh mesh;
  try {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open mesh config");
    std::stringstream ss;
    ss << in.rdbuf();
    Json j = parse_json_text(ss.str());
    if (j.contains("mesh")) j = j["mesh"];
    mesh = build_mesh(MeshConfig::from_json(j));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  const MeshDiagnostics d = verify_mesh(mesh);
  write_file(out, mesh_to_json(mesh));
  std::cout << "vertices " << mesh.num_vertices() << ", cells " << mesh.num_cells() << ", boundary facets "
            << mesh.num_facets() << ", volume " << d.total_volume << (d.ok() ? "" : "  (diagnostics failed)")
            << '\n';
  return d.ok() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification lab for Neumann problems with lower-order terms"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "list registered experiments");
  bool list_json = false;
  list->add_flag("--json", list_json, "machine-readable output");

  auto* run = app.add_subcommand("run", "run the experiments named in a config file");
  std::string config;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  run->add_option("config", config, "run configuration (JSON)")->required();
  run->add_option("--jobs", jobs, "parallel experiments");
  run->add_option("--out", out, "output root directory");
  run->add_option("--seed", seed, "random seed");

  auto* mesh = app.add_subcommand("mesh", "build a mesh from a builder config");
  std::string mesh_cfg, mesh_out;
  mesh->add_option("config", mesh_cfg, "mesh builder configuration (JSON)")->required();
  mesh->add_option("--out", mesh_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }
  try {
    if (*list) return cmd_list(list_json);
    if (*run) return cmd_run(config, jobs, out, seed);
    if (*mesh) return cmd_mesh(mesh_cfg, mesh_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kPass;
}
