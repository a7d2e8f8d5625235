#include "nlab/experiments.hpp"
#include "nlab/expr.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace nlab;
namespace fs = std::filesystem;

namespace {

Real eval(const std::string& s, const Vec3& x = Vec3(0.5, -2, 3)) { return Expression(s)(x); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the command-line tool and returns its exit status.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(NLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("nlab_test_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path write(const std::string& file, const std::string& text) const {
    std::ofstream(dir / file) << text;
    return dir / file;
  }
};

}  // namespace

TEST_CASE("expressions") {
  CHECK(eval("1 + 2 * 3") == 7);
  CHECK(eval("(1 + 2) * 3") == 9);
  CHECK(eval("2^3^2") == 512);
  CHECK(eval("-2^2") == -4);
  CHECK(eval("2^-1") == 0.5);
  CHECK(eval("10 / 4 / 5") == doctest::Approx(0.5));
  CHECK(eval("x1 + x2 * x3") == doctest::Approx(-5.5));
  CHECK(eval("sin(pi / 2) + cos(0) + exp(0) + ln(1) + abs(-3) + sqrt(16)") == doctest::Approx(10));
  CHECK(eval("+x1") == 0.5);
  CHECK(eval("1.5e1") == 15);
  CHECK_THROWS_AS(Expression("1 +"), Error);
  CHECK_THROWS_AS(Expression("foo(1)"), Error);
  CHECK_THROWS_AS(Expression("x4"), Error);
  CHECK_THROWS_AS(Expression("(1 + 2"), Error);
  CHECK_THROWS_AS(Expression("1 2"), Error);
}

TEST_CASE("run configs") {
  const auto c = parse_run_config(R"({"experiments": ["kernel-dim-cube"], "seed": 7})");
  CHECK(c.seed == 7);
  CHECK(c.experiments.size() == 1);
  // hash ignores output and jobs but not the seed
  auto d = c;
  d.output = "elsewhere";
  d.jobs = 4;
  CHECK(d.hash() == c.hash());
  d.seed = 8;
  CHECK(d.hash() != c.hash());
  CHECK(parse_run_config(c.to_json().dump()).hash() == c.hash());

  CHECK_THROWS_AS(parse_run_config(R"({"experiments": []})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiments": ["a"], "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiments": ["a"], "version": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiments": ["a"], "jobs": 0})"), ConfigError);
  try {
    parse_run_config("{\n  \"experiments\": [\"a\",]\n}");
    FAIL("expected a syntax error");
  } catch (const ConfigError& e) {
    CHECK(e.where().rfind("line 2", 0) == 0);
  }
}

TEST_CASE("mesh and problem configs") {
  const auto mc = MeshConfig::from_json(Json::parse(R"({"builder": "box", "lo": [0,0,0], "hi": [2,1,1], "n": [2,1,1]})"));
  const auto m = build_mesh(mc);
  CHECK(m.num_cells() == 12);
  CHECK(std::abs(m.total_volume() - 2) < 1e-14);
  const auto g = build_mesh(MeshConfig::from_json(Json::parse(R"({"builder": "graph", "M": 0.5, "psi": "0.5 * x1", "resolution": 4})")));
  CHECK(std::abs(measured_slope(g) - 0.5) < 1e-12);
  CHECK_THROWS_AS(MeshConfig::from_json(Json::parse(R"({"builder": "sphere"})")), ConfigError);

  auto mesh = std::make_shared<const SimplicialMesh>(m);
  const auto pc = ProblemConfig::from_json(Json::parse(R"({
    "A": {"kind": "constant", "value": [[2,0,0],[0,1,0],[0,0,1]]},
    "b": {"kind": "expr", "value": ["x1", "0", "-x3"]},
    "d": {"kind": "expr", "value": "1 + x1^2"},
    "variant": "adjoint"})"));
  const auto spec = build_problem(pc, mesh);
  CHECK(spec.variant == Variant::Adjoint);
  CHECK(spec.A.at_cell(0, Vec3::Zero())(0, 0) == 2);
  CHECK(spec.b.at_cell(0, Vec3(2, 0, 3)) == Vec3(2, 0, -3));
  CHECK(spec.d.at_cell(0, Vec3(2, 0, 0)) == 5);
  CHECK_THROWS_AS(ProblemConfig::from_json(Json::parse(R"({"d": {"kind": "expr", "value": "1 +"}})")), ConfigError);
  CHECK_THROWS_AS(ProblemConfig::from_json(Json::parse(R"({"b": {"kind": "constant", "value": 1}})")), ConfigError);
  CHECK_THROWS_AS(ProblemConfig::from_json(Json::parse(R"({"q": {"kind": "zero"}})")), ConfigError);
}

TEST_CASE("registry") {
  const auto& reg = experiment_registry();
  CHECK(reg.size() >= 15);
  for (const char* n : {"green-symmetry", "green-scaling", "main-estimate", "appendix-tensor-kernel"})
    CHECK(find_experiment(n) != nullptr);
  CHECK(find_experiment("no-such-experiment") == nullptr);
  for (const auto& e : reg) {
    CHECK_FALSE(e.anchor.empty());
    CHECK_FALSE(e.description.empty());
    CHECK(e.run != nullptr);
  }
}

TEST_CASE("reports are a pure function of config and seed") {
  ExperimentContext ctx;
  ctx.seed = 3;
  const auto* e = find_experiment("splitting-properties");
  REQUIRE(e);
  ctx.options = {{"functions", 4}, {"resolution", 4}};
  const auto a = run_experiment(*e, ctx), b = run_experiment(*e, ctx);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.to_json().dump().find("runtime") == std::string::npos);
}

TEST_CASE("command line") {
  Scratch s("cli");
  SUBCASE("unknown experiment is a config error and writes nothing") {
    const auto cfg = s.write("bad.json", R"({"experiments": ["no-such-experiment"]})");
    const fs::path out = s.dir / "out";
    CHECK(run_cli("run " + cfg.string() + " --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
  }
  SUBCASE("syntax error is a config error") {
    const auto cfg = s.write("broken.json", "{\"experiments\": [");
    CHECK(run_cli("run " + cfg.string() + " --out " + (s.dir / "out").string()) == 2);
  }
  SUBCASE("kernel dimension and the one-dimensional construction") {
    const auto cfg = s.write("ok.json", R"({"experiments": ["kernel-dim-cube", "appendix-1d"], "seed": 5})");
    const fs::path out = s.dir / "out";
    REQUIRE(run_cli("run " + cfg.string() + " --out " + out.string()) == 0);
    const auto hash = parse_run_config(slurp(cfg)).hash();
    const auto kern = Json::parse(slurp(out / hash / "kernel-dim-cube" / "report.json"));
    CHECK(kern["results"]["dimension"] == 1);
    const auto one = Json::parse(slurp(out / hash / "appendix-1d" / "report.json"));
    CHECK(one["results"]["f_residual"].get<Real>() < 1e-12);
    CHECK(one["results"]["delta"].get<Real>() > 0);
    CHECK(fs::exists(out / hash / "metadata.json"));

    // same reports for a different worker count
    const fs::path out2 = s.dir / "out2";
    REQUIRE(run_cli("run " + cfg.string() + " --jobs 2 --out " + out2.string()) == 0);
    for (const char* e : {"kernel-dim-cube", "appendix-1d"})
      CHECK(slurp(out / hash / e / "report.json") == slurp(out2 / hash / e / "report.json"));
  }
  SUBCASE("failing checks exit 1") {
    const auto cfg = s.write("strict.json", R"({"experiments": ["kernel-dim-cube"], "tolerances": {"min_gap": 1e30}})");
    CHECK(run_cli("run " + cfg.string() + " --out " + (s.dir / "out").string()) == 1);
  }
  SUBCASE("list and mesh") {
    CHECK(run_cli("list") == 0);
    CHECK(run_cli("list --json") == 0);
    CHECK(run_cli("frobnicate") == 2);
    const auto cfg = s.write("mesh.json", R"({"builder": "box", "n": [2, 2, 2]})");
    const fs::path mesh = s.dir / "mesh_out.json";
    CHECK(run_cli("mesh " + cfg.string() + " --out " + mesh.string()) == 0);
    CHECK(mesh_from_json(slurp(mesh)).num_cells() == 48);
  }
}
