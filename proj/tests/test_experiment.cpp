#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "qotlab/error.hpp"
#include "qotlab/experiment.hpp"

using namespace qotlab;
namespace fs = std::filesystem;

namespace {

const std::string kCli = QOTLAB_CLI;
const std::string kConfigs = QOTLAB_CONFIGS;
const std::string kFixtures = QOTLAB_FIXTURES;
const fs::path kScratch = fs::path(QOTLAB_SCRATCH) / "experiment";

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Cmd {
  int code;
  std::string err;
};

Cmd run_cli(const std::string& args, const std::string& tag) {
  fs::create_directories(kScratch);
  const fs::path err = kScratch / (tag + ".stderr");
  const std::string cmd = kCli + " " + args + " > /dev/null 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

// Writes a config into the scratch area and returns its path.
fs::path write_config(const std::string& tag, Json j) {
  const fs::path dir = kScratch / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  j["output_dir"] = (dir / "out").string();
  const fs::path p = dir / "config.json";
  write_text_file(p.string(), j.dump(2));
  return p;
}

Json base_config() {
  return Json{{"name", "t"},
              {"instance", {{"file", kConfigs + "/instances/grid_d1_h0.1.json"}}},
              {"eps", {0.1, 0.01}}};
}

}  // namespace

TEST_CASE("config parsing rejects bad input") {
  CHECK_NOTHROW(parse_config(base_config()));
  auto with = [](const char* key, Json v) {
    Json j = base_config();
    j[key] = std::move(v);
    return j;
  };
  CHECK_THROWS_AS(parse_config(with("eps", {0.1, 0.0})), ConfigError);
  CHECK_THROWS_AS(parse_config(with("eps", {0.1, -0.01})), ConfigError);
  CHECK_THROWS_AS(parse_config(with("eps", {0.01, 0.1})), ConfigError);
  CHECK_THROWS_AS(parse_config(with("eps", Json::array())), ConfigError);
  CHECK_THROWS_AS(parse_config(with("epsilon", {0.1})), ConfigError);
  CHECK_THROWS_AS(parse_config(with("checks", {"NoSuchBound"})), ConfigError);
  CHECK_THROWS_AS(parse_config(with("solver", {{"execution", "gpu"}})), ConfigError);
  CHECK_THROWS_AS(parse_config(with("solver", {{"sweeps", 3}})), ConfigError);
  CHECK_THROWS_AS(parse_config(with("rate", true)), ConfigError);  // only two eps
  CHECK_THROWS_AS(parse_config(with("seed", -1)), ConfigError);

  const ExperimentConfig cfg = parse_config(with("checks", {"DensityUB", "SymUB"}), "/tmp/x");
  REQUIRE(cfg.checks.has_value());
  CHECK(cfg.checks->size() == 2);
  CHECK(cfg.output_dir == "/tmp/x/out");
  CHECK_FALSE(parse_config(base_config()).checks.has_value());
  CHECK(parse_config(with("checks", Json::array())).checks->empty());
}

TEST_CASE("generators") {
  const Instance grid = generate_instance(parse_generator({{"family", "grid"}, {"d", 1}, {"h", 0.02}}));
  CHECK(grid.mu.size() == 101);
  CHECK(grid.name == "grid_d1_h0.02");
  REQUIRE(grid.grid_h.has_value());
  CHECK(*grid.grid_h == 0.02);

  const Instance aff = generate_instance(parse_generator({{"family", "affine"}, {"d", 1}, {"h", 0.02}, {"a", 0.5}}));
  CHECK(aff.name == "affine_d1_h0.02_a0.5");
  REQUIRE(aff.monge.has_value());
  CHECK(aff.monge->lipschitz() == doctest::Approx(0.5));
  REQUIRE(aff.nu.size() == aff.mu.size());
  for (std::size_t i = 0; i < aff.mu.size(); ++i) {
    CHECK(aff.nu.atom(i)[0] == doctest::Approx(0.5 * aff.mu.atom(i)[0]));
  }

  const Instance two = generate_instance(parse_generator({{"family", "two_point"}}));
  CHECK(two.mu.size() == 2);
  CHECK(generate_instance(parse_generator({{"family", "singleton"}, {"d", 3}})).mu.dim() == 3);

  CHECK_THROWS_AS(generate_instance(parse_generator({{"family", "grid"}, {"d", 4}})), ValidationError);
  CHECK_THROWS_AS(parse_generator({{"family", "torus"}}), ConfigError);
  CHECK_THROWS_AS(parse_generator({{"family", "grid"}, {"size", 3}}), ConfigError);

  const Instance back = instance_from_json(instance_to_json(aff));
  CHECK(back.name == aff.name);
  CHECK(back.mu.size() == aff.mu.size());
  CHECK(back.monge->lipschitz() == doctest::Approx(0.5));
  CHECK(*back.grid_h == 0.02);
}

TEST_CASE("cli: singleton config succeeds") {
  const fs::path p = write_config("singleton", Json{{"instance", {{"file", kConfigs + "/instances/singleton_d1.json"}}},
                                                    {"eps", {1.0, 0.1, 0.01}}});
  const Cmd c = run_cli("run -c " + p.string(), "singleton");
  CHECK(c.code == 0);
  const Json summary = read_json_file((p.parent_path() / "out/summary.json").string());
  CHECK(summary["exit_code"] == 0);
  CHECK(summary["runs"].size() == 3);
  CHECK(fs::exists(p.parent_path() / "out/reports.jsonl"));
  CHECK(fs::exists(p.parent_path() / "out/constants.svg"));
}

TEST_CASE("cli: exported two-point solution matches the oracle") {
  const fs::path p = write_config("two_point", Json{{"instance", {{"file", kConfigs + "/instances/two_point_d1.json"}}},
                                                    {"eps", {1.0, 0.1, 0.01}},
                                                    {"export", true}});
  REQUIRE(run_cli("run -c " + p.string(), "two_point").code == 0);
  const Json fx = read_json_file(kFixtures + "/two_point_oracle.json");
  const fs::path out = p.parent_path() / "out";
  for (const auto& run : fx["runs"]) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%.6e", run["epsilon"].get<double>());
    const Json pot = read_json_file((out / ("potentials_" + std::string(tag) + ".json")).string());
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(pot["f"][i].get<double>() == doctest::Approx(run["f"][i].get<double>()).epsilon(1e-6));
      CHECK(pot["g"][i].get<double>() == doctest::Approx(run["g"][i].get<double>()).epsilon(1e-6));
    }
    const Json cp = read_json_file((out / ("coupling_" + std::string(tag) + ".json")).string());
    for (const auto& e : cp["entries"]) {
      const auto i = e[0].get<std::size_t>();
      const auto j = e[1].get<std::size_t>();
      CHECK(std::abs(e[2].get<double>() - run["plan"][i][j].get<double>()) <= 1e-6);
    }
  }
  const Json exact = read_json_file((out / "exact_potentials.json").string());
  CHECK(exact["cost"].get<double>() == doctest::Approx(0.0));

  // Report values against the same fixture.
  std::istringstream lines(slurp(out / "reports.jsonl"));
  std::string line;
  int matched = 0;
  while (std::getline(lines, line)) {
    const Json r = Json::parse(line);
    for (const auto& run : fx["runs"]) {
      if (run["epsilon"] != r["epsilon"]) continue;
      if (r["bound_id"] == "DensityUB") {
        CHECK(r["lhs"].get<double>() == doctest::Approx(run["max_density_times_eps"].get<double>()).epsilon(1e-6));
        ++matched;
      } else if (r["bound_id"] == "CostSandwich") {
        CHECK(r["context"]["transport_cost"].get<double>() ==
              doctest::Approx(run["transport_cost"].get<double>()).epsilon(1e-6));
        CHECK(r["context"]["dual_value"].get<double>() == doctest::Approx(run["dual_value"].get<double>()).epsilon(1e-6));
        ++matched;
      }
    }
  }
  CHECK(matched == 6);
}

TEST_CASE("cli: invalid epsilon exits 2 with a JSON error") {
  const fs::path p = write_config("bad_eps", base_config());
  const Cmd c = run_cli("run -c " + p.string() + " --eps 0.1,0", "bad_eps");
  CHECK(c.code == 2);
  const Json err = Json::parse(c.err);
  CHECK(err["exit_code"] == 2);
  CHECK(err.contains("message"));

  CHECK(run_cli("run -c " + (kScratch / "missing.json").string(), "missing").code == 2);
  CHECK(run_cli("run", "no_config").code == 2);
}

TEST_CASE("cli: non-convergence exits 3 and archives the instance") {
  Json j = base_config();
  j["eps"] = {0.001};
  j["solver"] = {{"max_sweeps", 1}};
  const fs::path p = write_config("nonconv", j);
  const Cmd c = run_cli("run -c " + p.string(), "nonconv");
  CHECK(c.code == 3);
  CHECK(Json::parse(c.err)["exit_code"] == 3);
  const fs::path fx = p.parent_path() / "out/fixtures/nonconvergent_1.000000e-03.json";
  REQUIRE(fs::exists(fx));
  const Json archived = read_json_file(fx.string());
  CHECK(archived["epsilon"] == 0.001);
  CHECK(archived["instance"]["mu"]["atoms"].size() == 21);
}

TEST_CASE("cli: two runs write identical reports") {
  Json j = base_config();
  j["instance"] = {{"file", kConfigs + "/instances/affine_d1_h0.02_a0.5.json"}};
  j["eps"] = {0.1, 0.01, 0.001};
  j["seed"] = 5;
  j["probes"] = 50;
  const fs::path a = write_config("det_a", j);
  const fs::path b = write_config("det_b", j);
  REQUIRE(run_cli("run -c " + a.string(), "det_a").code == 0);
  REQUIRE(run_cli("run -c " + b.string(), "det_b").code == 0);
  const std::string ra = slurp(a.parent_path() / "out/reports.jsonl");
  CHECK_FALSE(ra.empty());
  CHECK(ra == slurp(b.parent_path() / "out/reports.jsonl"));
}

TEST_CASE("cli: gen writes instance files") {
  const fs::path dir = kScratch / "gen";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file((dir / "spec.json").string(),
                  R"([{"family": "grid", "d": 1, "h": 0.02}, {"family": "affine", "d": 1, "h": 0.1, "a": 2}])");
  REQUIRE(run_cli("gen -s " + (dir / "spec.json").string() + " -o " + (dir / "inst").string(), "gen").code == 0);
  const Instance g = instance_from_json(read_json_file((dir / "inst/grid_d1_h0.02.json").string()));
  CHECK(g.mu.size() == 101);
  CHECK(fs::exists(dir / "inst/affine_d1_h0.1_a2.json"));

  write_text_file((dir / "bad.json").string(), R"({"family": "grid", "d": 4})");
  CHECK(run_cli("gen -s " + (dir / "bad.json").string() + " -o " + (dir / "inst").string(), "gen_bad").code == 2);
}
