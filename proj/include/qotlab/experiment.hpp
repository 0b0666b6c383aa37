#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qotlab/io.hpp"
#include "qotlab/rate_fit.hpp"
#include "qotlab/verify.hpp"

namespace qotlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitInternal = 4;

inline constexpr int kMaxGeneratorDim = 3;

// Instance families: "singleton", "two_point", "grid" (mu = nu lattice) and
// "affine" (lattice pushed forward by x -> a x).
struct GeneratorSpec {
  std::string family;
  std::string name;  // derived from the parameters when empty
  int dim = 1;
  double h = 0.02;
  double a = 0.5;
};

// Throws ConfigError on unknown keys or wrong types.
GeneratorSpec parse_generator(const Json& j);
// Throws ValidationError above kMaxGeneratorDim.
Instance generate_instance(const GeneratorSpec& spec);

// {"name", "mu", "nu" (defaults to mu), "monge" (optional), "grid_h" (optional)}
Instance instance_from_json(const Json& j);
Json instance_to_json(const Instance& inst);

struct ExperimentConfig {
  std::string name = "experiment";
  Json instance;  // {"file": path} | {"generate": spec} | inline instance object
  std::string base_dir = ".";  // relative paths resolve against this
  std::vector<double> eps;
  SolverConfig solver;
  // nullopt runs every checker; an empty list runs none.
  std::optional<std::vector<BoundId>> checks;
  std::string output_dir = "out";  // relative paths resolve against base_dir
  std::uint64_t seed = 0;
  int probes = 0;
  bool rate = false;
  double bias_partition = kBiasPartitionConstant;
  bool export_solutions = false;

  // Throws ConfigError.
  void validate() const;
};

// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".");

// Instance named by the config, loaded or generated.
Instance load_instance(const ExperimentConfig& cfg);

struct EpsilonSummary {
  double epsilon = 0.0;
  int sweeps = 0;
  double residual = 0.0;
  std::size_t support_size = 0;
  double support_spread = 0.0;
  std::optional<ProbeSummary> probes;
};

struct RunResult {
  std::vector<BoundReport> reports;  // sorted
  std::vector<EpsilonSummary> per_eps;
  std::optional<RateFit> rate;
  std::vector<std::string> failed;  // "bound@eps" for failed explicit checks
  int exit_code = kExitOk;
};

// Runs the sweep and writes reports.jsonl, summary.json, constants.svg and,
// with rate enabled, rates.csv, rate_summary.json and rate.svg into
// output_dir. Non-convergence archives the instance and config under
// output_dir/fixtures before the ConvergenceError propagates.
RunResult run_experiment(const ExperimentConfig& cfg);

// Writes one instance file per generator spec (object or array) into dir and
// returns the written paths.
std::vector<std::string> generate_files(const Json& spec, const std::string& dir);

// Machine-readable error line for the diagnostic stream.
Json error_record(const std::exception& e, int exit_code);
int exit_code_for(const std::exception& e);

}  // namespace qotlab
