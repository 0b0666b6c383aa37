#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qotlab/exact_ot.hpp"
#include "qotlab/geometry.hpp"
#include "qotlab/measures.hpp"
#include "qotlab/qot_solver.hpp"
#include "qotlab/surrogate.hpp"

namespace qotlab {

enum class BoundId {
  DensityUB,
  CostSandwich,
  ApproxConj,
  RestrictedConj,
  SupportInclusion12,
  Concentration,
  SymUB,
  SymLB,
  GradEstimate,
  SuppDiamM,
  GeneralBias,
  BoundaryBias,
  IntegralGap,
  DiscrepancyUB,
};

inline constexpr double kBoundSlack = 1e-8;
// Pairs whose source lies farther than this multiple of the bias radius from
// the hull boundary count as interior.
inline constexpr double kBiasPartitionConstant = 0.1;

const char* to_string(BoundId id);
// Throws ConfigError on an unknown name.
BoundId parse_bound_id(const std::string& name);
const std::vector<BoundId>& all_bound_ids();

struct BoundReport {
  BoundId bound_id;
  double epsilon = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  // lhs divided by the eps-dependent factor of the bound.
  double implied_constant = 0.0;
  // True when the bound carries an explicit constant and is asserted.
  bool explicit_constant = false;
  // Set for explicit bounds only: lhs <= rhs + kBoundSlack.
  std::optional<bool> holds;
  // False when the checked set is empty (no lhs to report).
  bool defined = true;
  nlohmann::ordered_json context = nlohmann::ordered_json::object();
};

nlohmann::ordered_json to_json(const BoundReport& r);

// Orders reports by (bound id, decreasing epsilon).
void sort_reports(std::vector<BoundReport>& reports);

struct Instance {
  std::string name;
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  std::optional<MongeMap> monge;  // known grad phi, enables the bias checks
  std::optional<double> grid_h;   // lattice spacing when mu is a grid
};

// Epsilon-independent data shared by every checker.
struct PreparedInstance {
  const Instance* instance = nullptr;
  bool self_transport = false;
  SpreadProfile spread;
  double diam = 0.0;
  std::optional<ExactOTSolution> exact;
  std::optional<ConvexHull> hull;
  std::optional<double> path_length;  // shortest-path proxy at the connecting radius
  std::optional<double> connect_radius;
};

// Optional parts of the preparation. The exact plan feeds CostSandwich; hull
// and path length feed the bias checks.
struct PrepareOptions {
  bool exact = true;
  bool geometry = true;
};

PreparedInstance prepare(const Instance& inst, const PrepareOptions& opts = {});

// Everything the checkers need at one epsilon.
struct SolvedInstance {
  const PreparedInstance* prepared = nullptr;
  double epsilon = 0.0;
  SolverConfig config;
  DualPotentials pot;
  Coupling coupling;
  double delta_eps = 0.0;
  double delta_st_eps = 0.0;
  ConvexSurrogate surrogate;
  std::vector<double> psi_mu;        // psi at mu-atoms
  std::vector<double> psi_star_nu;   // psi* at nu-atoms
  std::vector<double> psi_prime_nu;  // psi' at nu-atoms
};

// With tables = false the psi tables stay empty and only the solver-side
// observables (support spread, density) are usable.
SolvedInstance solve_instance(const PreparedInstance& prep, const SolverConfig& cfg, bool tables = true);

BoundReport check_density_ub(const SolvedInstance& s);
// Needs the exact solution; returns nullopt when it is unavailable.
std::optional<BoundReport> check_cost_sandwich(const SolvedInstance& s);
// ApproxConj, RestrictedConj, SupportInclusion12.
std::vector<BoundReport> check_approx_conj(const SolvedInstance& s);
BoundReport check_concentration(const SolvedInstance& s);
// SuppDiamM, SymUB, SymLB, GradEstimate. Empty unless mu == nu.
std::vector<BoundReport> check_self_transport(const SolvedInstance& s);
// IntegralGap, DiscrepancyUB, GeneralBias, BoundaryBias. Empty without a
// known Monge map.
std::vector<BoundReport> check_bias(const SolvedInstance& s, double partition = kBiasPartitionConstant);

// Runs the checkers whose ids are listed (all when empty).
std::vector<BoundReport> run_checks(const SolvedInstance& s, const std::vector<BoundId>& ids,
                                   double partition = kBiasPartitionConstant);

// Observable of the self-transport rate: sup over the support of |x - y|.
double support_spread(const SolvedInstance& s);

// Seeded quadratic-detachment probes: x uniform in the unit ball, y a random
// convex combination of nu-atoms. Returns the number of violations.
struct ProbeSummary {
  int probes = 0;
  int violations = 0;
  double worst_margin = 0.0;  // min over probes of gap - bound
};
ProbeSummary detachment_probes(const ConvexSurrogate& s, const DiscreteMeasure& nu, int count,
                               std::uint64_t seed);

}  // namespace qotlab
