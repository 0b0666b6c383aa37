#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qotlab/measures.hpp"
#include "qotlab/qot_solver.hpp"

namespace qotlab {

inline constexpr std::size_t kExactAtomCap = 5000;
// Costs are rounded to integers at this resolution before the flow solve.
inline constexpr double kExactCostScale = 1e12;

// Unregularized optimal plan with Kantorovich potentials.
struct ExactOTSolution {
  Coupling coupling;  // density field unused
  double cost = 0.0;  // C(mu, nu) = sum pi_ij c_ij
  std::vector<double> f_star;
  std::vector<double> g_star;
  int augmentations = 0;
};

// Min-cost flow on the bipartite atom graph by successive shortest paths with
// Dijkstra on reduced costs. Ties are broken by lowest node index.
// Throws ValidationError above the atom cap.
ExactOTSolution solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            std::size_t atom_cap = kExactAtomCap);

// Tabulated Monge map when every row of the plan has a single support entry,
// nullopt otherwise. Potentials are phi_i = |x_i|^2 / 2 - f*_i.
std::optional<MongeMap> monge_from_solution(const ExactOTSolution& sol, const DiscreteMeasure& mu,
                                            const DiscreteMeasure& nu);

}  // namespace qotlab
