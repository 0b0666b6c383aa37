#include "qotlab/exact_ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "qotlab/error.hpp"

namespace qotlab {

namespace {

constexpr double kMassFloor = 1e-15;
constexpr std::int64_t kUnreached = std::numeric_limits<std::int64_t>::max();

}  // namespace

ExactOTSolution solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            std::size_t atom_cap) {
  if (mu.dim() != nu.dim()) throw ValidationError("marginals live in different dimensions");
  if (mu.size() > atom_cap || nu.size() > atom_cap) {
    std::ostringstream os;
    os << "exact solver is capped at " << atom_cap << " atoms per marginal";
    throw ValidationError(os.str());
  }
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  const std::size_t nodes = n + m;

  std::vector<double> cost(n * m);
  std::vector<std::int64_t> icost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = 0.5 * (mu.atom(i) - nu.atom(j)).squaredNorm();
      cost[i * m + j] = c;
      icost[i * m + j] = std::llround(c * kExactCostScale);
    }
  }

  std::vector<double> supply(mu.weights().data(), mu.weights().data() + n);
  std::vector<double> demand(nu.weights().data(), nu.weights().data() + m);
  std::vector<double> flow(n * m, 0.0);
  // Node potentials: sources 0..n-1, sinks n..n+m-1.
  std::vector<std::int64_t> pot(nodes, 0);
  std::vector<std::int64_t> dist(nodes);
  std::vector<std::size_t> parent(nodes);
  std::vector<char> done(nodes);

  ExactOTSolution sol;
  const std::size_t max_aug = 4 * (n + 1) * (m + 1) + 16;

  while (true) {
    bool any_supply = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (supply[i] > kMassFloor) {
        any_supply = true;
        break;
      }
    }
    if (!any_supply) break;
    if (static_cast<std::size_t>(sol.augmentations) > max_aug) {
      throw InconsistencyError("exact solver exceeded its augmentation budget");
    }

    std::fill(dist.begin(), dist.end(), kUnreached);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (supply[i] > kMassFloor) {
        dist[i] = 0;
        parent[i] = i;
      }
    }

    // Dense Dijkstra; strict comparisons give lowest-index tie breaking.
    for (std::size_t step = 0; step < nodes; ++step) {
      std::size_t u = nodes;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] != kUnreached && (u == nodes || dist[v] < dist[u])) u = v;
      }
      if (u == nodes) break;
      done[u] = 1;
      if (u < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t v = n + j;
          if (done[v]) continue;
          const std::int64_t nd = dist[u] + icost[u * m + j] + pot[u] - pot[v];
          if (nd < dist[v]) {
            dist[v] = nd;
            parent[v] = u;
          }
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (done[i] || flow[i * m + j] <= 0.0) continue;
          const std::int64_t nd = dist[u] - icost[i * m + j] + pot[u] - pot[i];
          if (nd < dist[i]) {
            dist[i] = nd;
            parent[i] = u;
          }
        }
      }
    }

    std::size_t target = nodes;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t v = n + j;
      if (demand[j] > kMassFloor && dist[v] != kUnreached &&
          (target == nodes || dist[v] < dist[target])) {
        target = v;
      }
    }
    if (target == nodes) throw InconsistencyError("exact solver found no augmenting path");

    const std::int64_t cap = dist[target];
    for (std::size_t v = 0; v < nodes; ++v) pot[v] += std::min(dist[v], cap);

    // Bottleneck along the path back to a source; reverse arcs end at sources.
    double delta = demand[target - n];
    std::size_t source = target;
    while (source >= n || parent[source] != source) {
      const std::size_t u = parent[source];
      if (source < n) delta = std::min(delta, flow[source * m + (u - n)]);
      source = u;
    }
    delta = std::min(delta, supply[source]);

    for (std::size_t v = target; v != source;) {
      const std::size_t u = parent[v];
      if (v >= n) {
        flow[u * m + (v - n)] += delta;  // forward arc u -> v
      } else {
        flow[v * m + (u - n)] -= delta;  // reverse arc u (sink) -> v (source)
        if (flow[v * m + (u - n)] < kMassFloor * 1e-3) flow[v * m + (u - n)] = 0.0;
      }
      v = u;
    }
    supply[source] -= delta;
    demand[target - n] -= delta;
    ++sol.augmentations;
  }

  sol.f_star.resize(n);
  sol.g_star.resize(m);
  for (std::size_t i = 0; i < n; ++i) sol.f_star[i] = -static_cast<double>(pot[i]) / kExactCostScale;
  for (std::size_t j = 0; j < m; ++j) sol.g_star[j] = static_cast<double>(pot[n + j]) / kExactCostScale;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double q = flow[i * m + j];
      if (q > 0.0) {
        sol.coupling.entries.push_back({i, j, q, 0.0});
        sol.cost += q * cost[i * m + j];
      }
    }
  }
  index_coupling(sol.coupling, mu, nu);
  return sol;
}

std::optional<MongeMap> monge_from_solution(const ExactOTSolution& sol, const DiscreteMeasure& mu,
                                            const DiscreteMeasure& nu) {
  const Coupling& c = sol.coupling;
  if (c.rows != mu.size() || c.cols != nu.size()) {
    throw ValidationError("solution does not match the marginals");
  }
  Eigen::MatrixXd images(static_cast<Eigen::Index>(mu.size()), mu.dim());
  std::vector<double> phi(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (c.row_start[i + 1] - c.row_start[i] != 1) return std::nullopt;
    const std::size_t j = c.entries[c.row_start[i]].j;
    images.row(static_cast<Eigen::Index>(i)) = nu.atoms().row(static_cast<Eigen::Index>(j));
    phi[i] = 0.5 * mu.atom(i).squaredNorm() - sol.f_star[i];
  }
  return MongeMap::tabulated(mu.atoms(), images, std::move(phi));
}

}  // namespace qotlab
