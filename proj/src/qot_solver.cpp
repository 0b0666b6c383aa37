#include "qotlab/qot_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qotlab/error.hpp"

namespace qotlab {

void SolverConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be a positive finite number");
  }
  if (!(residual_tol > 0.0)) throw ConfigError("residual_tol must be positive");
  if (max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
  if (!(support_tol >= 0.0)) throw ConfigError("support_tol must be nonnegative");
}

double solve_scalar_update(std::span<const double> thresholds, std::span<const double> weights,
                           double epsilon) {
  if (thresholds.empty()) throw ValidationError("scalar update needs at least one threshold");
  if (thresholds.size() != weights.size()) {
    throw ValidationError("thresholds and weights differ in length");
  }
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  for (double w : weights) {
    if (!(w > 0.0)) throw ValidationError("scalar update weights must be positive");
  }
  return kernels::invert_piecewise_linear(thresholds, weights, epsilon);
}

namespace {

std::span<const double> weights_of(const DiscreteMeasure& m) {
  return {m.weights().data(), m.size()};
}

struct Residuals {
  double mu;
  double nu;
};

Residuals residuals(const kernels::CostMatrix& cost, const DiscreteMeasure& mu,
                    const DiscreteMeasure& nu, const std::vector<double>& f,
                    const std::vector<double>& g, double eps, kernels::Execution exec) {
  return {kernels::block_residual(exec, cost, false, f, g, weights_of(nu), eps),
          kernels::block_residual(exec, cost, true, g, f, weights_of(mu), eps)};
}

void normalize(std::vector<double>& f, std::vector<double>& g, const DiscreteMeasure& mu,
               const DiscreteMeasure& nu, bool symmetric) {
  double mean_f = 0.0;
  double mean_g = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) mean_f += mu.weight(i) * f[i];
  for (std::size_t j = 0; j < g.size(); ++j) mean_g += nu.weight(j) * g[j];
  const double shift = 0.5 * (mean_g - mean_f);
  for (double& v : f) v += shift;
  for (double& v : g) v -= shift;
  if (symmetric) {
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double h = 0.5 * (f[k] + g[k]);
      f[k] = h;
      g[k] = h;
    }
  }
}

}  // namespace

DualPotentials solve(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SolverConfig& cfg) {
  cfg.validate();
  if (mu.dim() != nu.dim()) throw ValidationError("marginals live in different dimensions");

  const kernels::CostMatrix cost(mu, nu);
  const double eps = cfg.epsilon;
  const bool symmetric = mu.identical_to(nu);

  std::vector<double> f(mu.size(), 0.0);
  std::vector<double> g(nu.size(), 0.0);
  double target = cfg.residual_tol;
  Residuals last{0.0, 0.0};

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    kernels::update_block(cfg.execution, cost, true, f, weights_of(mu), eps, g);
    kernels::update_block(cfg.execution, cost, false, g, weights_of(nu), eps, f);
    last = residuals(cost, mu, nu, f, g, eps, cfg.execution);
    if (std::max(last.mu, last.nu) > target) continue;

    std::vector<double> fn = f;
    std::vector<double> gn = g;
    normalize(fn, gn, mu, nu, symmetric);
    const Residuals fin = residuals(cost, mu, nu, fn, gn, eps, cfg.execution);
    if (std::max(fin.mu, fin.nu) <= cfg.residual_tol) {
      DualPotentials out;
      out.f = std::move(fn);
      out.g = std::move(gn);
      out.epsilon = eps;
      out.sweeps = sweep;
      out.residual_mu = fin.mu;
      out.residual_nu = fin.nu;
      return out;
    }
    // Normalization cost us the tolerance; keep iterating from there.
    f = std::move(fn);
    g = std::move(gn);
    target *= 0.25;
  }

  std::ostringstream os;
  os << "dual solve did not converge in " << cfg.max_sweeps << " sweeps (eps=" << eps
     << ", residual=" << std::max(last.mu, last.nu) << ")";
  throw ConvergenceError(os.str(), std::max(last.mu, last.nu));
}

double evaluate_f_at(const Point& x, const DualPotentials& pot, const DiscreteMeasure& nu) {
  if (x.size() != nu.dim()) throw ValidationError("point dimension does not match nu");
  std::vector<double> s(nu.size());
  for (std::size_t j = 0; j < nu.size(); ++j) {
    s[j] = 0.5 * (x - nu.atom(j)).squaredNorm() - pot.g[j];
  }
  return solve_scalar_update(s, weights_of(nu), pot.epsilon);
}

double evaluate_g_at(const Point& y, const DualPotentials& pot, const DiscreteMeasure& mu) {
  if (y.size() != mu.dim()) throw ValidationError("point dimension does not match mu");
  std::vector<double> s(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s[i] = 0.5 * (mu.atom(i) - y).squaredNorm() - pot.f[i];
  }
  return solve_scalar_update(s, weights_of(mu), pot.epsilon);
}

std::vector<std::size_t> Coupling::row_entries(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) out.push_back(k);
  return out;
}

bool Coupling::contains(std::size_t i, std::size_t j) const {
  auto first = entries.begin() + static_cast<std::ptrdiff_t>(row_start[i]);
  auto last = entries.begin() + static_cast<std::ptrdiff_t>(row_start[i + 1]);
  auto it = std::lower_bound(first, last, j,
                             [](const CouplingEntry& e, std::size_t col) { return e.j < col; });
  return it != last && it->j == j;
}

void index_coupling(Coupling& c, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  c.rows = mu.size();
  c.cols = nu.size();
  std::sort(c.entries.begin(), c.entries.end(), [](const CouplingEntry& a, const CouplingEntry& b) {
    return a.i < b.i || (a.i == b.i && a.j < b.j);
  });
  c.row_start.assign(c.rows + 1, 0);
  c.row_sums.assign(c.rows, 0.0);
  c.col_sums.assign(c.cols, 0.0);
  for (const auto& e : c.entries) {
    ++c.row_start[e.i + 1];
    c.row_sums[e.i] += e.mass;
    c.col_sums[e.j] += e.mass;
  }
  for (std::size_t i = 0; i < c.rows; ++i) c.row_start[i + 1] += c.row_start[i];
  double worst = 0.0;
  for (std::size_t i = 0; i < c.rows; ++i) worst = std::max(worst, std::abs(c.row_sums[i] - mu.weight(i)));
  for (std::size_t j = 0; j < c.cols; ++j) worst = std::max(worst, std::abs(c.col_sums[j] - nu.weight(j)));
  c.mass_residual = worst;
}

Coupling assemble_coupling(const DualPotentials& pot, const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu, const SolverConfig& cfg) {
  if (pot.f.size() != mu.size() || pot.g.size() != nu.size()) {
    throw InconsistencyError("potentials do not match the marginals");
  }
  const double eps = pot.epsilon;
  Coupling c;
  c.epsilon = eps;
  std::vector<double> eq_row(mu.size(), 0.0);
  std::vector<double> eq_col(nu.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Point x = mu.atom(i);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const double v = pot.f[i] + pot.g[j] - 0.5 * (x - nu.atom(j)).squaredNorm();
      if (v > cfg.support_tol) {
        c.entries.push_back({i, j, mu.weight(i) * nu.weight(j) * v / eps, v / eps});
        eq_row[i] += nu.weight(j) * v;
        eq_col[j] += mu.weight(i) * v;
      }
    }
  }
  index_coupling(c, mu, nu);
  double worst = 0.0;
  for (double v : eq_row) worst = std::max(worst, std::abs(v - eps));
  for (double v : eq_col) worst = std::max(worst, std::abs(v - eps));
  c.equation_residual = worst;
  if (worst > 10.0 * cfg.residual_tol) {
    std::ostringstream os;
    os << "coupling marginal residual " << worst << " exceeds 10x the solver tolerance";
    throw InconsistencyError(os.str());
  }
  return c;
}

DensityPeak max_density(const DualPotentials& pot, const DiscreteMeasure& mu,
                        const DiscreteMeasure& nu) {
  DensityPeak best{-std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Point x = mu.atom(i);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      const double v = pot.f[i] + pot.g[j] - 0.5 * (x - nu.atom(j)).squaredNorm();
      if (v > best.value) best = {v, i, j};
    }
  }
  return best;
}

Point row_barycenter(std::size_t i, const Coupling& coupling, const DiscreteMeasure& nu) {
  if (i >= coupling.rows) throw ValidationError("row index out of range");
  double mass = 0.0;
  Point acc = Point::Zero(nu.dim());
  for (std::size_t k = coupling.row_start[i]; k < coupling.row_start[i + 1]; ++k) {
    const std::size_t j = coupling.entries[k].j;
    mass += nu.weight(j);
    acc += nu.weight(j) * nu.atom(j);
  }
  if (mass == 0.0) {
    std::ostringstream os;
    os << "row " << i << " has empty support";
    throw InconsistencyError(os.str());
  }
  return acc / mass;
}

}  // namespace qotlab
