#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qotlab/kernels.hpp"
#include "qotlab/measures.hpp"

namespace qotlab {

struct SolverConfig {
  double epsilon = 0.1;
  int max_sweeps = 10000;
  // Sup-norm tolerance on both marginal-equation residual vectors.
  double residual_tol = 1e-10;
  // A pair is in the support when f_i + g_j - c_ij > support_tol.
  double support_tol = 0.0;
  kernels::Execution execution = kernels::Execution::parallel;

  // Throws ConfigError.
  void validate() const;
};

inline constexpr const char* kEqualMeansNormalization = "equal-means";
inline constexpr const char* kKantorovichNormalization = "kantorovich";

// Per-atom dual potentials. With the equal-means convention
// sum_i mu_i f_i = sum_j nu_j g_j, and f == g bitwise when mu == nu.
struct DualPotentials {
  std::vector<double> f;
  std::vector<double> g;
  double epsilon = 0.0;
  std::string normalization = kEqualMeansNormalization;
  int sweeps = 0;
  // Final sup-norm residuals of the mu-side and nu-side equations.
  double residual_mu = 0.0;
  double residual_nu = 0.0;

  double residual() const { return residual_mu > residual_nu ? residual_mu : residual_nu; }
};

// Alternating exact block updates on the dual system
//   sum_i mu_i [f_i + g_j - c_ij]_+ = eps  for every j,
//   sum_j nu_j [f_i + g_j - c_ij]_+ = eps  for every i.
// Throws ConfigError for a bad config and ConvergenceError (carrying the last
// residual) when max_sweeps is exhausted.
DualPotentials solve(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SolverConfig& cfg);

// Unique t with sum_i w_i (t - s_i)_+ = eps. Throws ValidationError on empty or
// mismatched input, nonpositive weights or eps <= 0.
double solve_scalar_update(std::span<const double> thresholds, std::span<const double> weights,
                           double epsilon);

// f_eps(x) at an arbitrary point, from the nu-side equation.
double evaluate_f_at(const Point& x, const DualPotentials& pot, const DiscreteMeasure& nu);
// g_eps(y) at an arbitrary point, from the mu-side equation.
double evaluate_g_at(const Point& y, const DualPotentials& pot, const DiscreteMeasure& mu);

struct CouplingEntry {
  std::size_t i;
  std::size_t j;
  double mass;
  // d pi / d(mu x nu); zero for exact (unregularized) couplings.
  double density;
};

struct Coupling {
  std::optional<double> epsilon;  // empty for the unregularized plan
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<CouplingEntry> entries;  // support only, ordered by (i, j)
  std::vector<std::size_t> row_start;  // CSR offsets into entries, size rows + 1
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  // Largest |row_i - mu_i| and |col_j - nu_j|.
  double mass_residual = 0.0;
  // Marginal-equation residual in dual units: max over atoms of
  // |eps * marginal / weight - eps|. Zero for exact couplings.
  double equation_residual = 0.0;

  // Entries of row i, as indices into `entries`.
  std::vector<std::size_t> row_entries(std::size_t i) const;
  bool contains(std::size_t i, std::size_t j) const;
  std::size_t support_size() const { return entries.size(); }
};

// Sorts entries, builds the row index and recomputes marginal sums and the
// mass residual against mu and nu.
void index_coupling(Coupling& coupling, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// pi_ij = mu_i nu_j [f_i + g_j - c_ij]_+ / eps on the support. Throws
// InconsistencyError if the recomputed equation residual exceeds
// 10 * residual_tol.
Coupling assemble_coupling(const DualPotentials& pot, const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu, const SolverConfig& cfg);

struct DensityPeak {
  double value;  // sup_ij [f_i + g_j - c_ij] = eps * sup density
  std::size_t i;
  std::size_t j;
};

DensityPeak max_density(const DualPotentials& pot, const DiscreteMeasure& mu,
                        const DiscreteMeasure& nu);

// Conditional barycenter of the nu-atoms supported in row i.
// Throws InconsistencyError on an empty row.
Point row_barycenter(std::size_t i, const Coupling& coupling, const DiscreteMeasure& nu);

}  // namespace qotlab
