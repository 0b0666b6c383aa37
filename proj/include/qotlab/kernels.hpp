#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qotlab/measures.hpp"

// Data-parallel inner loops of the dual solver. Every kernel exists twice: a
// plain serial loop kept as the reference, and an OpenMP version. Per-atom
// work is independent and written to its own slot, so both produce bitwise
// identical output.
namespace qotlab::kernels {

enum class Execution { serial, parallel };

// Quadratic cost c(x, y) = |x - y|^2 / 2 between two atom sets, stored both
// row-major and column-major so each half-sweep reads contiguous memory.
class CostMatrix {
 public:
  CostMatrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return by_row_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {by_row_.data() + i * cols_, cols_}; }
  std::span<const double> col(std::size_t j) const { return {by_col_.data() + j * rows_, rows_}; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> by_row_;
  std::vector<double> by_col_;
};

// Unique t with sum_i w_i (t - s_i)_+ = eps. Exact: prunes thresholds that
// cannot be active, sorts the rest, then inverts the active linear piece.
// Preconditions (checked by the public wrapper): nonempty, w_i > 0, eps > 0.
double invert_piecewise_linear(std::span<const double> thresholds, std::span<const double> weights,
                               double eps);

// out[k] = t solving sum_l w_l [other_l + t - c(k, l)]_+ = eps for every k,
// where c(k, .) is cost_line(k). Used for both half-sweeps.
void update_block(Execution exec, const CostMatrix& cost, bool by_columns,
                  std::span<const double> other, std::span<const double> other_weights, double eps,
                  std::span<double> out);

// max_k | sum_l w_l [own_k + other_l - c(k, l)]_+ - eps |
double block_residual(Execution exec, const CostMatrix& cost, bool by_columns,
                      std::span<const double> own, std::span<const double> other,
                      std::span<const double> other_weights, double eps);

// Same residual, one entry per atom.
std::vector<double> block_residuals(Execution exec, const CostMatrix& cost, bool by_columns,
                                    std::span<const double> own, std::span<const double> other,
                                    std::span<const double> other_weights, double eps);

// Thread count the parallel kernels will use.
int thread_count();

// Caps OpenMP parallelism from QOTLAB_THREADS when set. Returns the cap in effect.
int apply_thread_env();

}  // namespace qotlab::kernels
