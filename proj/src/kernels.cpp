#include "qotlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include <omp.h>

namespace qotlab::kernels {

CostMatrix::CostMatrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu)
    : rows_(mu.size()), cols_(nu.size()), by_row_(rows_ * cols_), by_col_(rows_ * cols_) {
  const auto& x = mu.atoms();
  const auto& y = nu.atoms();
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      const double c =
          0.5 * (x.row(static_cast<Eigen::Index>(i)) - y.row(static_cast<Eigen::Index>(j))).squaredNorm();
      by_row_[i * cols_ + j] = c;
      by_col_[j * rows_ + i] = c;
    }
  }
}

double invert_piecewise_linear(std::span<const double> thresholds, std::span<const double> weights,
                               double eps) {
  thread_local std::vector<std::size_t> keep;
  thread_local std::vector<std::size_t> next;
  const std::size_t n = thresholds.size();

  // Root of the all-active linear piece bounds the answer from above, so any
  // threshold at or beyond it is inactive. Two passes shrink the set a lot.
  keep.resize(n);
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  for (int pass = 0; pass < 2; ++pass) {
    double sw = 0.0;
    double sws = 0.0;
    for (std::size_t i : keep) {
      sw += weights[i];
      sws += weights[i] * thresholds[i];
    }
    const double upper = (eps + sws) / sw;
    next.clear();
    for (std::size_t i : keep) {
      if (thresholds[i] < upper) next.push_back(i);
    }
    if (next.size() == keep.size()) break;
    keep.swap(next);
  }

  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    return thresholds[a] < thresholds[b] || (thresholds[a] == thresholds[b] && a < b);
  });
  double sw = 0.0;
  double sws = 0.0;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    sw += weights[keep[k]];
    sws += weights[keep[k]] * thresholds[keep[k]];
    const double t = (eps + sws) / sw;
    if (k + 1 == keep.size() || t <= thresholds[keep[k + 1]]) return t;
  }
  return thresholds[keep.front()] + eps / weights[keep.front()];
}

namespace {

inline double line_update(const CostMatrix& cost, bool by_columns, std::size_t k,
                          std::span<const double> other, std::span<const double> w, double eps,
                          std::vector<double>& scratch) {
  const auto line = by_columns ? cost.col(k) : cost.row(k);
  scratch.resize(line.size());
  for (std::size_t l = 0; l < line.size(); ++l) scratch[l] = line[l] - other[l];
  return invert_piecewise_linear(scratch, w, eps);
}

inline double line_residual(const CostMatrix& cost, bool by_columns, std::size_t k, double own,
                            std::span<const double> other, std::span<const double> w, double eps) {
  const auto line = by_columns ? cost.col(k) : cost.row(k);
  double acc = 0.0;
  for (std::size_t l = 0; l < line.size(); ++l) {
    const double v = own + other[l] - line[l];
    if (v > 0.0) acc += w[l] * v;
  }
  return acc - eps;
}

}  // namespace

void update_block(Execution exec, const CostMatrix& cost, bool by_columns,
                  std::span<const double> other, std::span<const double> other_weights, double eps,
                  std::span<double> out) {
  const long count = static_cast<long>(out.size());
  if (exec == Execution::serial) {
    std::vector<double> scratch;
    for (long k = 0; k < count; ++k) {
      out[static_cast<std::size_t>(k)] =
          line_update(cost, by_columns, static_cast<std::size_t>(k), other, other_weights, eps, scratch);
    }
    return;
  }
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (long k = 0; k < count; ++k) {
      out[static_cast<std::size_t>(k)] =
          line_update(cost, by_columns, static_cast<std::size_t>(k), other, other_weights, eps, scratch);
    }
  }
}

std::vector<double> block_residuals(Execution exec, const CostMatrix& cost, bool by_columns,
                                    std::span<const double> own, std::span<const double> other,
                                    std::span<const double> other_weights, double eps) {
  const long count = static_cast<long>(own.size());
  std::vector<double> r(own.size());
  if (exec == Execution::serial) {
    for (long k = 0; k < count; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      r[kk] = line_residual(cost, by_columns, kk, own[kk], other, other_weights, eps);
    }
    return r;
  }
#pragma omp parallel for schedule(static)
  for (long k = 0; k < count; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    r[kk] = line_residual(cost, by_columns, kk, own[kk], other, other_weights, eps);
  }
  return r;
}

double block_residual(Execution exec, const CostMatrix& cost, bool by_columns,
                      std::span<const double> own, std::span<const double> other,
                      std::span<const double> other_weights, double eps) {
  const auto r = block_residuals(exec, cost, by_columns, own, other, other_weights, eps);
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v));
  return worst;
}

int thread_count() { return omp_get_max_threads(); }

int apply_thread_env() {
  if (const char* env = std::getenv("QOTLAB_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) omp_set_num_threads(std::min(cap, omp_get_num_procs()));
    } catch (const std::exception&) {
      // unparsable value: keep the OpenMP default
    }
  }
  return omp_get_max_threads();
}

}  // namespace qotlab::kernels
