#include "qotlab/hull_lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "qotlab/error.hpp"

namespace qotlab {

namespace {

constexpr double kPivotTol = 1e-12;

struct Tableau {
  Eigen::MatrixXd t;  // constraint rows, then the reduced-cost row; rhs in the last column
  std::vector<Eigen::Index> basis;
  Eigen::Index rows;
  Eigen::Index rhs;

  void pivot(Eigen::Index r, Eigen::Index c) {
    t.row(r) /= t(r, c);
    for (Eigen::Index i = 0; i <= rows; ++i) {
      if (i != r && t(i, c) != 0.0) t.row(i) -= t(i, c) * t.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
  }

  // Bland's rule over columns [0, ncols). Returns false on an unbounded ray.
  bool run(Eigen::Index ncols) {
    for (int guard = 0; guard < 100000; ++guard) {
      Eigen::Index enter = -1;
      for (Eigen::Index c = 0; c < ncols; ++c) {
        if (t(rows, c) < -kPivotTol) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (t(i, enter) > kPivotTol) {
          const double ratio = t(i, rhs) / t(i, enter);
          if (ratio < best || (ratio == best && basis[static_cast<std::size_t>(i)] <
                                                    basis[static_cast<std::size_t>(leave)])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw InconsistencyError("hull LP exceeded its pivot budget");
  }
};

}  // namespace

double hull_lp_min(const Eigen::MatrixXd& Y, const Eigen::VectorXd& b, const Eigen::VectorXd& y,
                   double feas_tol) {
  const Eigen::Index d = Y.rows();
  const Eigen::Index m = Y.cols();
  if (b.size() != m || y.size() != d) throw ValidationError("hull LP dimensions disagree");
  const Eigen::Index r = d + 1;

  Tableau tab;
  tab.rows = r;
  tab.rhs = m + r;
  tab.t = Eigen::MatrixXd::Zero(r + 1, m + r + 1);
  tab.basis.resize(static_cast<std::size_t>(r));
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) tab.t(i, j) = i < d ? Y(i, j) : 1.0;
    tab.t(i, tab.rhs) = i < d ? y[i] : 1.0;
    if (tab.t(i, tab.rhs) < 0.0) tab.t.row(i) *= -1.0;
    tab.t(i, m + i) = 1.0;
    tab.basis[static_cast<std::size_t>(i)] = m + i;
  }
  // Phase one: minimize the sum of artificials.
  for (Eigen::Index i = 0; i < r; ++i) {
    tab.t.row(r).head(m) -= tab.t.row(i).head(m);
    tab.t(r, tab.rhs) -= tab.t(i, tab.rhs);
  }
  tab.run(m + r);
  if (-tab.t(r, tab.rhs) > feas_tol) return std::numeric_limits<double>::infinity();

  // Drive remaining artificials out of the basis; rows where that fails are redundant.
  for (Eigen::Index i = 0; i < r; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < m) continue;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::abs(tab.t(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
    }
  }

  // Phase two on the original columns only.
  tab.t.row(r).setZero();
  tab.t.row(r).head(m) = b.transpose();
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index bj = tab.basis[static_cast<std::size_t>(i)];
    if (bj < m) {
      tab.t.row(r) -= b[bj] * tab.t.row(i);
    }
  }
  if (!tab.run(m)) throw InconsistencyError("hull LP is unbounded");
  double value = 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index bj = tab.basis[static_cast<std::size_t>(i)];
    if (bj < m) value += b[bj] * tab.t(i, tab.rhs);
  }
  return value;
}

}  // namespace qotlab
