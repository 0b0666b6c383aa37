#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace qotlab {

inline constexpr double kKktTolerance = 1e-10;

struct SimplexQPResult {
  std::vector<std::size_t> support;  // indices with theta_j > 0, ascending
  std::vector<double> theta;         // matching weights
  Eigen::VectorXd z;                 // Y theta
  double objective = 0.0;            // (lambda/2)|Y theta|^2 - <x, Y theta> + b^T theta
  double kkt_residual = 0.0;
  int iterations = 0;
};

// min over the probability simplex of
//   (lambda/2) |Y theta|^2 - <x, Y theta> + b^T theta,
// with Y the d x m matrix whose columns are the slopes. Primal active-set
// method; the Hessian lambda Y^T Y has rank <= d, so singular reduced
// problems move along a zero-curvature descent direction until a bound
// blocks. Ties are broken by lowest index. Throws ConvergenceError carrying
// the KKT residual when the iteration budget runs out.
SimplexQPResult solve_simplex_qp(const Eigen::MatrixXd& Y, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& x, double lambda,
                                 double tol = kKktTolerance);

}  // namespace qotlab
