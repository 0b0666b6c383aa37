#pragma once

#include <Eigen/Dense>

namespace qotlab {

// min b^T theta  s.t.  Y theta = y, sum theta = 1, theta >= 0.
// Dense two-phase simplex with Bland's rule. Returns +infinity when y lies
// outside the convex hull of the columns of Y (phase one optimum above
// feas_tol).
double hull_lp_min(const Eigen::MatrixXd& Y, const Eigen::VectorXd& b, const Eigen::VectorXd& y,
                   double feas_tol = 1e-9);

}  // namespace qotlab
