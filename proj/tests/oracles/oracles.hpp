#pragma once

// Slow, independent reference computations used only by the tests.

#include <Eigen/Dense>

#include "qotlab/measures.hpp"

namespace oracle {

using qotlab::DiscreteMeasure;

// Primal QOT plan by projected gradient on the density p = d pi / d(mu x nu):
// minimize sum mu_i nu_j (c_ij p_ij + eps/2 p_ij^2) over the transport
// polytope, with the projection done by Dykstra's alternating method.
// Returns pi as a dense n x m matrix.
Eigen::MatrixXd qot_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps);

struct Potentials {
  Eigen::VectorXd f;
  Eigen::VectorXd g;
};
// Potentials read off the plan: f_i + g_j = eps p_ij + c_ij on the support,
// with sum mu f = sum nu g, and f = g when mu == nu. Least squares, so the
// support graph must be connected unless the self-transport rows fix it.
Potentials plan_potentials(const Eigen::MatrixXd& pi, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           double eps);

// Optimal cost for equal-weight marginals of the same size, by trying every
// permutation (n <= 8).
double assignment_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// min over the simplex of (lambda/2)|Y t|^2 - <x, Y t> + b.t by accelerated
// projected gradient.
struct SimplexMin {
  double objective;
  Eigen::VectorXd z;  // Y t
};
SimplexMin simplex_min(const Eigen::MatrixXd& Y, const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                       double lambda);

// min b.t over {t in simplex, Y t = y} by enumerating supports of size <= d + 1.
// +infinity when infeasible. d <= 2.
double hull_min(const Eigen::MatrixXd& Y, const Eigen::VectorXd& b, const Eigen::VectorXd& y);

// rho(r) with open balls, by double loop.
double rho(const DiscreteMeasure& mu, double r);
// inf{r > 0 : r rho(r) > eps} (squared = false) or inf{r > 0 : r rho(sqrt r) > eps},
// by bisection.
double delta(const DiscreteMeasure& mu, double eps, bool squared = false);

// Largest all-pairs shortest path when atoms within radius are joined.
// Infinity when disconnected.
double floyd_warshall_diameter(const DiscreteMeasure& mu, double radius);

}  // namespace oracle
