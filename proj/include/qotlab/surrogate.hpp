#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qotlab/measures.hpp"
#include "qotlab/qot_solver.hpp"

namespace qotlab {

inline constexpr double kMintyTolerance = 1e-8;

// psi~(x) = max_j <x, y_j> - b_j with b_j = |y_j|^2/2 - g_j, and its Moreau
// envelope psi with parameter lambda.
struct ConvexSurrogate {
  Eigen::MatrixXd slopes;      // d x m, columns are the nu-atoms
  Eigen::VectorXd intercepts;  // b_j
  double lambda = 0.0;
  double delta_eps = 0.0;

  int dim() const { return static_cast<int>(slopes.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(slopes.cols()); }
};

// lambda = 2 delta_eps, so the envelope gap lambda/2 equals delta_eps.
ConvexSurrogate build_surrogate(const DualPotentials& pot, const DiscreteMeasure& nu, double delta_eps);

double eval_psi_tilde(const ConvexSurrogate& s, const Point& x);

struct PsiValue {
  double value;
  Point gradient;
};

// Envelope value and gradient through the simplex dual of the prox problem.
PsiValue eval_psi(const ConvexSurrogate& s, const Point& x);

// psi*(y) = psi~*(y) + (lambda/2)|y|^2. +infinity outside the hull of slopes.
double eval_psi_star(const ConvexSurrogate& s, const Point& y);

// psi'(y) = max over mu-atoms of <x_i, y> - psi(x_i).
double eval_psi_prime(const ConvexSurrogate& s, const DiscreteMeasure& mu, const Point& y);
// Same, with psi already tabulated at the mu-atoms.
double eval_psi_prime(const DiscreteMeasure& mu, const std::vector<double>& psi_at_mu, const Point& y);

struct MintyPoint {
  Point x_prime;     // solves x' + grad psi(x') = u
  Point gradient;    // grad psi(x')
  Point reflection;  // F(u) = x' - grad psi(x') = 2 x' - u
  double residual;   // |x' + grad psi(x') - u| with the gradient re-evaluated at x'
};

// Resolvent of grad psi. Throws ConvergenceError when the residual exceeds
// kMintyTolerance.
MintyPoint minty_reflect(const ConvexSurrogate& s, const Point& u);

struct Detachment {
  double gap;          // psi(x) + psi*(y) - <x, y>
  double lower_bound;  // |x - y - F(x + y)|^2 / 4
  double key_bound;    // |x - x'|^2 with x' + grad psi(x') = x + y
  bool holds;          // gap >= max(lower_bound, key_bound) - 1e-8
};

// nullopt when psi*(y) is infinite.
std::optional<Detachment> quadratic_detachment(const ConvexSurrogate& s, const Point& x, const Point& y);

// CSV rows (x_1..x_d, psi, dpsi_1..dpsi_d) at the probe points.
std::string probe_trace_csv(const ConvexSurrogate& s, const PointList& probes);

}  // namespace qotlab
