#pragma once

#include <string>
#include <vector>

namespace qotlab {

// Least-squares line through (log eps, log value).
struct RateFit {
  std::vector<double> eps_grid;
  std::vector<double> observable;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Needs at least 4 points, a strictly decreasing grid and positive values.
// Throws ValidationError otherwise. A constant observable has r_squared 1.
RateFit fit_rate(const std::vector<double>& eps_grid, const std::vector<double>& observable);

// Grid spacing must satisfy h <= (min eps)^{1/(d+2)} / 5 for a rate sweep.
// Throws ValidationError naming the offending values.
void check_discretization_floor(double h, int d, double min_eps);

// "epsilon,observable" rows.
std::string rate_csv(const RateFit& fit);

}  // namespace qotlab
