#include "qotlab/rate_fit.hpp"

#include <cmath>
#include <sstream>

#include "qotlab/error.hpp"

namespace qotlab {

RateFit fit_rate(const std::vector<double>& eps_grid, const std::vector<double>& observable) {
  if (eps_grid.size() != observable.size()) throw ValidationError("grid and observable differ in length");
  if (eps_grid.size() < 4) throw ValidationError("rate fit needs at least 4 points");
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    if (!(eps_grid[k] > 0.0)) throw ValidationError("rate fit needs positive epsilon values");
    if (!(observable[k] > 0.0)) throw ValidationError("rate fit needs positive observations");
    if (k > 0 && !(eps_grid[k] < eps_grid[k - 1])) {
      throw ValidationError("rate fit needs a strictly decreasing epsilon grid");
    }
  }
  const auto n = static_cast<double>(eps_grid.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    mx += std::log(eps_grid[k]);
    my += std::log(observable[k]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    const double dx = std::log(eps_grid[k]) - mx;
    const double dy = std::log(observable[k]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateFit fit;
  fit.eps_grid = eps_grid;
  fit.observable = observable;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

void check_discretization_floor(double h, int d, double min_eps) {
  const double limit = std::pow(min_eps, 1.0 / (d + 2)) / 5.0;
  if (h > limit) {
    std::ostringstream os;
    os << "grid spacing h=" << h << " is above the discretization floor " << limit
       << " for d=" << d << " and min eps=" << min_eps;
    throw ValidationError(os.str());
  }
}

std::string rate_csv(const RateFit& fit) {
  std::ostringstream os;
  os.precision(17);
  os << "epsilon,observable\n";
  for (std::size_t k = 0; k < fit.eps_grid.size(); ++k) os << fit.eps_grid[k] << ',' << fit.observable[k] << '\n';
  return os.str();
}

}  // namespace qotlab
