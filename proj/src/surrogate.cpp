#include "qotlab/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qotlab/error.hpp"
#include "qotlab/hull_lp.hpp"
#include "qotlab/simplex_qp.hpp"

namespace qotlab {

ConvexSurrogate build_surrogate(const DualPotentials& pot, const DiscreteMeasure& nu, double delta_eps) {
  if (!(delta_eps > 0.0)) throw ValidationError("delta(eps) must be positive");
  if (pot.g.size() != nu.size()) throw ValidationError("potentials do not match nu");
  ConvexSurrogate s;
  s.slopes = nu.atoms().transpose();
  s.intercepts.resize(static_cast<Eigen::Index>(nu.size()));
  for (std::size_t j = 0; j < nu.size(); ++j) {
    s.intercepts[static_cast<Eigen::Index>(j)] = 0.5 * nu.atom(j).squaredNorm() - pot.g[j];
  }
  s.lambda = 2.0 * delta_eps;
  s.delta_eps = delta_eps;
  return s;
}

double eval_psi_tilde(const ConvexSurrogate& s, const Point& x) {
  if (x.size() != s.dim()) throw ValidationError("point dimension does not match the surrogate");
  return (s.slopes.transpose() * x - s.intercepts).maxCoeff();
}

PsiValue eval_psi(const ConvexSurrogate& s, const Point& x) {
  if (x.size() != s.dim()) throw ValidationError("point dimension does not match the surrogate");
  const SimplexQPResult r = solve_simplex_qp(s.slopes, s.intercepts, x, s.lambda);
  return {-r.objective, r.z};
}

double eval_psi_star(const ConvexSurrogate& s, const Point& y) {
  if (y.size() != s.dim()) throw ValidationError("point dimension does not match the surrogate");
  const double base = hull_lp_min(s.slopes, s.intercepts, y);
  if (std::isinf(base)) return base;
  return base + 0.5 * s.lambda * y.squaredNorm();
}

double eval_psi_prime(const DiscreteMeasure& mu, const std::vector<double>& psi_at_mu, const Point& y) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) best = std::max(best, mu.atom(i).dot(y) - psi_at_mu[i]);
  return best;
}

double eval_psi_prime(const ConvexSurrogate& s, const DiscreteMeasure& mu, const Point& y) {
  std::vector<double> psi(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) psi[i] = eval_psi(s, mu.atom(i)).value;
  return eval_psi_prime(mu, psi, y);
}

MintyPoint minty_reflect(const ConvexSurrogate& s, const Point& u) {
  if (u.size() != s.dim()) throw ValidationError("point dimension does not match the surrogate");
  // prox of the envelope with unit step is u - Y theta, theta from the
  // simplex problem with parameter lambda + 1.
  const SimplexQPResult r = solve_simplex_qp(s.slopes, s.intercepts, u, s.lambda + 1.0);
  MintyPoint out;
  out.x_prime = u - r.z;
  out.gradient = r.z;
  out.reflection = 2.0 * out.x_prime - u;
  const Point check = eval_psi(s, out.x_prime).gradient;
  out.residual = (out.x_prime + check - u).norm();
  if (out.residual > kMintyTolerance) {
    std::ostringstream os;
    os << "resolvent residual " << out.residual << " exceeds " << kMintyTolerance;
    throw ConvergenceError(os.str(), out.residual);
  }
  return out;
}

std::optional<Detachment> quadratic_detachment(const ConvexSurrogate& s, const Point& x, const Point& y) {
  const double conj = eval_psi_star(s, y);
  if (std::isinf(conj)) return std::nullopt;
  const MintyPoint mp = minty_reflect(s, x + y);
  Detachment d;
  d.gap = eval_psi(s, x).value + conj - x.dot(y);
  d.lower_bound = 0.25 * (x - y - mp.reflection).squaredNorm();
  d.key_bound = (x - mp.x_prime).squaredNorm();
  d.holds = d.gap >= std::max(d.lower_bound, d.key_bound) - 1e-8;
  return d;
}

std::string probe_trace_csv(const ConvexSurrogate& s, const PointList& probes) {
  std::ostringstream os;
  os.precision(17);
  const int d = s.dim();
  for (int k = 0; k < d; ++k) os << "x" << k + 1 << ',';
  os << "psi";
  for (int k = 0; k < d; ++k) os << ",dpsi" << k + 1;
  os << '\n';
  for (const auto& x : probes) {
    const PsiValue v = eval_psi(s, x);
    for (int k = 0; k < d; ++k) os << x[k] << ',';
    os << v.value;
    for (int k = 0; k < d; ++k) os << ',' << v.gradient[k];
    os << '\n';
  }
  return os.str();
}

}  // namespace qotlab
