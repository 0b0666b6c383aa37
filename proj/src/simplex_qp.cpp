#include "qotlab/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qotlab/error.hpp"

namespace qotlab {

namespace {

struct Multipliers {
  double nu;          // multiplier of sum theta = 1
  double free_resid;  // max |g_j - nu| over the free set
  double worst;       // most negative g_j - nu over the bound set
  std::size_t entering;
};

Multipliers multipliers(const Eigen::VectorXd& g, const std::vector<std::size_t>& free,
                        const std::vector<char>& is_free) {
  Multipliers m{0.0, 0.0, 0.0, g.size() == 0 ? 0 : static_cast<std::size_t>(g.size())};
  for (std::size_t j : free) m.nu += g[static_cast<Eigen::Index>(j)];
  m.nu /= static_cast<double>(free.size());
  for (std::size_t j : free) m.free_resid = std::max(m.free_resid, std::abs(g[static_cast<Eigen::Index>(j)] - m.nu));
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (is_free[static_cast<std::size_t>(j)]) continue;
    const double v = g[j] - m.nu;
    if (v < m.worst) {
      m.worst = v;
      m.entering = static_cast<std::size_t>(j);
    }
  }
  return m;
}

}  // namespace

SimplexQPResult solve_simplex_qp(const Eigen::MatrixXd& Y, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& x, double lambda, double tol) {
  const Eigen::Index d = Y.rows();
  const Eigen::Index m = Y.cols();
  if (m == 0) throw ValidationError("simplex QP needs at least one slope");
  if (b.size() != m || x.size() != d) throw ValidationError("simplex QP dimensions disagree");
  if (!(lambda > 0.0)) throw ValidationError("simplex QP needs lambda > 0");

  // Start at the best vertex.
  std::size_t start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j) {
    const double v = 0.5 * lambda * Y.col(j).squaredNorm() - x.dot(Y.col(j)) + b[j];
    if (v < best) {
      best = v;
      start = static_cast<std::size_t>(j);
    }
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  theta[static_cast<Eigen::Index>(start)] = 1.0;
  std::vector<std::size_t> free{start};
  std::vector<char> is_free(static_cast<std::size_t>(m), 0);
  is_free[start] = 1;

  const int budget = static_cast<int>(10 * (m + d) + 100);
  SimplexQPResult out;
  Eigen::VectorXd z(d);
  Eigen::VectorXd g(m);
  Multipliers mult{};
  bool subproblem_solved = false;

  for (int iter = 0; iter < budget; ++iter) {
    out.iterations = iter + 1;
    z.setZero();
    for (std::size_t j : free) z += theta[static_cast<Eigen::Index>(j)] * Y.col(static_cast<Eigen::Index>(j));
    g = Y.transpose() * (lambda * z - x) + b;
    mult = multipliers(g, free, is_free);

    // Low curvature turns small gradient errors into large errors in z, so
    // the working set is settled at roundoff level, not at tol.
    const double tight = 1e-15 * (1.0 + g.cwiseAbs().maxCoeff());
    if (subproblem_solved || mult.free_resid <= tight) {
      if (mult.worst >= -tight) break;
      free.insert(std::upper_bound(free.begin(), free.end(), mult.entering), mult.entering);
      is_free[mult.entering] = 1;
      subproblem_solved = false;
      continue;
    }

    // Equality-constrained step on the free set in the basis
    // Z = [e_{F_c} - e_{F_0}], c = 1..k-1, which spans {sum p = 0}.
    const auto k = static_cast<Eigen::Index>(free.size());
    const auto f0 = static_cast<Eigen::Index>(free[0]);
    Eigen::MatrixXd YZ(d, k - 1);
    Eigen::VectorXd gr(k - 1);
    for (Eigen::Index c = 1; c < k; ++c) {
      const auto fc = static_cast<Eigen::Index>(free[static_cast<std::size_t>(c)]);
      YZ.col(c - 1) = Y.col(fc) - Y.col(f0);
      gr[c - 1] = g[fc] - g[f0];
    }
    const Eigen::MatrixXd Hr = lambda * YZ.transpose() * YZ;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hr);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Eigen::MatrixXd& V = es.eigenvectors();
    const double cutoff = 1e-11 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd newton = Eigen::VectorXd::Zero(k - 1);
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(k - 1);
    for (Eigen::Index c = 0; c < k - 1; ++c) {
      const double proj = V.col(c).dot(gr);
      if (ev[c] > cutoff) {
        newton -= (proj / ev[c]) * V.col(c);
      } else {
        flat -= proj * V.col(c);
      }
    }
    const bool unbounded = flat.norm() > 1e-14;
    const Eigen::VectorXd& pr = unbounded ? flat : newton;

    Eigen::VectorXd p = Eigen::VectorXd::Zero(k);
    for (Eigen::Index c = 1; c < k; ++c) {
      p[c] = pr[c - 1];
      p[0] -= pr[c - 1];
    }

    double alpha = unbounded ? std::numeric_limits<double>::infinity() : 1.0;
    Eigen::Index block = -1;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (p[c] < 0.0) {
        const double ratio = -theta[static_cast<Eigen::Index>(free[static_cast<std::size_t>(c)])] / p[c];
        if (ratio < alpha) {
          alpha = ratio;
          block = c;
        }
      }
    }
    if (!std::isfinite(alpha)) break;  // no descent left; reported through the residual
    for (Eigen::Index c = 0; c < k; ++c) {
      theta[static_cast<Eigen::Index>(free[static_cast<std::size_t>(c)])] += alpha * p[c];
    }
    if (block >= 0) {
      const std::size_t j = free[static_cast<std::size_t>(block)];
      theta[static_cast<Eigen::Index>(j)] = 0.0;
      is_free[j] = 0;
      free.erase(free.begin() + block);
    } else {
      subproblem_solved = true;
    }
  }

  z.setZero();
  double btheta = 0.0;
  for (std::size_t j : free) {
    const auto jj = static_cast<Eigen::Index>(j);
    z += theta[jj] * Y.col(jj);
    btheta += b[jj] * theta[jj];
  }
  g = Y.transpose() * (lambda * z - x) + b;
  mult = multipliers(g, free, is_free);
  out.kkt_residual = std::max(mult.free_resid, -mult.worst);
  if (out.kkt_residual > tol) {
    std::ostringstream os;
    os << "simplex QP stopped with KKT residual " << out.kkt_residual << " after "
       << out.iterations << " iterations";
    throw ConvergenceError(os.str(), out.kkt_residual);
  }
  for (std::size_t j : free) {
    out.support.push_back(j);
    out.theta.push_back(theta[static_cast<Eigen::Index>(j)]);
  }
  out.z = z;
  out.objective = 0.5 * lambda * z.squaredNorm() - x.dot(z) + btheta;
  return out;
}

}  // namespace qotlab
