#include "qotlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "qotlab/error.hpp"

namespace qotlab {

namespace {

constexpr double kBallSlack = 1e-12;
constexpr double kRenormalizeWindow = 1e-9;
constexpr double kKeepWindow = 1e-13;

bool lex_less(const Eigen::MatrixXd& a, Eigen::Index i, Eigen::Index j) {
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    if (a(i, k) != a(j, k)) return a(i, k) < a(j, k);
  }
  return false;
}

}  // namespace

bool DiscreteMeasure::identical_to(const DiscreteMeasure& other) const {
  if (atoms_.rows() != other.atoms_.rows() || atoms_.cols() != other.atoms_.cols()) return false;
  return (atoms_.array() == other.atoms_.array()).all() &&
         (weights_.array() == other.weights_.array()).all();
}

DiscreteMeasure make_measure(const PointList& atoms, const std::vector<double>& weights) {
  if (atoms.empty()) throw ValidationError("measure needs at least one atom");
  const auto d = atoms.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(atoms.size()), d);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != d) throw ValidationError("atoms have inconsistent dimensions");
    m.row(static_cast<Eigen::Index>(i)) = atoms[i].transpose();
  }
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                         static_cast<Eigen::Index>(weights.size()));
  return make_measure(m, w);
}

DiscreteMeasure make_measure(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& weights) {
  const Eigen::Index n = atoms.rows();
  if (n == 0) throw ValidationError("measure needs at least one atom");
  if (weights.size() != n) {
    throw ValidationError("atom and weight lists differ in length");
  }
  if (atoms.cols() < 1) throw ValidationError("dimension must be positive");
  if (!atoms.allFinite() || !weights.allFinite()) {
    throw ValidationError("non-finite coordinate or weight");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights[i] <= 0.0) {
      std::ostringstream os;
      os << "weight " << i << " is not positive (" << weights[i] << ")";
      throw ValidationError(os.str());
    }
    const double r = atoms.row(i).norm();
    if (r > 1.0 + kBallSlack) {
      std::ostringstream os;
      os << "atom " << i << " lies outside the closed unit ball (norm " << r << ")";
      throw ValidationError(os.str());
    }
  }
  const double total = weights.sum();
  if (std::abs(total - 1.0) > kRenormalizeWindow) {
    std::ostringstream os;
    os << "weights sum to " << total << ", more than 1e-9 away from 1";
    throw ValidationError(os.str());
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return lex_less(atoms, a, b); });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if ((atoms.row(order[k - 1]).array() == atoms.row(order[k]).array()).all()) {
      std::ostringstream os;
      os << "duplicate atoms at indices " << std::min(order[k - 1], order[k]) << " and "
         << std::max(order[k - 1], order[k]);
      throw ValidationError(os.str());
    }
  }

  DiscreteMeasure out;
  out.atoms_ = atoms;
  // Leave round-off sized deviations alone so that rebuilding a measure from
  // its own weights is bitwise stable.
  out.weights_ = (std::abs(total - 1.0) <= kKeepWindow) ? weights : Eigen::VectorXd(weights / total);
  return out;
}

DiscreteMeasure ball_grid(int d, double h, double radius, std::size_t atom_cap) {
  if (d < 1 || d > 3) throw ValidationError("grid dimension must be 1, 2 or 3");
  if (!(h > 0.0)) throw ValidationError("grid spacing must be positive");
  if (!(radius > 0.0) || radius > 1.0) throw ValidationError("grid radius must lie in (0, 1]");

  const long K = static_cast<long>(std::floor(radius / h + 1e-9));
  const double limit = radius + kBallSlack;

  // Count first so that oversized grids fail before allocating.
  auto for_each_index = [&](auto&& visit) {
    std::vector<long> k(static_cast<std::size_t>(d), -K);
    while (true) {
      double r2 = 0.0;
      for (long c : k) r2 += static_cast<double>(c * c);
      if (std::sqrt(r2) * h <= limit) visit(k);
      int pos = d - 1;
      while (pos >= 0 && k[static_cast<std::size_t>(pos)] == K) {
        k[static_cast<std::size_t>(pos)] = -K;
        --pos;
      }
      if (pos < 0) break;
      ++k[static_cast<std::size_t>(pos)];
    }
  };

  std::size_t count = 0;
  for_each_index([&](const std::vector<long>&) { ++count; });
  if (count > atom_cap) {
    std::ostringstream os;
    os << "grid d=" << d << " h=" << h << " would have " << count << " atoms, above the cap of "
       << atom_cap;
    throw ValidationError(os.str());
  }

  Eigen::MatrixXd atoms(static_cast<Eigen::Index>(count), d);
  Eigen::Index row = 0;
  for_each_index([&](const std::vector<long>& k) {
    for (int c = 0; c < d; ++c) atoms(row, c) = static_cast<double>(k[static_cast<std::size_t>(c)]) * h;
    ++row;
  });
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(count),
                                                1.0 / static_cast<double>(count));
  return make_measure(atoms, w);
}

DiscreteMeasure uniform_ball_grid(int d, double h, std::size_t atom_cap) {
  if (!(h > 0.0) || h > 1.0) throw ValidationError("grid spacing must lie in (0, 1]");
  return ball_grid(d, h, 1.0, atom_cap);
}

// ---------------------------------------------------------------------------

MongeMap MongeMap::identity(int d) {
  if (d < 1) throw ValidationError("dimension must be positive");
  MongeMap m;
  m.kind_ = Kind::identity;
  m.dim_ = d;
  m.lipschitz_ = 1.0;
  m.A_ = Eigen::MatrixXd::Identity(d, d);
  m.b_ = Eigen::VectorXd::Zero(d);
  return m;
}

MongeMap MongeMap::affine(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols() || A.rows() < 1 || b.size() != A.rows()) {
    throw ValidationError("affine map needs a square matrix and a matching offset");
  }
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("affine map matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw ValidationError("affine map matrix must be positive semidefinite");
  }
  MongeMap m;
  m.kind_ = Kind::affine;
  m.dim_ = static_cast<int>(A.rows());
  m.lipschitz_ = std::max(0.0, eig.eigenvalues().maxCoeff());
  m.A_ = A;
  m.b_ = b;
  return m;
}

MongeMap MongeMap::tabulated(const Eigen::MatrixXd& sources, const Eigen::MatrixXd& images,
                             std::vector<double> potentials) {
  if (sources.rows() != images.rows() || sources.cols() != images.cols() || sources.rows() == 0) {
    throw ValidationError("tabulated map needs matching, nonempty source and image tables");
  }
  if (!potentials.empty() && potentials.size() != static_cast<std::size_t>(sources.rows())) {
    throw ValidationError("tabulated map potential table has the wrong length");
  }
  MongeMap m;
  m.kind_ = Kind::tabulated;
  m.dim_ = static_cast<int>(sources.cols());
  m.sources_ = sources;
  m.images_ = images;
  m.potentials_ = std::move(potentials);
  double L = 0.0;
  for (Eigen::Index i = 0; i < sources.rows(); ++i) {
    for (Eigen::Index k = i + 1; k < sources.rows(); ++k) {
      const double dx = (sources.row(i) - sources.row(k)).norm();
      if (dx > 0.0) L = std::max(L, (images.row(i) - images.row(k)).norm() / dx);
    }
  }
  m.lipschitz_ = L;
  return m;
}

std::optional<std::size_t> MongeMap::find_source(const Point& x) const {
  for (Eigen::Index i = 0; i < sources_.rows(); ++i) {
    if ((sources_.row(i).transpose().array() == x.array()).all()) {
      return static_cast<std::size_t>(i);
    }
  }
  return std::nullopt;
}

Point MongeMap::apply(const Point& x) const {
  if (x.size() != dim_) throw ValidationError("point dimension does not match the map");
  switch (kind_) {
    case Kind::identity:
      return x;
    case Kind::affine:
      return A_ * x + b_;
    case Kind::tabulated: {
      auto idx = find_source(x);
      if (!idx) throw ValidationError("tabulated map queried away from its source atoms");
      return images_.row(static_cast<Eigen::Index>(*idx)).transpose();
    }
  }
  return x;
}

double MongeMap::potential_at(const Point& x) const {
  if (x.size() != dim_) throw ValidationError("point dimension does not match the map");
  switch (kind_) {
    case Kind::identity:
      return 0.5 * x.squaredNorm();
    case Kind::affine:
      return 0.5 * x.dot(A_ * x) + b_.dot(x);
    case Kind::tabulated: {
      auto idx = find_source(x);
      if (!idx || potentials_.empty()) return std::numeric_limits<double>::quiet_NaN();
      return potentials_[*idx];
    }
  }
  return 0.0;
}

const char* to_string(MongeMap::Kind kind) {
  switch (kind) {
    case MongeMap::Kind::identity: return "identity";
    case MongeMap::Kind::affine: return "affine";
    case MongeMap::Kind::tabulated: return "tabulated";
  }
  return "unknown";
}

DiscreteMeasure pushforward(const DiscreteMeasure& mu, const MongeMap& map) {
  if (map.dim() != mu.dim()) throw ValidationError("map and measure dimensions differ");
  const std::size_t n = mu.size();
  const int d = mu.dim();

  struct Group {
    Point rep;
    std::vector<double> weights;
  };
  std::vector<Group> groups;
  std::map<std::vector<long long>, std::size_t> index;

  for (std::size_t i = 0; i < n; ++i) {
    Point y = map.apply(mu.atom(i));
    if (y.norm() > 1.0 + kBallSlack) {
      std::ostringstream os;
      os << "image of atom " << i << " escapes the unit ball (norm " << y.norm() << ")";
      throw ValidationError(os.str());
    }
    std::vector<long long> key(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) key[static_cast<std::size_t>(c)] = std::llround(y[c] * 1e12);
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      groups.push_back({y, {mu.weight(i)}});
    } else {
      Group& g = groups[it->second];
      g.weights.push_back(mu.weight(i));
      // Lexicographically smallest exact image represents the group.
      if (std::lexicographical_compare(y.data(), y.data() + d, g.rep.data(), g.rep.data() + d)) {
        g.rep = y;
      }
    }
  }

  Eigen::MatrixXd atoms(static_cast<Eigen::Index>(groups.size()), d);
  Eigen::VectorXd w(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t k = 0; k < groups.size(); ++k) {
    auto& ws = groups[k].weights;
    std::sort(ws.begin(), ws.end());
    atoms.row(static_cast<Eigen::Index>(k)) = groups[k].rep.transpose();
    w[static_cast<Eigen::Index>(k)] = std::accumulate(ws.begin(), ws.end(), 0.0);
  }
  return make_measure(atoms, w);
}

}  // namespace qotlab
