#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qotlab {

using Point = Eigen::VectorXd;
using PointList = std::vector<Point>;

inline constexpr std::size_t kDefaultAtomCap = 200000;

// Finitely supported probability measure inside the closed unit ball.
// Atoms are stored row-wise in an n x d matrix. Immutable once built.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;

  std::size_t size() const { return static_cast<std::size_t>(atoms_.rows()); }
  int dim() const { return static_cast<int>(atoms_.cols()); }

  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  Point atom(std::size_t i) const { return atoms_.row(static_cast<Eigen::Index>(i)).transpose(); }
  double weight(std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }

  double min_weight() const { return weights_.minCoeff(); }

  // Bitwise equality of atoms and weights.
  bool identical_to(const DiscreteMeasure& other) const;

 private:
  friend DiscreteMeasure make_measure(const Eigen::MatrixXd&, const Eigen::VectorXd&);

  Eigen::MatrixXd atoms_;
  Eigen::VectorXd weights_;
};

// Validates and builds a measure. Weights whose sum is within 1e-9 of one are
// renormalized; anything further off is rejected.
DiscreteMeasure make_measure(const PointList& atoms, const std::vector<double>& weights);

// Same validation, matrix input (rows are atoms).
DiscreteMeasure make_measure(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& weights);

// Equal-weight lattice {k h : k in Z^d, |k h| <= radius}, centered at the origin.
DiscreteMeasure ball_grid(int d, double h, double radius = 1.0,
                          std::size_t atom_cap = kDefaultAtomCap);

// Lattice of spacing h in the closed unit ball.
DiscreteMeasure uniform_ball_grid(int d, double h, std::size_t atom_cap = kDefaultAtomCap);

// Monge map x -> grad phi(x) for a convex potential phi.
class MongeMap {
 public:
  enum class Kind { identity, affine, tabulated };

  static MongeMap identity(int d);
  // A must be symmetric positive semidefinite.
  static MongeMap affine(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);
  // Per-atom images. Potential values are optional (NaN when unknown).
  static MongeMap tabulated(const Eigen::MatrixXd& sources, const Eigen::MatrixXd& images,
                            std::vector<double> potentials = {});

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double lipschitz() const { return lipschitz_; }
  const Eigen::MatrixXd& matrix() const { return A_; }
  const Eigen::VectorXd& offset() const { return b_; }

  // grad phi(x). Tabulated maps only answer at their source atoms.
  Point apply(const Point& x) const;
  // phi(x).
  double potential_at(const Point& x) const;

 private:
  std::optional<std::size_t> find_source(const Point& x) const;

  Kind kind_ = Kind::identity;
  int dim_ = 0;
  double lipschitz_ = 1.0;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd sources_;
  Eigen::MatrixXd images_;
  std::vector<double> potentials_;
};

const char* to_string(MongeMap::Kind kind);

// Image measure of mu under the map. Images are merged when their coordinates
// agree after rounding to 12 decimals.
DiscreteMeasure pushforward(const DiscreteMeasure& mu, const MongeMap& map);

}  // namespace qotlab
