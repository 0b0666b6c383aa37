#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qotlab/measures.hpp"

namespace qotlab {

// rho(r) = min over atoms x of mu(B(x, r)) with open balls. Step function:
// rho(r) = rho_values[k] for r in (radii[k], radii[k+1]], and the last value
// beyond radii.back(). radii[0] = 0 and radii are the distinct pairwise
// distances.
struct SpreadProfile {
  std::vector<double> radii;
  std::vector<double> rho_values;
  std::string source;

  double rho(double r) const;
};

SpreadProfile build_spread(const DiscreteMeasure& mu, std::string source = "mu");

// delta(eps) = inf{r > 0 : r rho(r) > eps}, exact on each step.
double delta(const SpreadProfile& profile, double epsilon);
// delta_ST(eps) = inf{r > 0 : r rho(sqrt r) > eps}.
double delta_st(const SpreadProfile& profile, double epsilon);

// sup_{a in A} inf_{b in B} |a - b|. Throws ValidationError on empty input.
double asym_hausdorff(const PointList& a, const PointList& b);

// Largest graph-geodesic length between atoms when atoms closer than
// connect_radius are joined. Throws ValidationError naming the smallest
// connecting radius when the graph is disconnected.
double path_length_bound(const DiscreteMeasure& mu, double connect_radius);

// Largest radius of a minimum spanning tree edge: the smallest connect_radius
// for which the neighbourhood graph is connected.
double connecting_radius(const DiscreteMeasure& mu);

double diameter(const DiscreteMeasure& mu);

// Convex hull of the atoms, d = 1 (interval) or d = 2 (counter-clockwise polygon).
struct ConvexHull {
  int dim = 0;
  std::vector<Point> vertices;
};

// Throws ValidationError for d = 2 with all atoms collinear and for d > 2.
ConvexHull build_hull(const DiscreteMeasure& mu);

// Distance from x to the hull boundary.
double boundary_distance(const Point& x, const ConvexHull& hull);

// "r,rho" rows.
std::string spread_csv(const SpreadProfile& profile);

}  // namespace qotlab
