#include "qotlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <utility>

#include "qotlab/error.hpp"

namespace qotlab {

namespace {

double dist(const DiscreteMeasure& mu, std::size_t i, std::size_t j) {
  return (mu.atoms().row(static_cast<Eigen::Index>(i)) - mu.atoms().row(static_cast<Eigen::Index>(j)))
      .norm();
}

}  // namespace

double SpreadProfile::rho(double r) const {
  if (!(r > 0.0)) return 0.0;
  // First k with radii[k] >= r; r lies in (radii[k-1], radii[k]].
  const auto it = std::lower_bound(radii.begin(), radii.end(), r);
  const auto k = static_cast<std::size_t>(it - radii.begin());
  return rho_values[k - 1];
}

SpreadProfile build_spread(const DiscreteMeasure& mu, std::string source) {
  const std::size_t n = mu.size();
  const long count = static_cast<long>(n);
  auto distances_from = [&](std::size_t i, std::vector<double>& d) {
    d.resize(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = dist(mu, i, j);
  };

  // Distinct pairwise distances. Set union is order independent.
  std::vector<double> all;
#pragma omp parallel
  {
    std::vector<double> local;
    std::vector<double> d;
#pragma omp for schedule(static)
    for (long li = 0; li < count; ++li) {
      distances_from(static_cast<std::size_t>(li), d);
      local.insert(local.end(), d.begin(), d.end());
      if (local.size() > 4 * n) {
        std::sort(local.begin(), local.end());
        local.erase(std::unique(local.begin(), local.end()), local.end());
      }
    }
#pragma omp critical
    all.insert(all.end(), local.begin(), local.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  if (all.empty() || all.front() != 0.0) all.insert(all.begin(), 0.0);

  const std::size_t K = all.size();
  std::vector<double> rho(K, std::numeric_limits<double>::infinity());
#pragma omp parallel
  {
    std::vector<double> local(K, std::numeric_limits<double>::infinity());
    std::vector<double> d;
    std::vector<std::size_t> order(n);
#pragma omp for schedule(static)
    for (long li = 0; li < count; ++li) {
      distances_from(static_cast<std::size_t>(li), d);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return d[a] < d[b] || (d[a] == d[b] && a < b);
      });
      // Mass of the closed ball of radius all[k], i.e. the open ball for
      // every r in (all[k], all[k+1]].
      double mass = 0.0;
      std::size_t p = 0;
      for (std::size_t k = 0; k < K; ++k) {
        while (p < n && d[order[p]] <= all[k]) mass += mu.weight(order[p++]);
        local[k] = std::min(local[k], mass);
      }
    }
#pragma omp critical
    for (std::size_t k = 0; k < K; ++k) rho[k] = std::min(rho[k], local[k]);
  }
  // Every ball beyond the diameter holds the full unit mass.
  rho.back() = 1.0;
  return {std::move(all), std::move(rho), std::move(source)};
}

namespace {

double spread_inf(const SpreadProfile& p, double eps, bool squared) {
  if (!(eps > 0.0)) throw ValidationError("epsilon must be positive");
  const std::size_t K = p.radii.size();
  auto edge = [&](std::size_t k) { return squared ? p.radii[k] * p.radii[k] : p.radii[k]; };
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const double t = eps / p.rho_values[k];
    if (t < edge(k + 1)) return std::max(edge(k), t);
  }
  return std::max(edge(K - 1), eps / p.rho_values[K - 1]);
}

}  // namespace

double delta(const SpreadProfile& profile, double epsilon) { return spread_inf(profile, epsilon, false); }

double delta_st(const SpreadProfile& profile, double epsilon) {
  return spread_inf(profile, epsilon, true);
}

double asym_hausdorff(const PointList& a, const PointList& b) {
  if (a.empty() || b.empty()) throw ValidationError("asymmetric Hausdorff distance needs nonempty sets");
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) {
      if (p.size() != q.size()) throw ValidationError("point sets differ in dimension");
      best = std::min(best, (p - q).norm());
    }
    worst = std::max(worst, best);
  }
  return worst;
}

double connecting_radius(const DiscreteMeasure& mu) {
  const std::size_t n = mu.size();
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<char> in(n, 0);
  key[0] = 0.0;
  double worst = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in[v] && (u == n || key[v] < key[u])) u = v;
    }
    in[u] = 1;
    worst = std::max(worst, key[u]);
    for (std::size_t v = 0; v < n; ++v) {
      if (!in[v]) key[v] = std::min(key[v], dist(mu, u, v));
    }
  }
  return worst;
}

double path_length_bound(const DiscreteMeasure& mu, double connect_radius) {
  if (!(connect_radius > 0.0)) throw ValidationError("connect radius must be positive");
  const std::size_t n = mu.size();
  // Lattice distances carry rounding noise; join atoms within a relative hair.
  const double reach = connect_radius * (1.0 + 1e-12);
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = dist(mu, i, j);
      if (w <= reach) adj[i].emplace_back(j, w);
    }
  }
  std::vector<double> ecc(n, 0.0);
  bool disconnected = false;
#pragma omp parallel for schedule(dynamic)
  for (long ls = 0; ls < static_cast<long>(n); ++ls) {
    const auto s = static_cast<std::size_t>(ls);
    std::vector<double> d(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    d[s] = 0.0;
    pq.emplace(0.0, s);
    while (!pq.empty()) {
      const auto [du, u] = pq.top();
      pq.pop();
      if (du > d[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        if (du + w < d[v]) {
          d[v] = du + w;
          pq.emplace(d[v], v);
        }
      }
    }
    const double m = *std::max_element(d.begin(), d.end());
    if (std::isinf(m)) {
#pragma omp atomic write
      disconnected = true;
    }
    ecc[s] = m;
  }
  if (disconnected) {
    std::ostringstream os;
    os.precision(17);
    os << "atom graph is disconnected at radius " << connect_radius
       << "; smallest connecting radius is " << connecting_radius(mu);
    throw ValidationError(os.str());
  }
  return *std::max_element(ecc.begin(), ecc.end());
}

double diameter(const DiscreteMeasure& mu) {
  double best = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = i + 1; j < mu.size(); ++j) best = std::max(best, dist(mu, i, j));
  }
  return best;
}

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double segment_distance(const Point& x, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (x - (a + t * ab)).norm();
}

}  // namespace

ConvexHull build_hull(const DiscreteMeasure& mu) {
  ConvexHull hull;
  hull.dim = mu.dim();
  if (hull.dim == 1) {
    const auto& a = mu.atoms();
    Point lo(1), hi(1);
    lo[0] = a.col(0).minCoeff();
    hi[0] = a.col(0).maxCoeff();
    hull.vertices = {lo, hi};
    return hull;
  }
  if (hull.dim != 2) throw ValidationError("hull boundary distance supports d = 1 and d = 2 only");

  PointList pts;
  for (std::size_t i = 0; i < mu.size(); ++i) pts.push_back(mu.atom(i));
  std::sort(pts.begin(), pts.end(), [](const Point& p, const Point& q) {
    return p[0] < q[0] || (p[0] == q[0] && p[1] < q[1]);
  });
  // Andrew's monotone chain; collinear points are dropped.
  PointList h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  h.resize(k > 0 ? k - 1 : 0);
  if (h.size() < 3) throw ValidationError("hull is degenerate: atoms are collinear");
  hull.vertices = std::move(h);
  return hull;
}

double boundary_distance(const Point& x, const ConvexHull& hull) {
  if (x.size() != hull.dim) throw ValidationError("point dimension does not match the hull");
  if (hull.dim == 1) {
    return std::min(std::abs(x[0] - hull.vertices[0][0]), std::abs(x[0] - hull.vertices[1][0]));
  }
  double best = std::numeric_limits<double>::infinity();
  const std::size_t m = hull.vertices.size();
  for (std::size_t i = 0; i < m; ++i) {
    best = std::min(best, segment_distance(x, hull.vertices[i], hull.vertices[(i + 1) % m]));
  }
  return best;
}

std::string spread_csv(const SpreadProfile& profile) {
  std::ostringstream os;
  os.precision(17);
  os << "r,rho\n";
  for (std::size_t k = 0; k < profile.radii.size(); ++k) {
    os << profile.radii[k] << ',' << profile.rho_values[k] << '\n';
  }
  return os.str();
}

}  // namespace qotlab
