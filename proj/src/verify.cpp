#include "qotlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qotlab/error.hpp"
#include "qotlab/random.hpp"

namespace qotlab {

namespace {

struct BoundName {
  BoundId id;
  const char* name;
};

constexpr BoundName kNames[] = {
    {BoundId::DensityUB, "DensityUB"},
    {BoundId::CostSandwich, "CostSandwich"},
    {BoundId::ApproxConj, "ApproxConj"},
    {BoundId::RestrictedConj, "RestrictedConj"},
    {BoundId::SupportInclusion12, "SupportInclusion12"},
    {BoundId::Concentration, "Concentration"},
    {BoundId::SymUB, "SymUB"},
    {BoundId::SymLB, "SymLB"},
    {BoundId::GradEstimate, "GradEstimate"},
    {BoundId::SuppDiamM, "SuppDiamM"},
    {BoundId::GeneralBias, "GeneralBias"},
    {BoundId::BoundaryBias, "BoundaryBias"},
    {BoundId::IntegralGap, "IntegralGap"},
    {BoundId::DiscrepancyUB, "DiscrepancyUB"},
};

double ratio(double a, double b) { return b > 0.0 ? a / b : 0.0; }

BoundReport explicit_report(BoundId id, const SolvedInstance& s, double lhs, double rhs, double unit) {
  BoundReport r;
  r.bound_id = id;
  r.epsilon = s.epsilon;
  r.lhs = lhs;
  r.rhs = rhs;
  r.implied_constant = ratio(lhs, unit);
  r.explicit_constant = true;
  r.holds = lhs <= rhs + kBoundSlack;
  return r;
}

BoundReport trend_report(BoundId id, const SolvedInstance& s, double lhs, double rhs_unit) {
  BoundReport r;
  r.bound_id = id;
  r.epsilon = s.epsilon;
  r.lhs = lhs;
  r.rhs = rhs_unit;
  r.implied_constant = ratio(lhs, rhs_unit);
  r.explicit_constant = false;
  return r;
}

const DiscreteMeasure& mu_of(const SolvedInstance& s) { return s.prepared->instance->mu; }
const DiscreteMeasure& nu_of(const SolvedInstance& s) { return s.prepared->instance->nu; }

}  // namespace

const char* to_string(BoundId id) {
  for (const auto& n : kNames) {
    if (n.id == id) return n.name;
  }
  return "unknown";
}

BoundId parse_bound_id(const std::string& name) {
  for (const auto& n : kNames) {
    if (name == n.name) return n.id;
  }
  throw ConfigError("unknown bound id '" + name + "'");
}

const std::vector<BoundId>& all_bound_ids() {
  static const std::vector<BoundId> ids = [] {
    std::vector<BoundId> v;
    for (const auto& n : kNames) v.push_back(n.id);
    return v;
  }();
  return ids;
}

nlohmann::ordered_json to_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["bound_id"] = to_string(r.bound_id);
  j["epsilon"] = r.epsilon;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["implied_constant"] = r.implied_constant;
  j["explicit"] = r.explicit_constant;
  j["holds"] = r.holds ? nlohmann::ordered_json(*r.holds) : nlohmann::ordered_json(nullptr);
  j["defined"] = r.defined;
  j["context"] = r.context;
  return j;
}

void sort_reports(std::vector<BoundReport>& reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const BoundReport& a, const BoundReport& b) {
    if (a.bound_id != b.bound_id) return a.bound_id < b.bound_id;
    return a.epsilon > b.epsilon;
  });
}

PreparedInstance prepare(const Instance& inst, const PrepareOptions& opts) {
  if (inst.mu.dim() != inst.nu.dim()) throw ValidationError("marginals live in different dimensions");
  PreparedInstance p;
  p.instance = &inst;
  p.self_transport = inst.mu.identical_to(inst.nu);
  p.spread = build_spread(inst.mu);
  p.diam = diameter(inst.mu);
  if (opts.exact && inst.mu.size() <= kExactAtomCap && inst.nu.size() <= kExactAtomCap) {
    p.exact = solve_exact(inst.mu, inst.nu);
  }
  if (opts.geometry && inst.mu.dim() <= 2) {
    try {
      p.hull = build_hull(inst.mu);
    } catch (const ValidationError&) {
      p.hull.reset();
    }
  }
  if (opts.geometry && inst.mu.size() >= 2 && inst.mu.size() <= 3000) {
    p.connect_radius = connecting_radius(inst.mu);
    p.path_length = path_length_bound(inst.mu, *p.connect_radius);
  }
  return p;
}

SolvedInstance solve_instance(const PreparedInstance& prep, const SolverConfig& cfg, bool tables) {
  const DiscreteMeasure& mu = prep.instance->mu;
  const DiscreteMeasure& nu = prep.instance->nu;
  SolvedInstance s;
  s.prepared = &prep;
  s.epsilon = cfg.epsilon;
  s.config = cfg;
  s.pot = solve(mu, nu, cfg);
  s.coupling = assemble_coupling(s.pot, mu, nu, cfg);
  s.delta_eps = delta(prep.spread, cfg.epsilon);
  s.delta_st_eps = delta_st(prep.spread, cfg.epsilon);
  s.surrogate = build_surrogate(s.pot, nu, s.delta_eps);
  if (!tables) return s;

  s.psi_mu.resize(mu.size());
  s.psi_star_nu.resize(nu.size());
  s.psi_prime_nu.resize(nu.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < static_cast<long>(mu.size()); ++i) {
    s.psi_mu[static_cast<std::size_t>(i)] = eval_psi(s.surrogate, mu.atom(static_cast<std::size_t>(i))).value;
  }
#pragma omp parallel for schedule(dynamic, 8)
  for (long j = 0; j < static_cast<long>(nu.size()); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    s.psi_star_nu[jj] = eval_psi_star(s.surrogate, nu.atom(jj));
    s.psi_prime_nu[jj] = eval_psi_prime(mu, s.psi_mu, nu.atom(jj));
  }
  return s;
}

BoundReport check_density_ub(const SolvedInstance& s) {
  const DensityPeak pk = max_density(s.pot, mu_of(s), nu_of(s));
  BoundReport r = explicit_report(BoundId::DensityUB, s, pk.value, 5.0 * s.delta_eps, s.delta_eps);
  r.context["argmax"] = {pk.i, pk.j};
  r.context["delta"] = s.delta_eps;
  r.context["at_least_eps"] = pk.value >= s.epsilon - kBoundSlack;
  return r;
}

std::optional<BoundReport> check_cost_sandwich(const SolvedInstance& s) {
  if (!s.prepared->exact) return std::nullopt;
  const DiscreteMeasure& mu = mu_of(s);
  const DiscreteMeasure& nu = nu_of(s);
  const double C = s.prepared->exact->cost;
  double transport = 0.0;
  for (const auto& e : s.coupling.entries) transport += e.mass * 0.5 * (mu.atom(e.i) - nu.atom(e.j)).squaredNorm();
  double dual = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) dual += mu.weight(i) * s.pot.f[i];
  for (std::size_t j = 0; j < nu.size(); ++j) dual += nu.weight(j) * s.pot.g[j];
  const double upper = C + 5.0 * s.delta_eps;
  BoundReport r = explicit_report(BoundId::CostSandwich, s, dual, upper, s.delta_eps);
  r.implied_constant = ratio(dual - C, s.delta_eps);
  const bool first = C <= transport + kBoundSlack;
  const bool second = transport <= dual + kBoundSlack;
  const bool third = dual <= upper + kBoundSlack;
  r.holds = first && second && third;
  r.context["exact_cost"] = C;
  r.context["transport_cost"] = transport;
  r.context["dual_value"] = dual;
  r.context["chain"] = {first, second, third};
  return r;
}

std::vector<BoundReport> check_approx_conj(const SolvedInstance& s) {
  const DiscreteMeasure& mu = mu_of(s);
  const DiscreteMeasure& nu = nu_of(s);
  const double d = s.delta_eps;

  double mu_side = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    mu_side = std::max(mu_side, std::abs(0.5 * mu.atom(i).squaredNorm() - s.pot.f[i] - s.psi_mu[i]));
  }
  double nu_side = 0.0;
  double restricted = 0.0;
  double restricted_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nu.size(); ++j) {
    nu_side = std::max(nu_side, std::abs(0.5 * nu.atom(j).squaredNorm() - s.pot.g[j] - s.psi_star_nu[j]));
    restricted = std::max(restricted, std::abs(s.psi_star_nu[j] - s.psi_prime_nu[j]));
    restricted_excess = std::max(restricted_excess, s.psi_prime_nu[j] - s.psi_star_nu[j]);
  }
  double inclusion = -std::numeric_limits<double>::infinity();
  for (const auto& e : s.coupling.entries) {
    inclusion = std::max(inclusion, s.psi_mu[e.i] + s.psi_star_nu[e.j] - mu.atom(e.i).dot(nu.atom(e.j)));
  }

  std::vector<BoundReport> out;
  BoundReport a = explicit_report(BoundId::ApproxConj, s, std::max(mu_side, nu_side), 6.0 * d, d);
  a.context["mu_side"] = mu_side;
  a.context["nu_side"] = nu_side;
  out.push_back(a);
  BoundReport b = explicit_report(BoundId::RestrictedConj, s, restricted, 22.0 * d, d);
  // psi' is a sup over a subset, so it never exceeds psi*.
  b.context["max_restricted_minus_full"] = restricted_excess;
  out.push_back(b);
  BoundReport c = explicit_report(BoundId::SupportInclusion12, s, inclusion, 12.0 * d, d);
  c.holds = inclusion < 12.0 * d + kBoundSlack;
  c.context["support_pairs"] = s.coupling.support_size();
  out.push_back(c);
  return out;
}

BoundReport check_concentration(const SolvedInstance& s) {
  const DiscreteMeasure& mu = mu_of(s);
  const DiscreteMeasure& nu = nu_of(s);
  const auto& entries = s.coupling.entries;
  const long count = static_cast<long>(entries.size());
  std::vector<double> dist(entries.size());
  std::vector<double> resid(entries.size());
  std::vector<double> key_margin(entries.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long k = 0; k < count; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const Point x = mu.atom(entries[kk].i);
    const Point y = nu.atom(entries[kk].j);
    const MintyPoint mp = minty_reflect(s.surrogate, x + y);
    const double a = (x - mp.x_prime).squaredNorm();
    dist[kk] = std::sqrt(a + (y - mp.gradient).squaredNorm());
    resid[kk] = mp.residual;
    const double gap = s.psi_mu[entries[kk].i] + s.psi_star_nu[entries[kk].j] - x.dot(y);
    key_margin[kk] = gap - a;
  }
  double worst = 0.0;
  double worst_resid = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (dist[k] > worst) {
      worst = dist[k];
      arg = k;
    }
    worst_resid = std::max(worst_resid, resid[k]);
    min_margin = std::min(min_margin, key_margin[k]);
  }
  BoundReport r =
      explicit_report(BoundId::Concentration, s, worst, std::sqrt(24.0 * s.delta_eps), std::sqrt(s.delta_eps));
  if (!entries.empty()) r.context["argmax"] = {entries[arg].i, entries[arg].j};
  r.context["max_resolvent_residual"] = worst_resid;
  r.context["min_key_margin"] = entries.empty() ? 0.0 : min_margin;
  return r;
}

double support_spread(const SolvedInstance& s) {
  const DiscreteMeasure& mu = mu_of(s);
  const DiscreteMeasure& nu = nu_of(s);
  double best = 0.0;
  for (const auto& e : s.coupling.entries) best = std::max(best, (mu.atom(e.i) - nu.atom(e.j)).squaredNorm());
  return std::sqrt(best);
}

std::vector<BoundReport> check_self_transport(const SolvedInstance& s) {
  std::vector<BoundReport> out;
  if (!s.prepared->self_transport) return out;
  const DiscreteMeasure& mu = mu_of(s);
  const DiscreteMeasure& nu = nu_of(s);
  const double M = *std::max_element(s.pot.f.begin(), s.pot.f.end());
  const double spread = support_spread(s);
  double spread2 = 0.0;
  for (const auto& e : s.coupling.entries) spread2 = std::max(spread2, (mu.atom(e.i) - nu.atom(e.j)).squaredNorm());

  BoundReport m = explicit_report(BoundId::SuppDiamM, s, spread2, 4.0 * M, M);
  m.context["M"] = M;
  m.context["f_equals_g"] = s.pot.f == s.pot.g;
  out.push_back(m);

  const double base = std::min(std::sqrt(s.delta_st_eps), s.prepared->diam);
  BoundReport ub = trend_report(BoundId::SymUB, s, spread, base);
  ub.context["delta_st"] = s.delta_st_eps;
  ub.context["diameter"] = s.prepared->diam;
  out.push_back(ub);
  BoundReport lb = trend_report(BoundId::SymLB, s, spread, base);
  lb.implied_constant = ratio(spread, std::sqrt(2.0) * base);
  lb.context["delta_st"] = s.delta_st_eps;
  lb.context["diameter"] = s.prepared->diam;
  out.push_back(lb);

  double grad = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const std::size_t lo = s.coupling.row_start[i];
    const std::size_t hi = s.coupling.row_start[i + 1];
    if (lo == hi) continue;
    const Point bar = row_barycenter(i, s.coupling, nu);
    for (std::size_t k = lo; k < hi; ++k) grad = std::max(grad, (bar - nu.atom(s.coupling.entries[k].j)).norm());
  }
  BoundReport g = explicit_report(BoundId::GradEstimate, s, grad, 2.0 * spread, spread);
  out.push_back(g);
  return out;
}

std::vector<BoundReport> check_bias(const SolvedInstance& s, double partition) {
  std::vector<BoundReport> out;
  const auto& monge = s.prepared->instance->monge;
  if (!monge) return out;
  const DiscreteMeasure& mu = mu_of(s);
  const DiscreteMeasure& nu = nu_of(s);
  const double L = monge->lipschitz();
  const double d = s.delta_eps;

  std::vector<Point> image(mu.size());
  std::vector<double> gap(mu.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long li = 0; li < static_cast<long>(mu.size()); ++li) {
    const auto i = static_cast<std::size_t>(li);
    const Point x = mu.atom(i);
    image[i] = monge->apply(x);
    gap[i] = s.psi_mu[i] + eval_psi_star(s.surrogate, image[i]) - x.dot(image[i]);
  }
  double alpha = -std::numeric_limits<double>::infinity();
  double integral = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    alpha = std::max(alpha, gap[i]);
    integral += mu.weight(i) * gap[i];
  }

  BoundReport ig = explicit_report(BoundId::IntegralGap, s, integral, 12.0 * d, d);
  out.push_back(ig);

  const double inner = delta(s.prepared->spread, d / (L + 1.0));
  BoundReport dub = trend_report(BoundId::DiscrepancyUB, s, alpha, (L + 1.0) * inner);
  dub.context["alpha"] = alpha;
  dub.context["sqrt_alpha_plus_delta"] = std::sqrt(std::max(alpha, 0.0) + d);
  dub.context["inner_delta"] = inner;
  dub.context["lipschitz"] = L;
  out.push_back(dub);

  const double scale = std::pow(L + 1.0, 1.5);
  const double r_unit = scale * std::sqrt(inner);
  double interior = 0.0;
  double all_pairs = 0.0;
  std::size_t n_interior = 0;
  for (const auto& e : s.coupling.entries) {
    const double bias = (nu.atom(e.j) - image[e.i]).norm();
    all_pairs = std::max(all_pairs, bias);
    if (s.prepared->hull && boundary_distance(mu.atom(e.i), *s.prepared->hull) > partition * r_unit) {
      interior = std::max(interior, bias);
      ++n_interior;
    }
  }
  BoundReport gb = trend_report(BoundId::GeneralBias, s, interior, r_unit);
  gb.defined = s.prepared->hull.has_value() && n_interior > 0;
  gb.context["partition_constant"] = partition;
  gb.context["r"] = r_unit;
  gb.context["interior_pairs"] = n_interior;
  gb.context["boundary_pairs"] = s.coupling.support_size() - n_interior;
  gb.context["lipschitz"] = L;
  out.push_back(gb);

  const double bdry_unit = scale * std::max(std::pow(inner, 0.25), std::sqrt(inner));
  BoundReport bb = trend_report(BoundId::BoundaryBias, s, all_pairs, bdry_unit);
  bb.context["lipschitz"] = L;
  if (s.prepared->path_length) {
    bb.context["path_length"] = *s.prepared->path_length;
    bb.context["path_length_rhs"] = std::sqrt(*s.prepared->path_length) * bdry_unit;
  }
  out.push_back(bb);
  return out;
}

std::vector<BoundReport> run_checks(const SolvedInstance& s, const std::vector<BoundId>& ids,
                                   double partition) {
  auto wanted = [&](BoundId id) { return ids.empty() || std::find(ids.begin(), ids.end(), id) != ids.end(); };
  auto wanted_any = [&](std::initializer_list<BoundId> group) {
    return std::any_of(group.begin(), group.end(), wanted);
  };
  std::vector<BoundReport> all;
  auto take = [&](std::vector<BoundReport> reps) {
    for (auto& r : reps) {
      if (wanted(r.bound_id)) all.push_back(std::move(r));
    }
  };
  if (wanted(BoundId::DensityUB)) all.push_back(check_density_ub(s));
  if (wanted(BoundId::CostSandwich)) {
    if (auto r = check_cost_sandwich(s)) all.push_back(*r);
  }
  if (wanted_any({BoundId::ApproxConj, BoundId::RestrictedConj, BoundId::SupportInclusion12})) {
    take(check_approx_conj(s));
  }
  if (wanted(BoundId::Concentration)) all.push_back(check_concentration(s));
  if (wanted_any({BoundId::SymUB, BoundId::SymLB, BoundId::GradEstimate, BoundId::SuppDiamM})) {
    take(check_self_transport(s));
  }
  if (wanted_any({BoundId::GeneralBias, BoundId::BoundaryBias, BoundId::IntegralGap, BoundId::DiscrepancyUB})) {
    take(check_bias(s, partition));
  }
  return all;
}

ProbeSummary detachment_probes(const ConvexSurrogate& s, const DiscreteMeasure& nu, int count,
                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> xs;
  std::vector<Point> ys;
  for (int k = 0; k < count; ++k) {
    xs.push_back(rng.in_ball(nu.dim()));
    // Random convex combination of up to three nu-atoms stays in the hull.
    double w[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double tot = w[0] + w[1] + w[2];
    Point y = Point::Zero(nu.dim());
    for (double wi : w) y += (wi / tot) * nu.atom(rng.index(nu.size()));
    ys.push_back(y);
  }
  std::vector<double> margin(static_cast<std::size_t>(count), 0.0);
  std::vector<char> finite(static_cast<std::size_t>(count), 0);
#pragma omp parallel for schedule(dynamic, 8)
  for (int k = 0; k < count; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (auto det = quadratic_detachment(s, xs[kk], ys[kk])) {
      finite[kk] = 1;
      margin[kk] = det->gap - std::max(det->lower_bound, det->key_bound);
    }
  }
  ProbeSummary sum;
  sum.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < margin.size(); ++k) {
    if (!finite[k]) continue;
    ++sum.probes;
    if (margin[k] < -kBoundSlack) ++sum.violations;
    sum.worst_margin = std::min(sum.worst_margin, margin[k]);
  }
  return sum;
}

}  // namespace qotlab
