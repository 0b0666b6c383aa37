// One line per acceptance criterion; exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/oracles.hpp"
#include "qotlab/experiment.hpp"
#include "qotlab/geometry.hpp"
#include "qotlab/random.hpp"
#include "qotlab/surrogate.hpp"

using namespace qotlab;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = QOTLAB_CONFIGS;
const std::string kFixtures = QOTLAB_FIXTURES;
const fs::path kScratch = fs::path(QOTLAB_SCRATCH) / "acceptance";

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> decades(double from, double to, double step) {
  std::vector<double> out;
  for (double e = from; e >= to - 1e-9; e -= step) out.push_back(std::pow(10.0, e));
  return out;
}

SolverConfig at(double eps) {
  SolverConfig cfg;
  cfg.epsilon = eps;
  return cfg;
}

std::vector<Instance> shipped_instances() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(kConfigs + "/instances")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Instance> out;
  for (const auto& p : files) out.push_back(instance_from_json(read_json_file(p.string())));
  return out;
}

// Sup-norm residual of both marginal equations, straight from the definition.
double equation_residual(const DualPotentials& pot, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         double eps) {
  double worst = 0.0;
  for (std::size_t j = 0; j < nu.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      s += mu.weight(i) * std::max(0.0, pot.f[i] + pot.g[j] - 0.5 * (mu.atom(i) - nu.atom(j)).squaredNorm());
    }
    worst = std::max(worst, std::abs(s - eps));
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < nu.size(); ++j) {
      s += nu.weight(j) * std::max(0.0, pot.f[i] + pot.g[j] - 0.5 * (mu.atom(i) - nu.atom(j)).squaredNorm());
    }
    worst = std::max(worst, std::abs(s - eps));
  }
  return worst;
}

Eigen::MatrixXd dense(const Coupling& c) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.rows), static_cast<Eigen::Index>(c.cols));
  for (const auto& e : c.entries) p(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = e.mass;
  return p;
}

Outcome fidelity() {
  Outcome o;
  double worst = 0.0;
  double slowest = 0.0;
  std::string slowest_name;
  const auto eps_grid = decades(-1.0, -4.0, 0.5);
  const auto instances = shipped_instances();
  for (const auto& inst : instances) {
    const auto t0 = Clock::now();
    for (double eps : eps_grid) {
      const DualPotentials pot = solve(inst.mu, inst.nu, at(eps));
      worst = std::max(worst, equation_residual(pot, inst.mu, inst.nu, eps));
    }
    const double t = seconds_since(t0);
    if (t > slowest) {
      slowest = t;
      slowest_name = inst.name;
    }
  }
  o.pass = instances.size() == 8 && worst <= 1e-10 && slowest <= 60.0;
  o.detail = std::to_string(instances.size()) + " instances x " + std::to_string(eps_grid.size()) +
             " eps, max residual " + fmt("%.2e", worst) + ", slowest " + slowest_name + " " + fmt("%.2f s", slowest);
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  std::vector<Instance> small;
  for (auto& inst : shipped_instances()) {
    if (inst.mu.size() <= 5 && inst.nu.size() <= 5) small.push_back(inst);
  }
  for (const char* f : {"random_3x4_d1_oracle.json", "random_5x5_d2_oracle.json"}) {
    const Json fx = read_json_file(kFixtures + "/" + f);
    Instance inst;
    inst.name = f;
    inst.mu = measure_from_json(fx["mu"]);
    inst.nu = measure_from_json(fx["nu"]);
    small.push_back(inst);
  }
  double worst = 0.0;
  int compared = 0;
  for (const auto& inst : small) {
    for (double eps : {1.0, 0.1, 0.01}) {
      const SolverConfig cfg = at(eps);
      const DualPotentials pot = solve(inst.mu, inst.nu, cfg);
      const Eigen::MatrixXd plan = dense(assemble_coupling(pot, inst.mu, inst.nu, cfg));
      worst = std::max(worst, (plan - oracle::qot_plan(inst.mu, inst.nu, eps)).norm());
      ++compared;
    }
  }
  o.pass = small.size() >= 4 && worst <= 1e-6;
  o.detail = std::to_string(small.size()) + " instances, " + std::to_string(compared) +
             " plans, max Frobenius gap " + fmt("%.2e", worst);
  return o;
}

Outcome explicit_suite() {
  Outcome o;
  int checked = 0;
  std::vector<std::string> failed;
  std::vector<int> seen(all_bound_ids().size(), 0);
  for (const auto& inst : shipped_instances()) {
    const PreparedInstance prep = prepare(inst);
    for (double eps : decades(-1.0, -4.0, 0.5)) {
      const SolvedInstance s = solve_instance(prep, at(eps));
      for (const auto& r : run_checks(s, {})) {
        if (!r.explicit_constant) continue;
        ++checked;
        ++seen[static_cast<std::size_t>(r.bound_id)];
        if (!r.holds || !*r.holds) failed.push_back(inst.name + ":" + to_string(r.bound_id) + "@" + fmt("%g", eps));
      }
    }
  }
  for (BoundId id : {BoundId::DensityUB, BoundId::ApproxConj, BoundId::RestrictedConj, BoundId::SupportInclusion12,
                     BoundId::SuppDiamM, BoundId::CostSandwich, BoundId::Concentration, BoundId::IntegralGap}) {
    if (seen[static_cast<std::size_t>(id)] == 0) failed.push_back(std::string("never checked: ") + to_string(id));
  }
  o.pass = failed.empty();
  o.detail = std::to_string(checked) + " explicit checks, " + std::to_string(failed.size()) + " failed";
  if (!failed.empty()) o.detail += " (first " + failed.front() + ")";
  return o;
}

struct RateRun {
  RateFit fit;
  double seconds;
};

RateRun rate_sweep(int d, double h, const std::vector<double>& eps_grid) {
  const auto t0 = Clock::now();
  check_discretization_floor(h, d, eps_grid.back());
  GeneratorSpec spec;
  spec.family = "grid";
  spec.dim = d;
  spec.h = h;
  const Instance inst = generate_instance(spec);
  const PreparedInstance prep = prepare(inst, PrepareOptions{false, false});
  std::vector<double> obs;
  for (double eps : eps_grid) obs.push_back(support_spread(solve_instance(prep, at(eps), false)));
  return {fit_rate(eps_grid, obs), seconds_since(t0)};
}

Outcome self_transport_rate() {
  Outcome o;
  const RateRun one = rate_sweep(1, 0.005, decades(-1.0, -3.5, 0.5));
  const RateRun two = rate_sweep(2, 0.05, decades(-1.0, -2.25, 0.25));
  const bool ok1 = one.fit.slope >= 0.25 && one.fit.slope <= 0.45 && one.fit.r_squared >= 0.95 && one.seconds <= 600.0;
  const bool ok2 = two.fit.slope >= 0.17 && two.fit.slope <= 0.33;
  o.pass = ok1 && ok2;
  o.detail = "d=1 slope " + fmt("%.4f", one.fit.slope) + " r2 " + fmt("%.4f", one.fit.r_squared) + " in " +
             fmt("%.1f s", one.seconds) + "; d=2 slope " + fmt("%.4f", two.fit.slope) + " r2 " +
             fmt("%.4f", two.fit.r_squared) + " in " + fmt("%.1f s", two.seconds);
  return o;
}

DiscreteMeasure random_measure(Rng& rng, int d, std::size_t n) {
  PointList atoms;
  std::vector<double> w;
  double tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    atoms.push_back(rng.in_ball(d));
    w.push_back(rng.uniform(0.2, 1.0));
    tot += w.back();
  }
  for (double& v : w) v /= tot;
  return make_measure(atoms, w);
}

Outcome property_suites() {
  constexpr double slack = 1e-8;
  Rng rng(20261016);
  int minty = 0, minty_bad = 0;
  int probes = 0, probe_bad = 0;
  int lip = 0, lip_bad = 0;
  int conc = 0, conc_bad = 0;
  int dl = 0, dl_bad = 0;
  int grad = 0, grad_bad = 0;

  for (int inst = 0; inst < 10; ++inst) {
    const int d = 1 + inst % 2;
    const double eps = std::pow(10.0, -1.0 - 0.25 * inst);
    const DiscreteMeasure mu = random_measure(rng, d, 20 + rng.index(20));
    const DiscreteMeasure nu = random_measure(rng, d, 20 + rng.index(20));
    const DualPotentials pot = solve(mu, nu, at(eps));
    const ConvexSurrogate s = build_surrogate(pot, nu, delta(build_spread(mu), eps));
    for (int k = 0; k < 100; ++k, ++minty) {
      const Point u = rng.in_ball(d, 2.0);
      const Point v = rng.in_ball(d, 2.0);
      const double lhs = (minty_reflect(s, u).reflection - minty_reflect(s, v).reflection).norm();
      if (lhs > (u - v).norm() + slack) ++minty_bad;
    }
    const ProbeSummary ps = detachment_probes(s, nu, 100, 900 + static_cast<std::uint64_t>(inst));
    probes += ps.probes;
    probe_bad += ps.violations;
    for (int k = 0; k < 10; ++k, ++lip, ++conc) {
      const Point x = rng.in_ball(d);
      const Point y = rng.in_ball(d);
      const double t = rng.uniform();
      const double fx = evaluate_f_at(x, pot, nu);
      const double fy = evaluate_f_at(y, pot, nu);
      if (std::abs(fx - fy) > 2.0 * (x - y).norm() + slack) ++lip_bad;
      const Point z = t * x + (1.0 - t) * y;
      const double hz = evaluate_f_at(z, pot, nu) - 0.5 * z.squaredNorm();
      if (hz < t * (fx - 0.5 * x.squaredNorm()) + (1.0 - t) * (fy - 0.5 * y.squaredNorm()) - slack) ++conc_bad;
    }
  }

  for (int k = 0; k < 50; ++k, ++dl) {
    const int d = 1 + static_cast<int>(rng.index(3));
    const DiscreteMeasure mu = random_measure(rng, d, 2 + rng.index(25));
    const SpreadProfile sp = build_spread(mu);
    const double eps = std::pow(10.0, rng.uniform(-4.0, 0.5));
    const double t = rng.uniform(1.0, 10.0);
    const double a = delta(sp, eps);
    const double b = delta_st(sp, eps);
    const double big = std::max(diameter(mu), 2.0) + eps;
    const bool ok = a >= eps && b >= eps && delta(sp, t * eps) >= a && delta_st(sp, t * eps) >= b &&
                    delta(sp, t * eps) <= t * a + slack && delta_st(sp, t * eps) <= t * b + slack &&
                    std::abs(delta(sp, big) - big) <= slack && std::abs(delta_st(sp, big * big) - big * big) <= slack;
    if (!ok) ++dl_bad;
  }

  for (int inst = 0; inst < 6; ++inst) {
    Instance in;
    in.mu = random_measure(rng, 1 + inst % 2, 30);
    in.nu = in.mu;
    const PreparedInstance prep = prepare(in, PrepareOptions{false, false});
    for (double eps : {0.1, 0.01, 0.001}) {
      const SolvedInstance s = solve_instance(prep, at(eps), false);
      const double spread = support_spread(s);
      for (std::size_t i = 0; i < in.mu.size(); ++i) {
        if (s.coupling.row_start[i] == s.coupling.row_start[i + 1]) continue;
        const Point bar = row_barycenter(i, s.coupling, in.nu);
        for (std::size_t k = s.coupling.row_start[i]; k < s.coupling.row_start[i + 1]; ++k, ++grad) {
          if ((bar - in.nu.atom(s.coupling.entries[k].j)).norm() > 2.0 * spread + slack) ++grad_bad;
        }
      }
    }
  }

  Outcome o;
  const int bad = minty_bad + probe_bad + lip_bad + conc_bad + dl_bad + grad_bad;
  o.pass = bad == 0 && minty >= 1000 && probes >= 1000 && lip >= 100 && conc >= 100 && dl >= 50 && grad > 0;
  std::ostringstream os;
  os << "violations: minty " << minty_bad << "/" << minty << ", detachment " << probe_bad << "/" << probes
     << ", 2-Lipschitz " << lip_bad << "/" << lip << ", concavity " << conc_bad << "/" << conc << ", delta "
     << dl_bad << "/" << dl << ", gradient estimate " << grad_bad << "/" << grad;
  o.detail = os.str();
  return o;
}

Outcome bias_trend() {
  Outcome o;
  const auto eps_grid = decades(-1.0, -4.0, 0.5);
  std::ostringstream os;
  for (double a : {0.5, 1.0, 2.0}) {
    GeneratorSpec spec;
    spec.family = "affine";
    spec.h = 0.005;
    spec.a = a;
    const Instance inst = generate_instance(spec);
    const PreparedInstance prep = prepare(inst, PrepareOptions{false, true});
    std::vector<double> general;
    std::vector<double> boundary;
    std::vector<double> interior;
    bool defined = true;
    for (double eps : eps_grid) {
      const SolvedInstance s = solve_instance(prep, at(eps));
      for (const auto& r : run_checks(s, {BoundId::GeneralBias, BoundId::BoundaryBias})) {
        defined = defined && r.defined && r.implied_constant > 0.0;
        if (r.bound_id == BoundId::GeneralBias) {
          general.push_back(r.implied_constant);
          interior.push_back(r.lhs);
        } else {
          boundary.push_back(r.implied_constant);
        }
      }
    }
    auto spread = [](const std::vector<double>& v) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      return *lo > 0.0 ? *hi / *lo : INFINITY;
    };
    bool monotone = true;
    for (std::size_t k = 1; k < interior.size(); ++k) monotone = monotone && interior[k] <= 1.1 * interior[k - 1];
    const double rg = spread(general);
    const double rb = spread(boundary);
    const bool ok = defined && general.size() == eps_grid.size() && boundary.size() == eps_grid.size() &&
                    rg <= 10.0 && rb <= 10.0 && monotone;
    o.pass = o.pass && ok;
    os << "a=" << a << ": ratio general " << fmt("%.2f", rg) << " boundary " << fmt("%.2f", rb)
       << (monotone ? " monotone" : " NOT monotone") << "; ";
  }
  o.detail = os.str();
  o.detail.resize(o.detail.size() - 2);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Json raw = read_json_file(kConfigs + "/affine_d1.json");
  std::string first;
  bool same = true;
  for (const char* tag : {"run_a", "run_b"}) {
    raw["output_dir"] = (kScratch / tag).string();
    fs::remove_all(kScratch / tag);
    const ExperimentConfig cfg = parse_config(raw, kConfigs);
    run_experiment(cfg);
    const std::string text = slurp(kScratch / tag / "reports.jsonl");
    if (first.empty()) {
      first = text;
    } else {
      same = text == first;
    }
  }
  Outcome o;
  o.pass = same && !first.empty();
  o.detail = "reports.jsonl " + std::to_string(first.size()) + " bytes, " + (same ? "identical" : "different");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"dual-system fidelity", fidelity},
      {"oracle equivalence", oracle_equivalence},
      {"explicit-constant suite", explicit_suite},
      {"self-transport rate", self_transport_rate},
      {"property suites", property_suites},
      {"bias-bound trend", bias_trend},
      {"determinism", determinism},
  };
  int failures = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
