#include <cmath>
#include <fstream>

#include "doctest.h"
#include "oracles/oracles.hpp"
#include "qotlab/error.hpp"
#include "qotlab/io.hpp"
#include "qotlab/kernels.hpp"
#include "qotlab/qot_solver.hpp"
#include "qotlab/random.hpp"

using namespace qotlab;

namespace {

Point p1(double x) { return Point::Constant(1, x); }

Eigen::MatrixXd dense(const Coupling& c) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.rows), static_cast<Eigen::Index>(c.cols));
  for (const auto& e : c.entries) m(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = e.mass;
  return m;
}

SolverConfig at(double eps) {
  SolverConfig c;
  c.epsilon = eps;
  return c;
}

DiscreteMeasure random_measure(Rng& rng, int n, int d) {
  PointList atoms;
  std::vector<double> w;
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    atoms.push_back(rng.in_ball(d, 0.95));
    w.push_back(0.1 + rng.uniform());
    total += w.back();
  }
  for (double& x : w) x /= total;
  return make_measure(atoms, w);
}

}  // namespace

TEST_CASE("scalar update examples") {
  const std::vector<double> s1{0.5}, w1{1.0};
  CHECK(solve_scalar_update(s1, w1, 0.1) == doctest::Approx(0.6));
  const std::vector<double> s2{0.0, 0.0}, w2{0.5, 0.5};
  CHECK(solve_scalar_update(s2, w2, 1.0) == doctest::Approx(1.0));
  const std::vector<double> s3{0.0, 1.0};
  const double t = solve_scalar_update(s3, w2, 0.2);
  CHECK(t == doctest::Approx(0.4));
  CHECK(0.5 * std::max(t, 0.0) + 0.5 * std::max(t - 1.0, 0.0) == doctest::Approx(0.2));
  CHECK_THROWS_AS(solve_scalar_update(std::vector<double>{}, std::vector<double>{}, 0.1), ValidationError);
  CHECK_THROWS_AS(solve_scalar_update(s1, w1, 0.0), ValidationError);
  CHECK_THROWS_AS(solve_scalar_update(s1, std::vector<double>{0.0}, 0.1), ValidationError);
}

TEST_CASE("piecewise linear inversion against the defining equation") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(30);
    std::vector<double> s(n), w(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = rng.uniform(-2.0, 2.0);
      w[k] = 0.01 + rng.uniform();
    }
    const double eps = std::pow(10.0, rng.uniform(-5.0, 0.0));
    const double t = solve_scalar_update(s, w, eps);
    double lhs = 0.0;
    for (std::size_t k = 0; k < n; ++k) lhs += w[k] * std::max(t - s[k], 0.0);
    CHECK(lhs == doctest::Approx(eps).epsilon(1e-12));
  }
}

TEST_CASE("one-atom systems solved by hand") {
  const auto d0 = make_measure(PointList{p1(0.0)}, {1.0});
  const auto pot = solve(d0, d0, at(0.1));
  CHECK(pot.f[0] == doctest::Approx(0.05));
  CHECK(pot.g[0] == doctest::Approx(0.05));
  CHECK(pot.normalization == std::string(kEqualMeansNormalization));
  const auto cp = assemble_coupling(pot, d0, d0, at(0.1));
  REQUIRE(cp.support_size() == 1);
  CHECK(cp.entries[0].mass == doctest::Approx(1.0));
  CHECK(cp.entries[0].density == doctest::Approx(1.0));
  CHECK(max_density(pot, d0, d0).value == doctest::Approx(0.1));

  const auto dh = make_measure(PointList{p1(0.5)}, {1.0});
  const auto pot2 = solve(d0, dh, at(0.1));
  CHECK(pot2.f[0] + pot2.g[0] - 0.125 == doctest::Approx(0.1));
  CHECK(pot2.f[0] == doctest::Approx(0.1125));
  CHECK(pot2.g[0] == doctest::Approx(0.1125));
}

TEST_CASE("evaluate_f_at and evaluate_g_at") {
  const auto d0 = make_measure(PointList{p1(0.0)}, {1.0});
  DualPotentials pot;
  pot.f = {0.05};
  pot.g = {0.05};
  pot.epsilon = 0.1;
  CHECK(evaluate_f_at(p1(0.0), pot, d0) == doctest::Approx(0.05));
  CHECK(evaluate_g_at(p1(0.0), pot, d0) == doctest::Approx(0.05));

  const auto mu = uniform_ball_grid(1, 0.1);
  const auto solved = solve(mu, mu, at(0.01));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    CHECK(std::abs(evaluate_f_at(mu.atom(i), solved, mu) - solved.f[i]) <= 1e-8);
  }
}

TEST_CASE("self-transport potentials are bitwise equal") {
  const auto mu = uniform_ball_grid(1, 0.05);
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto pot = solve(mu, mu, at(eps));
    CHECK(pot.f == pot.g);
    CHECK(pot.residual() <= 1e-10);
  }
}

TEST_CASE("two-point potentials and coupling match the frozen oracle") {
  const Json fx = read_json_file(std::string(QOTLAB_FIXTURES) + "/two_point_oracle.json");
  const auto mu = measure_from_json(fx["mu"]);
  const auto nu = measure_from_json(fx["nu"]);
  for (const auto& run : fx["runs"]) {
    const double eps = run["epsilon"];
    CAPTURE(eps);
    const auto pot = solve(mu, nu, at(eps));
    for (std::size_t i = 0; i < mu.size(); ++i) {
      CHECK(std::abs(pot.f[i] - run["f"][i].get<double>()) <= 1e-6);
      CHECK(std::abs(pot.g[i] - run["g"][i].get<double>()) <= 1e-6);
    }
    const auto cp = assemble_coupling(pot, mu, nu, at(eps));
    const Eigen::MatrixXd got = dense(cp);
    double frob = 0.0;
    for (Eigen::Index i = 0; i < got.rows(); ++i) {
      for (Eigen::Index j = 0; j < got.cols(); ++j) {
        frob += std::pow(got(i, j) - run["plan"][i][j].get<double>(), 2);
      }
    }
    CHECK(std::sqrt(frob) <= 1e-6);
  }
}

TEST_CASE("random small instances match the frozen oracle") {
  for (const char* name : {"random_3x4_d1_oracle.json", "random_5x5_d2_oracle.json"}) {
    const Json fx = read_json_file(std::string(QOTLAB_FIXTURES) + "/" + name);
    const auto mu = measure_from_json(fx["mu"]);
    const auto nu = measure_from_json(fx["nu"]);
    for (const auto& run : fx["runs"]) {
      const double eps = run["epsilon"];
      CAPTURE(name);
      CAPTURE(eps);
      const auto pot = solve(mu, nu, at(eps));
      const Eigen::MatrixXd got = dense(assemble_coupling(pot, mu, nu, at(eps)));
      double frob = 0.0;
      for (Eigen::Index i = 0; i < got.rows(); ++i) {
        for (Eigen::Index j = 0; j < got.cols(); ++j) {
          frob += std::pow(got(i, j) - run["plan"][i][j].get<double>(), 2);
        }
      }
      CHECK(std::sqrt(frob) <= 1e-6);
    }
  }
}

TEST_CASE("fresh random instances match the live oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const auto mu = random_measure(rng, 2 + static_cast<int>(rng.index(4)), 2);
    const auto nu = random_measure(rng, 2 + static_cast<int>(rng.index(4)), 2);
    const double eps = 0.05;
    const Eigen::MatrixXd ref = oracle::qot_plan(mu, nu, eps);
    const Eigen::MatrixXd got = dense(assemble_coupling(solve(mu, nu, at(eps)), mu, nu, at(eps)));
    CHECK((got - ref).norm() <= 1e-6);
  }
}

TEST_CASE("coupling marginals match the weights") {
  const auto mu = uniform_ball_grid(1, 0.05);
  const auto nu = pushforward(mu, MongeMap::affine(Eigen::MatrixXd::Constant(1, 1, 0.7), Eigen::VectorXd::Zero(1)));
  const auto cfg = at(0.003);
  const auto pot = solve(mu, nu, cfg);
  const auto cp = assemble_coupling(pot, mu, nu, cfg);
  CHECK(cp.mass_residual <= 1e-9);
  CHECK(cp.equation_residual <= 1e-9);
  for (std::size_t i = 0; i < mu.size(); ++i) CHECK(std::abs(cp.row_sums[i] - mu.weight(i)) <= 1e-9);
  for (std::size_t j = 0; j < nu.size(); ++j) CHECK(std::abs(cp.col_sums[j] - nu.weight(j)) <= 1e-9);
  CHECK(max_density(pot, mu, nu).value >= cfg.epsilon - 1e-12);
}

TEST_CASE("row barycenter is the nu-weighted mean of the supported columns") {
  const auto three = make_measure(PointList{p1(-1.0), p1(0.0), p1(1.0)}, {0.2, 0.3, 0.5});
  const auto cfg = at(0.05);
  const auto pot = solve(three, three, cfg);
  const auto cp = assemble_coupling(pot, three, three, cfg);
  for (std::size_t i = 0; i < three.size(); ++i) {
    double mass = 0.0, acc = 0.0;
    for (std::size_t j = 0; j < three.size(); ++j) {
      if (!cp.contains(i, j)) continue;
      mass += three.weight(j);
      acc += three.weight(j) * three.atom(j)[0];
    }
    CHECK(row_barycenter(i, cp, three)[0] == doctest::Approx(acc / mass));
  }
  // Full support on the symmetric pair: barycenter at the origin.
  const auto two = make_measure(PointList{p1(-1.0), p1(1.0)}, {0.5, 0.5});
  const auto big = at(10.0);
  const auto cp2 = assemble_coupling(solve(two, two, big), two, two, big);
  REQUIRE(cp2.support_size() == 4);
  CHECK(row_barycenter(0, cp2, two)[0] == doctest::Approx(0.0));

  const auto d0 = make_measure(PointList{p1(0.3)}, {1.0});
  const auto cp1 = assemble_coupling(solve(d0, d0, at(0.1)), d0, d0, at(0.1));
  CHECK(row_barycenter(0, cp1, d0)[0] == doctest::Approx(0.3));
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  const auto mu = uniform_ball_grid(2, 0.1);
  const auto nu = pushforward(mu, MongeMap::affine(Eigen::MatrixXd::Identity(2, 2) * 0.8, Eigen::VectorXd::Zero(2)));
  SolverConfig s = at(0.01);
  s.execution = kernels::Execution::serial;
  SolverConfig p = s;
  p.execution = kernels::Execution::parallel;
  const auto a = solve(mu, nu, s);
  const auto b = solve(mu, nu, p);
  CHECK(a.f == b.f);
  CHECK(a.g == b.g);
  CHECK(a.sweeps == b.sweeps);

  const kernels::CostMatrix cost(mu, nu);
  std::vector<double> w(nu.weights().data(), nu.weights().data() + nu.size());
  std::vector<double> o1(mu.size()), o2(mu.size());
  kernels::update_block(kernels::Execution::serial, cost, false, a.g, w, 0.01, o1);
  kernels::update_block(kernels::Execution::parallel, cost, false, a.g, w, 0.01, o2);
  CHECK(o1 == o2);
  CHECK(kernels::block_residuals(kernels::Execution::serial, cost, false, a.f, a.g, w, 0.01) ==
        kernels::block_residuals(kernels::Execution::parallel, cost, false, a.f, a.g, w, 0.01));
}

TEST_CASE("config and convergence errors") {
  const auto mu = uniform_ball_grid(1, 0.05);
  SolverConfig bad = at(0.0);
  CHECK_THROWS_AS(solve(mu, mu, bad), ConfigError);
  bad = at(0.1);
  bad.residual_tol = -1.0;
  CHECK_THROWS_AS(solve(mu, mu, bad), ConfigError);
  SolverConfig tight = at(1e-4);
  tight.max_sweeps = 2;
  try {
    solve(mu, mu, tight);
    FAIL("expected non-convergence");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > tight.residual_tol);
  }
  const auto d2 = make_measure(PointList{Point::Zero(2)}, {1.0});
  CHECK_THROWS_AS(solve(mu, d2, at(0.1)), ValidationError);
}

TEST_CASE("stale potentials are detected") {
  const auto mu = uniform_ball_grid(1, 0.1);
  auto pot = solve(mu, mu, at(0.01));
  pot.f[3] += 0.01;
  CHECK_THROWS_AS(assemble_coupling(pot, mu, mu, at(0.01)), InconsistencyError);
}
