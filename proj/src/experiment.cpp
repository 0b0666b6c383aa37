#include "qotlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "qotlab/error.hpp"
#include "qotlab/svg_plot.hpp"

namespace qotlab {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; })) {
      throw ConfigError("unknown key '" + k + "' in " + where);
    }
  }
}

double get_number(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

int get_int(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<int>();
}

bool get_bool(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
  return v.get<bool>();
}

std::string get_string(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::string short_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", eps);
  return buf;
}

// Lines of a JSON-lines file, one report each.
std::string reports_jsonl(const std::vector<BoundReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

bool needs_tables(const std::optional<std::vector<BoundId>>& checks) {
  return !checks || !checks->empty();
}

PrepareOptions prepare_options(const std::optional<std::vector<BoundId>>& checks) {
  PrepareOptions opts;
  if (!checks) return opts;
  auto has = [&](BoundId id) { return std::find(checks->begin(), checks->end(), id) != checks->end(); };
  opts.exact = has(BoundId::CostSandwich);
  opts.geometry = has(BoundId::GeneralBias) || has(BoundId::BoundaryBias);
  return opts;
}

Json config_echo(const ExperimentConfig& cfg) {
  Json j;
  j["name"] = cfg.name;
  j["instance"] = cfg.instance;
  j["eps"] = cfg.eps;
  j["solver"] = {{"max_sweeps", cfg.solver.max_sweeps},
                 {"residual_tol", cfg.solver.residual_tol},
                 {"support_tol", cfg.solver.support_tol},
                 {"execution", cfg.solver.execution == kernels::Execution::serial ? "serial" : "parallel"}};
  if (cfg.checks) {
    Json c = Json::array();
    for (BoundId id : *cfg.checks) c.push_back(to_string(id));
    j["checks"] = c;
  }
  j["seed"] = cfg.seed;
  j["probes"] = cfg.probes;
  j["rate"] = cfg.rate;
  j["bias_partition"] = cfg.bias_partition;
  return j;
}

void archive_nonconvergent(const ExperimentConfig& cfg, const Instance& inst, double eps,
                           const ConvergenceError& e) {
  const fs::path dir = fs::path(cfg.output_dir) / "fixtures";
  fs::create_directories(dir);
  Json j;
  j["epsilon"] = eps;
  j["residual"] = e.residual();
  j["message"] = e.what();
  j["config"] = config_echo(cfg);
  j["instance"] = instance_to_json(inst);
  write_text_file((dir / ("nonconvergent_" + eps_tag(eps) + ".json")).string(), j.dump(2) + "\n");
}

std::string constants_svg(const std::vector<BoundReport>& reports) {
  std::map<int, PlotSeries> by_id;
  for (const auto& r : reports) {
    if (!r.defined || !(r.implied_constant > 0.0)) continue;
    auto& s = by_id[static_cast<int>(r.bound_id)];
    s.label = to_string(r.bound_id);
    s.x.push_back(r.epsilon);
    s.y.push_back(r.implied_constant);
  }
  std::vector<PlotSeries> series;
  for (auto& [id, s] : by_id) series.push_back(std::move(s));
  return loglog_svg("implied constants", "epsilon", "lhs / eps-factor", series);
}

}  // namespace

GeneratorSpec parse_generator(const Json& j) {
  if (!j.is_object()) throw ConfigError("generator spec must be an object");
  reject_unknown(j, {"family", "name", "d", "h", "a"}, "generator");
  GeneratorSpec g;
  if (!j.contains("family")) throw ConfigError("generator needs a family");
  g.family = get_string(j, "family", "generator");
  if (g.family != "singleton" && g.family != "two_point" && g.family != "grid" && g.family != "affine") {
    throw ConfigError("unknown generator family '" + g.family + "'");
  }
  if (j.contains("name")) g.name = get_string(j, "name", "generator");
  if (j.contains("d")) g.dim = get_int(j, "d", "generator");
  if (j.contains("h")) g.h = get_number(j, "h", "generator");
  if (j.contains("a")) g.a = get_number(j, "a", "generator");
  if (g.dim < 1) throw ConfigError("generator.d must be at least 1");
  if (!(g.h > 0.0)) throw ConfigError("generator.h must be positive");
  if (!(g.a > 0.0)) throw ConfigError("generator.a must be positive");
  if (g.name.empty()) {
    g.name = g.family + "_d" + std::to_string(g.dim);
    if (g.family == "grid" || g.family == "affine") g.name += "_h" + short_number(g.h);
    if (g.family == "affine") g.name += "_a" + short_number(g.a);
  }
  return g;
}

Instance generate_instance(const GeneratorSpec& spec) {
  if (spec.dim > kMaxGeneratorDim) {
    throw ValidationError("dimension " + std::to_string(spec.dim) + " exceeds the generator cap of " +
                          std::to_string(kMaxGeneratorDim));
  }
  const int d = spec.dim;
  Instance inst;
  inst.name = spec.name;
  if (spec.family == "singleton") {
    inst.mu = make_measure(PointList{Point::Zero(d)}, {1.0});
    inst.nu = inst.mu;
    inst.monge = MongeMap::identity(d);
  } else if (spec.family == "two_point") {
    Point a = Point::Zero(d);
    a[0] = -1.0;
    inst.mu = make_measure(PointList{a, -a}, {0.5, 0.5});
    inst.nu = inst.mu;
    inst.monge = MongeMap::identity(d);
  } else if (spec.family == "grid") {
    inst.mu = uniform_ball_grid(d, spec.h);
    inst.nu = inst.mu;
    inst.monge = MongeMap::identity(d);
    inst.grid_h = spec.h;
  } else if (spec.family == "affine") {
    // Source radius keeps the image inside the unit ball.
    inst.mu = ball_grid(d, spec.h, std::min(1.0, 1.0 / spec.a));
    const MongeMap map = MongeMap::affine(spec.a * Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d));
    inst.nu = spec.a == 1.0 ? inst.mu : pushforward(inst.mu, map);
    inst.monge = map;
    inst.grid_h = spec.h;
  } else {
    throw ConfigError("unknown generator family '" + spec.family + "'");
  }
  return inst;
}

Instance instance_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("instance must be an object");
  reject_unknown(j, {"name", "mu", "nu", "monge", "grid_h"}, "instance");
  if (!j.contains("mu")) throw ValidationError("instance needs mu");
  Instance inst;
  inst.name = j.value("name", std::string("instance"));
  inst.mu = measure_from_json(j["mu"]);
  inst.nu = j.contains("nu") ? measure_from_json(j["nu"]) : inst.mu;
  if (inst.mu.dim() != inst.nu.dim()) throw ValidationError("mu and nu live in different dimensions");
  if (j.contains("monge")) inst.monge = monge_from_json(j["monge"], inst.mu);
  if (j.contains("grid_h")) {
    if (!j["grid_h"].is_number() || !(j["grid_h"].get<double>() > 0.0)) {
      throw ValidationError("grid_h must be a positive number");
    }
    inst.grid_h = j["grid_h"].get<double>();
  }
  return inst;
}

Json instance_to_json(const Instance& inst) {
  Json j;
  j["name"] = inst.name;
  j["mu"] = measure_to_json(inst.mu);
  j["nu"] = measure_to_json(inst.nu);
  if (inst.monge) j["monge"] = monge_to_json(*inst.monge, inst.mu);
  if (inst.grid_h) j["grid_h"] = *inst.grid_h;
  return j;
}

void ExperimentConfig::validate() const {
  if (eps.empty()) throw ConfigError("eps must list at least one value");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] > 0.0) || !std::isfinite(eps[k])) throw ConfigError("eps values must be positive and finite");
    if (k > 0 && !(eps[k] < eps[k - 1])) throw ConfigError("eps must be sorted strictly descending");
  }
  SolverConfig probe = solver;
  probe.epsilon = eps.front();
  probe.validate();
  if (probes < 0) throw ConfigError("probes must be nonnegative");
  if (!(bias_partition > 0.0)) throw ConfigError("bias_partition must be positive");
  if (rate && eps.size() < 4) throw ConfigError("a rate fit needs at least 4 eps values");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ExperimentConfig parse_config(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"name", "instance", "eps", "solver", "checks", "output_dir", "seed", "probes", "rate",
                  "bias_partition", "export"},
                 "config");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  if (j.contains("name")) cfg.name = get_string(j, "name", "config");
  if (!j.contains("instance") || !j["instance"].is_object()) throw ConfigError("config needs an instance object");
  cfg.instance = j["instance"];
  if (!j.contains("eps") || !j["eps"].is_array()) throw ConfigError("config needs an eps array");
  for (const auto& v : j["eps"]) {
    if (!v.is_number()) throw ConfigError("eps values must be numbers");
    cfg.eps.push_back(v.get<double>());
  }
  if (j.contains("solver")) {
    const Json& s = j["solver"];
    if (!s.is_object()) throw ConfigError("solver must be an object");
    reject_unknown(s, {"max_sweeps", "residual_tol", "support_tol", "execution"}, "solver");
    if (s.contains("max_sweeps")) cfg.solver.max_sweeps = get_int(s, "max_sweeps", "solver");
    if (s.contains("residual_tol")) cfg.solver.residual_tol = get_number(s, "residual_tol", "solver");
    if (s.contains("support_tol")) cfg.solver.support_tol = get_number(s, "support_tol", "solver");
    if (s.contains("execution")) {
      const std::string e = get_string(s, "execution", "solver");
      if (e == "serial") {
        cfg.solver.execution = kernels::Execution::serial;
      } else if (e == "parallel") {
        cfg.solver.execution = kernels::Execution::parallel;
      } else {
        throw ConfigError("solver.execution must be serial or parallel");
      }
    }
  }
  if (j.contains("checks")) {
    if (!j["checks"].is_array()) throw ConfigError("checks must be an array of bound ids");
    std::vector<BoundId> ids;
    for (const auto& v : j["checks"]) {
      if (!v.is_string()) throw ConfigError("checks must be an array of bound ids");
      ids.push_back(parse_bound_id(v.get<std::string>()));
    }
    cfg.checks = ids;
  }
  if (j.contains("output_dir")) cfg.output_dir = get_string(j, "output_dir", "config");
  if (fs::path(cfg.output_dir).is_relative()) {
    cfg.output_dir = (fs::path(base_dir) / cfg.output_dir).lexically_normal().string();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("probes")) cfg.probes = get_int(j, "probes", "config");
  if (j.contains("rate")) cfg.rate = get_bool(j, "rate", "config");
  if (j.contains("bias_partition")) cfg.bias_partition = get_number(j, "bias_partition", "config");
  if (j.contains("export")) cfg.export_solutions = get_bool(j, "export", "config");
  cfg.validate();
  return cfg;
}

Instance load_instance(const ExperimentConfig& cfg) {
  const Json& src = cfg.instance;
  if (src.contains("file")) {
    if (src.size() != 1 || !src["file"].is_string()) throw ConfigError("instance.file must be the only key");
    fs::path p = src["file"].get<std::string>();
    if (p.is_relative()) p = fs::path(cfg.base_dir) / p;
    return instance_from_json(read_json_file(p.string()));
  }
  if (src.contains("generate")) {
    if (src.size() != 1) throw ConfigError("instance.generate must be the only key");
    return generate_instance(parse_generator(src["generate"]));
  }
  return instance_from_json(src);
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Instance inst = load_instance(cfg);
  const PreparedInstance prep = prepare(inst, prepare_options(cfg.checks));
  if (cfg.rate) {
    if (!prep.self_transport) throw ConfigError("the rate sweep needs mu == nu");
    if (inst.grid_h) check_discretization_floor(*inst.grid_h, inst.mu.dim(), cfg.eps.back());
  }
  fs::create_directories(cfg.output_dir);
  const fs::path out = cfg.output_dir;

  RunResult result;
  std::vector<double> spreads;
  for (std::size_t k = 0; k < cfg.eps.size(); ++k) {
    SolverConfig sc = cfg.solver;
    sc.epsilon = cfg.eps[k];
    SolvedInstance s;
    try {
      s = solve_instance(prep, sc, needs_tables(cfg.checks));
    } catch (const ConvergenceError& e) {
      archive_nonconvergent(cfg, inst, sc.epsilon, e);
      throw;
    }
    if (needs_tables(cfg.checks)) {
      auto reps = run_checks(s, cfg.checks ? *cfg.checks : std::vector<BoundId>{}, cfg.bias_partition);
      for (auto& r : reps) {
        r.context["instance"] = inst.name;
        result.reports.push_back(std::move(r));
      }
    }
    EpsilonSummary es;
    es.epsilon = sc.epsilon;
    es.sweeps = s.pot.sweeps;
    es.residual = s.pot.residual();
    es.support_size = s.coupling.support_size();
    es.support_spread = support_spread(s);
    if (cfg.probes > 0) es.probes = detachment_probes(s.surrogate, inst.nu, cfg.probes, cfg.seed + k);
    spreads.push_back(es.support_spread);
    result.per_eps.push_back(es);

    if (cfg.export_solutions) {
      const std::string tag = eps_tag(sc.epsilon);
      write_text_file((out / ("potentials_" + tag + ".json")).string(), potentials_to_json(s.pot).dump() + "\n");
      write_text_file((out / ("coupling_" + tag + ".json")).string(), coupling_to_json(s.coupling).dump() + "\n");
      write_text_file((out / ("surrogate_" + tag + ".json")).string(),
                      surrogate_to_json(s.surrogate).dump() + "\n");
    }
  }
  if (cfg.export_solutions && prep.exact) {
    write_text_file((out / "exact_potentials.json").string(), exact_potentials_to_json(*prep.exact).dump() + "\n");
    write_text_file((out / "exact_coupling.json").string(), coupling_to_json(prep.exact->coupling).dump() + "\n");
  }

  sort_reports(result.reports);
  for (const auto& r : result.reports) {
    if (r.holds && !*r.holds) result.failed.push_back(std::string(to_string(r.bound_id)) + "@" + eps_tag(r.epsilon));
  }
  for (const auto& es : result.per_eps) {
    if (es.probes && es.probes->violations > 0) result.failed.push_back("QuadraticDetachment@" + eps_tag(es.epsilon));
  }
  write_text_file((out / "reports.jsonl").string(), reports_jsonl(result.reports));
  write_text_file((out / "constants.svg").string(), constants_svg(result.reports));

  if (cfg.rate) {
    result.rate = fit_rate(cfg.eps, spreads);
    const RateFit& fit = *result.rate;
    write_text_file((out / "rates.csv").string(), rate_csv(fit));
    Json rs;
    rs["observable"] = "support_spread";
    rs["dim"] = inst.mu.dim();
    rs["target_slope"] = 1.0 / (inst.mu.dim() + 2);
    rs["slope"] = fit.slope;
    rs["intercept"] = fit.intercept;
    rs["r_squared"] = fit.r_squared;
    rs["eps_grid"] = fit.eps_grid;
    rs["observable_values"] = fit.observable;
    write_text_file((out / "rate_summary.json").string(), rs.dump(2) + "\n");
    PlotSeries series{"sup |x - y|", fit.eps_grid, fit.observable};
    PlotLine line{"fit slope " + short_number(fit.slope), fit.slope, fit.intercept};
    write_text_file((out / "rate.svg").string(),
                    loglog_svg(inst.name + ": support spread", "epsilon", "sup |x - y|", {series}, line));
  }

  Json summary;
  summary["name"] = cfg.name;
  summary["instance"] = inst.name;
  summary["dim"] = inst.mu.dim();
  summary["mu_atoms"] = inst.mu.size();
  summary["nu_atoms"] = inst.nu.size();
  summary["self_transport"] = prep.self_transport;
  if (prep.exact) summary["exact_cost"] = prep.exact->cost;
  Json runs = Json::array();
  for (const auto& es : result.per_eps) {
    Json r;
    r["epsilon"] = es.epsilon;
    r["sweeps"] = es.sweeps;
    r["residual"] = es.residual;
    r["support_size"] = es.support_size;
    r["support_spread"] = es.support_spread;
    if (es.probes) {
      r["probes"] = {{"count", es.probes->probes},
                     {"violations", es.probes->violations},
                     {"worst_margin", es.probes->worst_margin}};
    }
    runs.push_back(r);
  }
  summary["runs"] = runs;
  summary["failed"] = result.failed;
  result.exit_code = result.failed.empty() ? kExitOk : kExitCheckFailed;
  summary["exit_code"] = result.exit_code;
  write_text_file((out / "summary.json").string(), summary.dump(2) + "\n");
  return result;
}

std::vector<std::string> generate_files(const Json& spec, const std::string& dir) {
  std::vector<GeneratorSpec> specs;
  if (spec.is_array()) {
    for (const auto& s : spec) specs.push_back(parse_generator(s));
  } else {
    specs.push_back(parse_generator(spec));
  }
  std::vector<Instance> instances;
  for (const auto& s : specs) instances.push_back(generate_instance(s));
  fs::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto& inst : instances) {
    const std::string path = (fs::path(dir) / (inst.name + ".json")).string();
    write_text_file(path, instance_to_json(inst).dump(2) + "\n");
    paths.push_back(path);
  }
  return paths;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ValidationError*>(&e)) return kExitConfig;
  if (dynamic_cast<const ConvergenceError*>(&e)) return kExitNonConvergence;
  return kExitInternal;
}

Json error_record(const std::exception& e, int exit_code) {
  Json j;
  const auto* err = dynamic_cast<const Error*>(&e);
  j["error"] = err ? err->kind() : "internal";
  j["message"] = e.what();
  j["exit_code"] = exit_code;
  if (const auto* ce = dynamic_cast<const ConvergenceError*>(&e)) j["residual"] = ce->residual();
  return j;
}

}  // namespace qotlab
