#include "qotlab/io.hpp"

#include <fstream>
#include <sstream>

#include "qotlab/error.hpp"

namespace qotlab {

namespace {

double number(const Json& v, const char* what) {
  if (!v.is_number()) throw ValidationError(std::string(what) + " must be a number");
  return v.get<double>();
}

Json point_json(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < p.size(); ++k) a.push_back(p[k]);
  return a;
}

Eigen::MatrixXd matrix_from(const Json& rows, Eigen::Index cols, const char* what) {
  if (!rows.is_array()) throw ValidationError(std::string(what) + " must be an array");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Json& r = rows[i];
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols) {
      throw ValidationError(std::string(what) + " rows must have " + std::to_string(cols) + " entries");
    }
    for (std::size_t k = 0; k < r.size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number(r[k], what);
  }
  return m;
}

}  // namespace

DiscreteMeasure measure_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("atoms") || !j.contains("weights")) {
    throw ValidationError("measure needs dim, atoms and weights");
  }
  if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1) {
    throw ValidationError("measure dim must be a positive integer");
  }
  const int d = j["dim"].get<int>();
  const Eigen::MatrixXd atoms = matrix_from(j["atoms"], d, "atoms");
  const Json& w = j["weights"];
  if (!w.is_array()) throw ValidationError("weights must be an array");
  Eigen::VectorXd weights(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) weights[static_cast<Eigen::Index>(i)] = number(w[i], "weights");
  return make_measure(atoms, weights);
}

Json measure_to_json(const DiscreteMeasure& mu) {
  Json j;
  j["dim"] = mu.dim();
  Json atoms = Json::array();
  for (Eigen::Index i = 0; i < mu.atoms().rows(); ++i) atoms.push_back(point_json(mu.atoms().row(i)));
  j["atoms"] = atoms;
  Json w = Json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) w.push_back(mu.weight(i));
  j["weights"] = w;
  return j;
}

MongeMap monge_from_json(const Json& j, const DiscreteMeasure& mu) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ValidationError("monge map needs a kind");
  }
  const std::string kind = j["kind"];
  const int d = mu.dim();
  if (kind == "identity") return MongeMap::identity(d);
  if (kind == "affine") {
    const Eigen::MatrixXd A = matrix_from(j.at("A"), d, "A");
    if (A.rows() != d) throw ValidationError("A must be d x d");
    const Eigen::MatrixXd b = matrix_from(Json::array({j.value("b", Json::array())}), d, "b");
    return MongeMap::affine(A, b.row(0).transpose());
  }
  if (kind == "tabulated") {
    const Eigen::MatrixXd images = matrix_from(j.at("images"), d, "images");
    if (images.rows() != mu.atoms().rows()) throw ValidationError("one image per mu-atom is required");
    return MongeMap::tabulated(mu.atoms(), images);
  }
  throw ValidationError("unknown monge map kind '" + kind + "'");
}

Json monge_to_json(const MongeMap& map, const DiscreteMeasure& mu) {
  Json j;
  j["kind"] = to_string(map.kind());
  switch (map.kind()) {
    case MongeMap::Kind::identity:
      break;
    case MongeMap::Kind::affine: {
      Json A = Json::array();
      for (Eigen::Index i = 0; i < map.matrix().rows(); ++i) A.push_back(point_json(map.matrix().row(i)));
      j["A"] = A;
      j["b"] = point_json(map.offset().transpose());
      break;
    }
    case MongeMap::Kind::tabulated: {
      Json images = Json::array();
      for (std::size_t i = 0; i < mu.size(); ++i) images.push_back(point_json(map.apply(mu.atom(i)).transpose()));
      j["images"] = images;
      break;
    }
  }
  j["lipschitz"] = map.lipschitz();
  return j;
}

Json coupling_to_json(const Coupling& c) {
  Json j;
  j["epsilon"] = c.epsilon ? Json(*c.epsilon) : Json(nullptr);
  Json entries = Json::array();
  for (const auto& e : c.entries) entries.push_back(Json::array({e.i, e.j, e.mass, e.density}));
  j["entries"] = entries;
  j["residual"] = c.mass_residual;
  return j;
}

Json potentials_to_json(const DualPotentials& pot) {
  Json j;
  j["normalization"] = pot.normalization;
  j["epsilon"] = pot.epsilon;
  j["f"] = pot.f;
  j["g"] = pot.g;
  j["sweeps"] = pot.sweeps;
  j["residual"] = pot.residual();
  return j;
}

Json exact_potentials_to_json(const ExactOTSolution& sol) {
  Json j;
  j["normalization"] = kKantorovichNormalization;
  j["f"] = sol.f_star;
  j["g"] = sol.g_star;
  j["cost"] = sol.cost;
  return j;
}

Json surrogate_to_json(const ConvexSurrogate& s) {
  Json j;
  Json slopes = Json::array();
  for (Eigen::Index c = 0; c < s.slopes.cols(); ++c) slopes.push_back(point_json(s.slopes.col(c).transpose()));
  j["slopes"] = slopes;
  Json b = Json::array();
  for (Eigen::Index c = 0; c < s.intercepts.size(); ++c) b.push_back(s.intercepts[c]);
  j["intercepts"] = b;
  j["lambda"] = s.lambda;
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
}

}  // namespace qotlab
