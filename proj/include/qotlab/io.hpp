#pragma once

#include <string>

#include "json.hpp"
#include "qotlab/exact_ot.hpp"
#include "qotlab/measures.hpp"
#include "qotlab/qot_solver.hpp"
#include "qotlab/surrogate.hpp"

namespace qotlab {

using Json = nlohmann::ordered_json;

// {"dim": d, "atoms": [[...], ...], "weights": [...]}. Integer and float
// literals are both accepted. Throws ValidationError on a malformed object.
DiscreteMeasure measure_from_json(const Json& j);
Json measure_to_json(const DiscreteMeasure& mu);

// {"kind": "identity"} | {"kind": "affine", "A": [[...]], "b": [...]} |
// {"kind": "tabulated", "images": [[...]]} (images of the mu-atoms).
MongeMap monge_from_json(const Json& j, const DiscreteMeasure& mu);
Json monge_to_json(const MongeMap& map, const DiscreteMeasure& mu);

// {"epsilon": eps or null, "entries": [[i, j, mass, density], ...], "residual": r}
Json coupling_to_json(const Coupling& c);
Json potentials_to_json(const DualPotentials& pot);
Json exact_potentials_to_json(const ExactOTSolution& sol);
// {"slopes": [[...]], "intercepts": [...], "lambda": l}
Json surrogate_to_json(const ConvexSurrogate& s);

// Throws ConfigError when the file is missing or not valid JSON.
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace qotlab
