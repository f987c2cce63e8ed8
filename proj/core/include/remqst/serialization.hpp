#pragma once

// JSON encoding of matrices, states, effects and POVMs.
//
// Complex matrices are nested arrays of [re, im] pairs, row-major:
//   {"dim": 2, "entries": [[[1,0],[0,0]], [[0,0],[0,0]]]}
// A POVM stores one matrix per effect under "entries", plus "labels".

#include <string_view>

#include <nlohmann/json.hpp>

#include "remqst/quantum.hpp"

namespace remqst {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);
/// Throws SchemaError naming `where` on malformed input.
Matrix matrix_from_json(const Json& j, std::string_view where);

Json to_json(const DensityMatrix& state);
Json to_json(const Effect& effect);
Json to_json(const Povm& povm);

DensityMatrix density_matrix_from_json(const Json& j);
Effect effect_from_json(const Json& j);
Povm povm_from_json(const Json& j);

}  // namespace remqst
