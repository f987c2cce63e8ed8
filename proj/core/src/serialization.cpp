#include "remqst/serialization.hpp"

#include <string>

#include "remqst/errors.hpp"

namespace remqst {
namespace {

[[noreturn]] void schema_fail(std::string_view where, const std::string& msg) {
  throw SchemaError(std::string(where) + ": " + msg);
}

int read_dim(const Json& j, std::string_view where) {
  if (!j.is_object() || !j.contains("dim") || !j["dim"].is_number_integer()) {
    schema_fail(where, "missing integer field 'dim'");
  }
  const int dim = j["dim"].get<int>();
  if (dim < 1) schema_fail(where, "'dim' must be positive");
  return dim;
}

void check_dim(const Matrix& m, int dim, std::string_view where) {
  if (m.rows() != dim) schema_fail(where, "'entries' size disagrees with 'dim'");
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, std::string_view where) {
  if (!j.is_array() || j.empty()) schema_fail(where, "matrix must be a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      schema_fail(where, "row " + std::to_string(r) + " must have " + std::to_string(n) + " entries");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const Json& z = row[static_cast<std::size_t>(c)];
      if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
        schema_fail(where, "entry (" + std::to_string(r) + "," + std::to_string(c) +
                               ") must be a [re, im] pair");
      }
      m(r, c) = Complex{z[0].get<double>(), z[1].get<double>()};
    }
  }
  return m;
}

Json to_json(const DensityMatrix& state) {
  return {{"dim", state.dim()}, {"entries", matrix_to_json(state.matrix())}};
}

Json to_json(const Effect& effect) {
  return {{"dim", effect.dim()}, {"entries", matrix_to_json(effect.matrix())}};
}

Json to_json(const Povm& povm) {
  Json entries = Json::array();
  for (const auto& e : povm.effects()) entries.push_back(matrix_to_json(e.matrix()));
  return {{"dim", povm.dim()}, {"labels", povm.labels()}, {"entries", std::move(entries)}};
}

DensityMatrix density_matrix_from_json(const Json& j) {
  const int dim = read_dim(j, "density matrix");
  if (!j.contains("entries")) schema_fail("density matrix", "missing 'entries'");
  Matrix m = matrix_from_json(j["entries"], "density matrix entries");
  check_dim(m, dim, "density matrix");
  return DensityMatrix(std::move(m));
}

Effect effect_from_json(const Json& j) {
  const int dim = read_dim(j, "effect");
  if (!j.contains("entries")) schema_fail("effect", "missing 'entries'");
  Matrix m = matrix_from_json(j["entries"], "effect entries");
  check_dim(m, dim, "effect");
  return Effect(std::move(m));
}

Povm povm_from_json(const Json& j) {
  const int dim = read_dim(j, "povm");
  if (!j.contains("labels") || !j["labels"].is_array()) schema_fail("povm", "missing array 'labels'");
  if (!j.contains("entries") || !j["entries"].is_array()) schema_fail("povm", "missing array 'entries'");
  if (j["labels"].size() != j["entries"].size()) schema_fail("povm", "one label per effect required");
  std::vector<Effect> effects;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < j["entries"].size(); ++i) {
    const auto where = "povm effect " + std::to_string(i);
    if (!j["labels"][i].is_string()) schema_fail(where, "label must be a string");
    Matrix m = matrix_from_json(j["entries"][i], where);
    check_dim(m, dim, where);
    effects.emplace_back(std::move(m));
    labels.push_back(j["labels"][i].get<std::string>());
  }
  return Povm(std::move(effects), std::move(labels));
}

}  // namespace remqst
