#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "thermoai/core/errors.hpp"
#include "thermoai/core/linalg.hpp"

namespace thermoai {

using Json = nlohmann::json;

/// {"shape": [rows, cols], "data": [row-major values]}
inline Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return Json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

/// Accepts either the shape/data object or nested row arrays [[...], ...].
inline Matrix matrix_from_json(const Json& j, const std::string& field = "matrix") {
  if (j.is_object()) {
    if (!j.contains("shape") || !j.contains("data")) throw ConfigError(field, "expected {shape, data}");
    const auto rows = j.at("shape").at(0).get<Eigen::Index>();
    const auto cols = j.at("shape").at(1).get<Eigen::Index>();
    const auto& data = j.at("data");
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw ConfigError(field + "/data", "expected " + std::to_string(rows * cols) + " numbers");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data.at(static_cast<std::size_t>(i * cols + c)).get<double>();
    return m;
  }
  if (!j.is_array()) throw ConfigError(field, "expected a matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  if (!j.front().is_array()) throw ConfigError(field, "expected an array of rows");
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(field + "/" + std::to_string(i), "ragged matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline Vector vector_from_json(const Json& j, const std::string& field = "vector") {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(field + "/" + std::to_string(i), "expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

}  // namespace thermoai
