#pragma once

// Private JSON helpers shared by the checkpoint and report code.

#include <nlohmann/json.hpp>
#include "mdreg/types.hpp"

#include <initializer_list>
#include <string>
#include <string_view>

namespace mdreg::io::detail {

using Json = nlohmann::json;

inline Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    throw ParameterError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

inline void require_object(const Json& j, std::string_view what) {
  if (!j.is_object()) throw ParameterError(std::string(what) + " must be a JSON object");
}

inline void check_keys(const Json& j, std::string_view what, std::initializer_list<std::string_view> allowed) {
  require_object(j, what);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ParameterError(std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_field(const Json& j, const char* key, T& out, std::string_view what) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception&) {
    throw ParameterError(std::string(what) + ": field '" + key + "' has the wrong type");
  }
}

inline Json matrix_to_json(const RowMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline RowMatrix matrix_from_json(const Json& j, std::string_view what) {
  if (!j.is_array() || j.empty()) throw ParameterError(std::string(what) + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  RowMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ParameterError(std::string(what) + " rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ParameterError(std::string(what) + " entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const Json& j, std::string_view what) {
  if (!j.is_array()) throw ParameterError(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParameterError(std::string(what) + " entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json hyperparams_json(const HyperParams& p);
HyperParams hyperparams_from(const Json& j);

}  // namespace mdreg::io::detail
