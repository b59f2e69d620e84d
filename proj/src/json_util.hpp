#pragma once

// Internal helpers for the flat row-major JSON encoding of Eigen objects.
// Infinite values are written as null and read back as ±inf depending on
// the side given by the caller.

#include "quadqp/common.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

namespace quadqp::detail {

using json = nlohmann::json;

inline json to_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      a.push_back(v(i));
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

inline const json& field(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw InputError("missing field '" + key + "'");
  return j.at(key);
}

inline int int_field(const json& j, const std::string& key) {
  const json& v = field(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InputError("field '" + key + "' must be a non-negative integer");
  }
  return v.get<int>();
}

/// Flat numeric array; null maps to `null_value`.
inline Vec vec_from_json(const json& a, const std::string& what, double null_value = kInf) {
  if (!a.is_array()) throw InputError("'" + what + "' must be an array");
  Vec v(static_cast<int>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_null()) {
      v(static_cast<int>(i)) = null_value;
    } else if (a[i].is_number()) {
      v(static_cast<int>(i)) = a[i].get<double>();
    } else {
      throw InputError("'" + what + "' must contain numbers");
    }
  }
  return v;
}

inline Mat mat_from_json(const json& a, int rows, int cols, const std::string& what) {
  const Vec flat = vec_from_json(a, what, std::nan(""));
  if (flat.size() != static_cast<Eigen::Index>(rows) * cols) {
    throw DimensionError("'" + what + "' has " + std::to_string(flat.size()) + " entries, expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!flat.allFinite()) throw InputError("'" + what + "' contains non-finite entries");
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = flat(static_cast<Eigen::Index>(i) * cols + j);
  return m;
}

/// Matrix with a known column count; rows inferred from the array length.
inline Mat mat_from_json_cols(const json& a, int cols, const std::string& what) {
  if (!a.is_array()) throw InputError("'" + what + "' must be an array");
  if (cols == 0) return Mat(0, 0);
  if (a.size() % static_cast<std::size_t>(cols) != 0) {
    throw DimensionError("'" + what + "' length is not a multiple of " + std::to_string(cols));
  }
  return mat_from_json(a, static_cast<int>(a.size()) / cols, cols, what);
}

inline json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace quadqp::detail
