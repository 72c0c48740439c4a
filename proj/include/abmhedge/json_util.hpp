#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "abmhedge/errors.hpp"
#include "json.hpp"

namespace abmhedge::json_util {

using nlohmann::json;

/// Largest integer magnitude with an exact float64 representation.
inline constexpr double kMaxExactInteger = 9007199254740992.0;  // 2^53

/// Reads a JSON number as float64, rejecting values that cannot round-trip.
inline double to_double(const json& j, const std::string& what) {
  if (j.is_number_integer()) {
    const double v = j.is_number_unsigned() ? static_cast<double>(j.get<std::uint64_t>())
                                            : static_cast<double>(j.get<std::int64_t>());
    if (std::fabs(v) > kMaxExactInteger) {
      throw FormatError(what + ": integer exceeds exact float64 range");
    }
    return v;
  }
  if (!j.is_number()) throw FormatError(what + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw FormatError(what + ": non-finite number");
  return v;
}

inline double number_at(const json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) throw FormatError("missing key '" + key + "'");
  return to_double(obj.at(key), key);
}

inline std::vector<double> numbers_at(const json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) throw FormatError("missing key '" + key + "'");
  const json& arr = obj.at(key);
  if (!arr.is_array()) throw FormatError(key + ": expected an array");
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(to_double(arr[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace abmhedge::json_util
