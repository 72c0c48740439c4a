#pragma once

#include <charconv>
#include <string>

namespace abmhedge {

/// Shortest decimal text that parses back to exactly `v`. Plain notation is
/// preferred unless the exponent form is much shorter.
inline std::string shortest(double v) {
  char general[32];
  const auto g = std::to_chars(general, general + sizeof(general), v);
  char fixed[400];
  const auto f = std::to_chars(fixed, fixed + sizeof(fixed), v, std::chars_format::fixed);
  if (f.ptr - fixed <= (g.ptr - general) + 4) return std::string(fixed, f.ptr);
  return std::string(general, g.ptr);
}

}  // namespace abmhedge
