#pragma once

#include <charconv>
#include <string>

namespace cbi::csv {

/// Shortest round-trip decimal form, locale-independent (period decimal
/// separator, no grouping).
inline std::string num(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string num(std::int64_t x) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace cbi::csv
