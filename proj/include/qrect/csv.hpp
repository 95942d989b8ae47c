#pragma once
// CSV cell formatting. Doubles use the shortest round-trip representation so
// identical values always print identically.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace qrect::csv {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string num(std::int64_t v) { return std::to_string(v); }
inline std::string num(std::uint64_t v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }

/// Index vector as "i1;i2;...".
inline std::string index(const std::vector<std::int64_t>& idx) {
  std::string s;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) s += ';';
    s += std::to_string(idx[k]);
  }
  return s;
}

/// Coordinates as "x1;x2;...".
inline std::string vec(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ';';
    s += num(v[k]);
  }
  return s;
}

}  // namespace qrect::csv
