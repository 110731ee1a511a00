#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace bcs {

// Fixed CSV number format: 6 significant digits, "inf" for infinities and an
// empty field for NaN.
inline std::string format_number(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace bcs
