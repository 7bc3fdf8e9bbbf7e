#include "tmatch/format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace tmatch {
namespace {

const char* non_finite_word(double v) {
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) return non_finite_word(v);
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_fixed(double v, int digits) {
  if (!std::isfinite(v)) return non_finite_word(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace tmatch
