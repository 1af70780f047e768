#include "plodd/format.hpp"

#include <charconv>
#include <cmath>

namespace plodd {

namespace {

std::string render(double value, std::chars_format fmt, int decimals) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[400];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value, fmt, decimals);
  return std::string(buffer, result.ptr);
}

}  // namespace

std::string format_fixed(double value, int decimals) {
  return render(value, std::chars_format::fixed, decimals);
}

std::string format_scientific(double value, int decimals) {
  return render(value, std::chars_format::scientific, decimals);
}

}  // namespace plodd
