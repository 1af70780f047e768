#pragma once

#include <string>

namespace plodd {

/// Locale-independent fixed notation with 12 decimals.
std::string format_fixed(double value, int decimals = 12);

/// Locale-independent scientific notation with 12 mantissa decimals, for
/// quantities (I_n, bounds, residuals) that fall far below 1e-12.
std::string format_scientific(double value, int decimals = 12);

}  // namespace plodd
