#pragma once

#include <string>

namespace tmatch {

// Shortest text that reads back to the same double; "nan", "inf", "-inf"
// for non-finite values.
[[nodiscard]] std::string format_number(double v);

// printf-style fixed notation with `digits` decimals; same non-finite words.
[[nodiscard]] std::string format_fixed(double v, int digits);

}  // namespace tmatch
