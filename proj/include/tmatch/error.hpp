#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tmatch {

enum class ErrorKind {
  kInvalidInput,        // malformed or out-of-contract arguments
  kDegenerateData,      // data cannot support the computation (zero range, zero variance)
  kUnidentifiedRatio,   // denominator or argmin set unbounded on both sides
  kNoRoot,              // trimmed-mean equation has no root
  kDegenerateInterval,  // acceptance region of a confidence interval is empty
  kSelectionFailed,     // no trim rate produced a finite interval
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` lets callers map failures
// to exit codes or exclusion counters without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  // Data problems are the caller's to fix; everything else is an estimation failure.
  [[nodiscard]] bool is_data_error() const noexcept {
    return kind_ == ErrorKind::kInvalidInput || kind_ == ErrorKind::kDegenerateData;
  }

 private:
  ErrorKind kind_;
};

}  // namespace tmatch
