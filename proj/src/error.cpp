#include "tmatch/error.hpp"

namespace tmatch {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput:
      return "invalid input";
    case ErrorKind::kDegenerateData:
      return "degenerate data";
    case ErrorKind::kUnidentifiedRatio:
      return "unidentified ratio";
    case ErrorKind::kNoRoot:
      return "no root";
    case ErrorKind::kDegenerateInterval:
      return "degenerate interval";
    case ErrorKind::kSelectionFailed:
      return "trim selection failed";
  }
  return "unknown error";
}

}  // namespace tmatch
