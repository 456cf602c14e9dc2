#include "qoe/error.hpp"

namespace qoe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::schema_mismatch: return "schema-mismatch";
    case ErrorKind::parse: return "parse-error";
    case ErrorKind::validation: return "validation-error";
    case ErrorKind::io: return "io-error";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::numerical: return "numerical-error";
    case ErrorKind::undefined_metric: return "undefined-metric";
    case ErrorKind::shape: return "shape-error";
    case ErrorKind::divergence: return "divergence";
  }
  return "unknown";
}

}  // namespace qoe
