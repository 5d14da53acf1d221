#include "mvom/error.hpp"

namespace mvom {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return "invalid_argument";
    case ErrorCode::DimensionMismatch:
      return "dimension_mismatch";
    case ErrorCode::InvalidMeasure:
      return "invalid_measure";
    case ErrorCode::NonFinite:
      return "non_finite";
    case ErrorCode::NonConvergence:
      return "non_convergence";
    case ErrorCode::ShootingBlowUp:
      return "shooting_blow_up";
    case ErrorCode::ConfigParse:
      return "config_parse";
    case ErrorCode::Io:
      return "io";
  }
  return "unknown";
}

}  // namespace mvom
