#include "itoanova/error.hpp"

namespace itoanova {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorKind::NonFiniteTime: return "NonFiniteTime";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::FirstTimeNonzero: return "FirstTimeNonzero";
    case ErrorKind::BandwidthOutOfRange: return "BandwidthOutOfRange";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DegenerateModel: return "DegenerateModel";
    case ErrorKind::GridBeyondHorizon: return "GridBeyondHorizon";
    case ErrorKind::NoValidWindow: return "NoValidWindow";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorKind::DegenerateTau: return "DegenerateTau";
    case ErrorKind::DegenerateTotalSS: return "DegenerateTotalSS";
    case ErrorKind::DegenerateRegressor: return "DegenerateRegressor";
    case ErrorKind::InsufficientCells: return "InsufficientCells";
    case ErrorKind::InsufficientReplications: return "InsufficientReplications";
    case ErrorKind::PlanError: return "PlanError";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace itoanova
