#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace itoanova {

/// Structured failure reasons shared by every module.
enum class ErrorKind {
  // series
  NonMonotoneTime,
  NonFiniteTime,
  TooFewPoints,
  FirstTimeNonzero,
  BandwidthOutOfRange,
  NoOverlap,
  LengthMismatch,
  // sim
  DegenerateModel,
  GridBeyondHorizon,
  // spot / anova
  NoValidWindow,
  AlphaOutOfRange,
  LevelOutOfRange,
  DegenerateTau,
  // gof
  DegenerateTotalSS,
  DegenerateRegressor,
  // harness
  InsufficientCells,
  InsufficientReplications,
  PlanError,
  // io / cli
  FormatError,
  ConfigError,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace itoanova
