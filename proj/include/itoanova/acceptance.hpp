#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "itoanova/harness.hpp"

namespace itoanova {

struct AcceptanceItem {
  int number = 0;
  std::string title;
  bool pass = false;
  std::vector<std::string> details;
};

struct AcceptanceOptions {
  std::uint64_t seed_base = 20261016;
  unsigned threads = 0;
  /// Rerun every Monte Carlo plan and compare summary CSV bytes (item 12).
  bool determinism_rerun = true;
  /// Thread count for the rerun; differs from the first pass so the
  /// comparison also covers scheduling.
  unsigned rerun_threads = 3;
};

struct AcceptanceRun {
  std::vector<AcceptanceItem> items;
  std::vector<ExperimentPlan> plans;
  std::vector<McSummary> summaries;
  /// "<plan>/<family>.csv" -> bytes.
  std::map<std::string, std::string> csvs;

  bool pass() const;
  nlohmann::json verdict() const;
};

/// The Monte Carlo plans behind items 4-12.
std::vector<ExperimentPlan> acceptance_plans(std::uint64_t seed_base);

AcceptanceRun run_acceptance(const AcceptanceOptions& options = {});

/// Frozen high-precision values of c_1(level) from the eigenfunction series
/// (4/pi) sum (-1)^n/(2n+1) exp(-(2n+1)^2 pi^2 / (8 c^2)).
struct BandConstantOracle {
  double level;
  double c1;
};
const std::vector<BandConstantOracle>& band_constant_oracle();

}  // namespace itoanova
