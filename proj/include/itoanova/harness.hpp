#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "itoanova/series.hpp"
#include "itoanova/sim.hpp"
#include "itoanova/stats.hpp"

namespace itoanova {

enum class GridFamily { Uniform, Alternating, Custom };

/// One named check evaluated against the summary; see docs in README.
struct CheckSpec {
  std::string id;
  std::string kind;
  nlohmann::json params;  // cell selectors and tolerances
};

struct ExperimentPlan {
  std::string name = "plan";
  SimModel model = ConstantRho{};
  std::uint64_t model_index = 0;
  double horizon = 1.0;
  GridFamily grid = GridFamily::Uniform;
  std::vector<double> custom_times;  // on [0, 1], scaled by horizon
  std::vector<Index> n;
  std::vector<double> c{1.0};
  std::vector<double> alpha{0.5};
  Index replications = 2;
  std::uint64_t seed_base = 1;
  Index fine_factor = 64;
  double level = 0.95;
  std::vector<std::string> statistics{"errors", "coverage", "mixed_normal", "gof", "rates"};
  bool persist_replications = false;
  /// alpha values whose cells run the U test (empty: every alpha).
  std::vector<double> gof_alpha;
  Index gof_bootstrap = 99;
  std::vector<CheckSpec> checks;
};

/// Throws PlanError whose message starts with the JSON pointer of the offending field.
ExperimentPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const ExperimentPlan& plan);
void validate_plan(const ExperimentPlan& plan);

SamplingGrid make_grid(const ExperimentPlan& plan, Index n);

/// Everything measured on one simulated path for one (c, alpha).
struct ReplicationRecord {
  Index replication = 0;
  bool ok = false;
  std::string failure;
  double err = 0.0;         // dt_bar^{-1/2} (qv_alpha_T - <Z,Z>_T)
  double abs_err = 0.0;     // |qv_alpha_T - <Z,Z>_T|
  double bias_hat = 0.0;    // plug-in bias_T
  double bias_theory = 0.0; // bias_T from true coefficients
  double rv_err = 0.0;      // dt_bar^{-1/2} ([Z,Z]_T - <Z,Z>_T) on true residuals
  double rv_sup_err = 0.0;  // sup_t |[Z,Z]_t - <Z,Z>_t|
  double rho_sup_err = 0.0; // sup over valid indices |rho_hat - rho|
  double tau_hat = 0.0;
  double tau_true = 0.0;
  bool ci_covers = false;
  bool band_covers = false;
  double r2 = 0.0;
  double r2_population = 0.0;
  bool gof_done = false;
  double u_centred = 0.0;  // U + bias_T
  double p_value = 1.0;
  bool rejected = false;
  double gap = 0.0;
  double gap_true = 0.0;
};

struct CellKey {
  Index n = 0;
  double c = 1.0;
  double alpha = 0.5;
  auto operator<=>(const CellKey&) const = default;
};

struct CellSummary {
  CellKey key;
  Index replications = 0;
  Index failures = 0;
  std::vector<std::string> failure_messages;  // first few
  double mean_err = 0.0, sd_err = 0.0, se_err = 0.0;
  double mean_bias_hat = 0.0, mean_bias_theory = 0.0;
  double var_rv_err = 0.0, mean_tau_true = 0.0, median_tau_true = 0.0, median_tau_hat = 0.0;
  double median_abs_err = 0.0, median_rho_sup_err = 0.0, median_rv_sup_err = 0.0;
  double pointwise_coverage = 0.0, band_coverage = 0.0;
  std::optional<double> ks_standardized, ks_unstandardized;
  Index gof_replications = 0;
  double gof_rejection = 0.0, mean_u_centred = 0.0, se_u_centred = 0.0;
  double median_gap = 0.0, median_gap_true = 0.0;
  double median_r2 = 0.0, median_r2_population = 0.0;
  std::vector<ReplicationRecord> records;
};

struct RateRow {
  std::string statistic;
  double c = 1.0;
  double alpha = 0.5;
  Index cells = 0;
  stats::LinearFit fit;
};

struct CheckResult {
  std::string id;
  std::string kind;
  bool pass = false;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string detail;
};

struct McSummary {
  std::string plan_name;
  std::string model;
  double level = 0.95;
  std::vector<CellSummary> cells;  // sorted by key
  std::vector<RateRow> rates;
  std::vector<CheckResult> checks;

  const CellSummary& cell(const CellKey& key) const;
};

struct RunOptions {
  unsigned threads = 0;  // 0: hardware concurrency
};

McSummary run_plan(const ExperimentPlan& plan, const RunOptions& options = {});

/// Least-squares slope of log(median error) on log(n); needs >= 4 cells.
stats::LinearFit rate_regression(const std::vector<double>& n, const std::vector<double>& median_error);

struct MixedNormalCheck {
  double ks_standardized = 0.0;    // errors / sqrt(tau_hat) against N(0,1)
  double ks_unstandardized = 0.0;  // errors z-scored by the sample mean and sd
};

/// Needs at least 200 replications.
MixedNormalCheck mixed_normal_check(const std::vector<double>& errors, const std::vector<double>& tau_hat);

/// Evaluate plan.checks against a summary.
std::vector<CheckResult> evaluate_checks(const ExperimentPlan& plan, const McSummary& summary);

/// Summary CSV files by family name ("errors.csv", ...), deterministic bytes.
std::map<std::string, std::string> summary_csvs(const McSummary& summary, const ExperimentPlan& plan);
nlohmann::json verdict_json(const std::vector<CheckResult>& checks);

}  // namespace itoanova
