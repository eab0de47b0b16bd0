#include "itoanova/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <limits>
#include <cmath>
#include <sstream>
#include <thread>

#include "itoanova/anova.hpp"
#include "itoanova/csv.hpp"
#include "itoanova/gof.hpp"
#include "itoanova/quadvar.hpp"
#include "itoanova/rng.hpp"

namespace itoanova {

using nlohmann::json;

namespace {

[[noreturn]] void plan_fail(const std::string& pointer, const std::string& what) {
  fail(ErrorKind::PlanError, pointer + ": " + what);
}

double number_at(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) plan_fail("/" + key, "expected a number");
  return j[key].get<double>();
}

std::int64_t integer_at(const std::string& pointer, const json& v) {
  if (!v.is_number_integer()) plan_fail(pointer, "expected an integer");
  return v.get<std::int64_t>();
}

std::vector<double> numbers_at(const json& j, const std::string& key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const json& a = j[key];
  if (!a.is_array() || a.empty()) plan_fail("/" + key, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) plan_fail("/" + key + "/" + std::to_string(i), "expected a number");
    out.push_back(a[i].get<double>());
  }
  return out;
}

double quantile_free_median(std::vector<double> v) { return v.empty() ? 0.0 : stats::median(v); }

std::string format_opt(const std::optional<double>& v) { return v ? csv::format(*v) : ""; }
std::string format_nan(double v) { return std::isfinite(v) ? csv::format(v) : ""; }

const char* grid_name(GridFamily g) {
  switch (g) {
    case GridFamily::Uniform: return "uniform";
    case GridFamily::Alternating: return "alternating";
    case GridFamily::Custom: return "custom";
  }
  return "uniform";
}

}  // namespace

ExperimentPlan plan_from_json(const json& j) {
  if (!j.is_object()) plan_fail("", "plan must be a JSON object");
  static const std::vector<std::string> known{
      "name", "model", "model_index", "horizon", "grid", "n", "c", "alpha", "replications", "seed_base",
      "fine_factor", "level", "statistics", "persist_replications", "gof_alpha", "gof_bootstrap", "checks"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) plan_fail("/" + key, "unknown field");

  ExperimentPlan p;
  if (j.contains("name")) {
    if (!j["name"].is_string()) plan_fail("/name", "expected a string");
    p.name = j["name"].get<std::string>();
  }
  if (!j.contains("model")) plan_fail("/model", "required");
  try {
    p.model = model_from_json(j["model"]);
  } catch (const Error& e) {
    plan_fail("/model", e.what());
  }
  if (j.contains("model_index")) p.model_index = static_cast<std::uint64_t>(integer_at("/model_index", j["model_index"]));
  p.horizon = number_at(j, "horizon", 1.0);
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (g == "uniform") {
      p.grid = GridFamily::Uniform;
    } else if (g == "alternating") {
      p.grid = GridFamily::Alternating;
    } else if (g.is_object() && g.contains("custom")) {
      p.grid = GridFamily::Custom;
      const json& t = g["custom"];
      if (!t.is_array()) plan_fail("/grid/custom", "expected an array of times on [0, 1]");
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!t[i].is_number()) plan_fail("/grid/custom/" + std::to_string(i), "expected a number");
        p.custom_times.push_back(t[i].get<double>());
      }
    } else {
      plan_fail("/grid", "expected \"uniform\", \"alternating\" or {\"custom\": [...]}");
    }
  }
  if (j.contains("n")) {
    const json& a = j["n"];
    if (!a.is_array() || a.empty()) plan_fail("/n", "expected a nonempty array of integers");
    for (std::size_t i = 0; i < a.size(); ++i) p.n.push_back(integer_at("/n/" + std::to_string(i), a[i]));
  } else if (p.grid != GridFamily::Custom) {
    plan_fail("/n", "required");
  }
  p.c = numbers_at(j, "c", p.c);
  p.alpha = numbers_at(j, "alpha", p.alpha);
  if (!j.contains("replications")) plan_fail("/replications", "required");
  p.replications = integer_at("/replications", j["replications"]);
  if (j.contains("seed_base")) {
    if (!j["seed_base"].is_number_unsigned() && !j["seed_base"].is_number_integer())
      plan_fail("/seed_base", "expected a nonnegative integer");
    p.seed_base = j["seed_base"].get<std::uint64_t>();
  }
  if (j.contains("fine_factor")) p.fine_factor = integer_at("/fine_factor", j["fine_factor"]);
  p.level = number_at(j, "level", p.level);
  if (j.contains("statistics")) {
    const json& a = j["statistics"];
    if (!a.is_array()) plan_fail("/statistics", "expected an array of names");
    p.statistics.clear();
    static const std::vector<std::string> families{"errors", "coverage", "mixed_normal", "gof", "rates"};
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string ptr = "/statistics/" + std::to_string(i);
      if (!a[i].is_string()) plan_fail(ptr, "expected a string");
      const auto name = a[i].get<std::string>();
      if (std::find(families.begin(), families.end(), name) == families.end())
        plan_fail(ptr, "unknown statistic '" + name + "' (errors, coverage, mixed_normal, gof, rates)");
      p.statistics.push_back(name);
    }
  }
  if (j.contains("persist_replications")) {
    if (!j["persist_replications"].is_boolean()) plan_fail("/persist_replications", "expected a boolean");
    p.persist_replications = j["persist_replications"].get<bool>();
  }
  p.gof_alpha = numbers_at(j, "gof_alpha", {});
  if (j.contains("gof_bootstrap")) p.gof_bootstrap = integer_at("/gof_bootstrap", j["gof_bootstrap"]);
  if (j.contains("checks")) {
    const json& a = j["checks"];
    if (!a.is_array()) plan_fail("/checks", "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string ptr = "/checks/" + std::to_string(i);
      if (!a[i].is_object() || !a[i].contains("kind") || !a[i]["kind"].is_string())
        plan_fail(ptr + "/kind", "each check needs a string kind");
      CheckSpec c;
      c.kind = a[i]["kind"].get<std::string>();
      c.id = a[i].value("id", c.kind + "_" + std::to_string(i));
      c.params = a[i];
      p.checks.push_back(std::move(c));
    }
  }
  validate_plan(p);
  return p;
}

json plan_to_json(const ExperimentPlan& p) {
  json j;
  j["name"] = p.name;
  j["model"] = model_to_json(p.model);
  j["model_index"] = p.model_index;
  j["horizon"] = p.horizon;
  if (p.grid == GridFamily::Custom)
    j["grid"] = {{"custom", p.custom_times}};
  else
    j["grid"] = grid_name(p.grid);
  j["n"] = p.n;
  j["c"] = p.c;
  j["alpha"] = p.alpha;
  j["replications"] = p.replications;
  j["seed_base"] = p.seed_base;
  j["fine_factor"] = p.fine_factor;
  j["level"] = p.level;
  j["statistics"] = p.statistics;
  j["persist_replications"] = p.persist_replications;
  j["gof_alpha"] = p.gof_alpha;
  j["gof_bootstrap"] = p.gof_bootstrap;
  j["checks"] = json::array();
  for (const auto& c : p.checks) {
    json cj = c.params;
    cj["id"] = c.id;
    cj["kind"] = c.kind;
    j["checks"].push_back(cj);
  }
  return j;
}

void validate_plan(const ExperimentPlan& p) {
  if (!(p.horizon > 0.0) || !std::isfinite(p.horizon)) plan_fail("/horizon", "must be finite and > 0");
  try {
    validate_model(p.model, p.horizon);
  } catch (const Error& e) {
    plan_fail("/model", e.what());
  }
  if (p.replications < 2) plan_fail("/replications", "must be >= 2");
  if (p.fine_factor < 1) plan_fail("/fine_factor", "must be >= 1");
  if (!(p.level > 0.0 && p.level < 1.0)) plan_fail("/level", "must lie in (0, 1)");
  if (p.grid == GridFamily::Custom) {
    if (p.custom_times.size() < 3) plan_fail("/grid/custom", "needs at least 3 times");
    if (p.custom_times.front() != 0.0 || p.custom_times.back() != 1.0)
      plan_fail("/grid/custom", "times must run from 0 to 1");
    try {
      validate_grid(p.custom_times);
    } catch (const Error& e) {
      plan_fail("/grid/custom", e.what());
    }
  } else {
    for (std::size_t i = 0; i < p.n.size(); ++i) {
      if (p.n[i] < 64) plan_fail("/n/" + std::to_string(i), "must be >= 64");
      if (p.n[i] * p.fine_factor < 1024)
        plan_fail("/n/" + std::to_string(i), "n * fine_factor must be >= 1024");
      for (std::size_t k = 0; k < i; ++k)
        if (p.n[k] == p.n[i]) plan_fail("/n/" + std::to_string(i), "duplicate value");
    }
  }
  for (std::size_t i = 0; i < p.c.size(); ++i)
    if (!(p.c[i] > 0.0) || !std::isfinite(p.c[i])) plan_fail("/c/" + std::to_string(i), "must be finite and > 0");
  for (std::size_t i = 0; i < p.alpha.size(); ++i)
    if (!(p.alpha[i] >= 0.0 && p.alpha[i] <= 1.0)) plan_fail("/alpha/" + std::to_string(i), "must lie in [0, 1]");
  for (std::size_t i = 0; i < p.gof_alpha.size(); ++i)
    if (std::find(p.alpha.begin(), p.alpha.end(), p.gof_alpha[i]) == p.alpha.end())
      plan_fail("/gof_alpha/" + std::to_string(i), "not one of the plan's alpha values");
  if (p.gof_bootstrap < 2) plan_fail("/gof_bootstrap", "must be >= 2");
}

SamplingGrid make_grid(const ExperimentPlan& plan, Index n) {
  switch (plan.grid) {
    case GridFamily::Uniform: return SamplingGrid::uniform(plan.horizon, n);
    case GridFamily::Alternating: return SamplingGrid::alternating(plan.horizon, n);
    case GridFamily::Custom: {
      std::vector<double> t(plan.custom_times);
      for (auto& v : t) v *= plan.horizon;
      t.back() = plan.horizon;
      return SamplingGrid(t);
    }
  }
  return SamplingGrid::uniform(plan.horizon, n);
}

namespace {

std::vector<Index> plan_sizes(const ExperimentPlan& plan) {
  if (plan.grid == GridFamily::Custom) return {static_cast<Index>(plan.custom_times.size()) - 1};
  return plan.n;
}

// Every (c, alpha) record for one simulated path, in c-major order.
std::vector<ReplicationRecord> replicate(const ExperimentPlan& plan, Index n, Index r) {
  const std::size_t cells = plan.c.size() * plan.alpha.size();
  std::vector<ReplicationRecord> out(cells);
  for (auto& rec : out) rec.replication = r;
  try {
    const SamplingGrid grid = make_grid(plan, n);
    const auto seed = stream_key({plan.seed_base, plan.model_index, static_cast<std::uint64_t>(n),
                                  static_cast<std::uint64_t>(r)});
    const FinePath fine = simulate(plan.model, plan.horizon, plan.fine_factor * grid.intervals(), seed);
    const Observation obs = subsample(fine, grid);
    const GroundTruth truth = ground_truth(fine, obs);
    const Column& s = obs.paths.column("S");
    const Column& xi = obs.paths.column("Xi");
    const Index k = grid.intervals();
    const double dt_bar = grid.mean_spacing();
    const double root = std::sqrt(dt_bar);

    const Column rv = realized_cov(truth.z, truth.z, grid).values;
    const double qv_t = truth.qv_z(k);
    const double rv_err = (rv(k) - qv_t) / root;
    const double rv_sup = (rv - truth.qv_z).cwiseAbs().maxCoeff();
    const double theta = fit_constant_beta(xi, s, grid);
    const double gap_true = truth.int_rho2_dss(k) - truth.cov_xis(k) * truth.cov_xis(k) / truth.qv_s(k);
    const double r2_pop = truth.int_rho2_dss(k) / truth.qv_xi(k);

    const bool run_gof =
        std::find(plan.statistics.begin(), plan.statistics.end(), "gof") != plan.statistics.end();
    std::size_t cell = 0;
    for (double c : plan.c) {
      for (double alpha : plan.alpha) {
        ReplicationRecord& rec = out[cell++];
        try {
          AnovaOptions opt;
          opt.alpha = alpha;
          opt.c = c;
          opt.level = plan.level;
          const AnovaReport rep = analyze(s, xi, grid, opt);
          rec.err = (rep.raw_estimate.terminal() - qv_t) / root;
          rec.abs_err = std::abs(rep.raw_estimate.terminal() - qv_t);
          rec.bias_hat = rep.bias.terminal();
          rec.bias_theory = (alpha / c) * truth.int_cov_drho(k) +
                            (1.0 - 2.0 * alpha) * (truth.int_rhoqv_dss(k) / (3.0 * c) + c * truth.h_weighted_qv_z(k));
          rec.rv_err = rv_err;
          rec.rv_sup_err = rv_sup;
          double sup = 0.0;
          for (Index i = rep.spot.rho.valid_from; i <= k; ++i)
            sup = std::max(sup, std::abs(rep.spot.rho.values(i) - truth.rho(i)));
          rec.rho_sup_err = sup;
          rec.tau_hat = rep.avar.terminal();
          rec.tau_true = truth.tau;
          rec.ci_covers = rep.ci.lower(k) <= qv_t && qv_t <= rep.ci.upper(k);
          if (rep.band) {
            rec.band_covers = ((truth.qv_z - rep.band->lower).array() >= 0.0).all() &&
                              ((rep.band->upper - truth.qv_z).array() >= 0.0).all();
          }
          rec.r2 = r_squared(xi, rep).r2(k);
          rec.r2_population = r2_pop;
          if (run_gof && (plan.gof_alpha.empty() ||
              std::find(plan.gof_alpha.begin(), plan.gof_alpha.end(), alpha) != plan.gof_alpha.end())) {
            GofOptions g;
            g.bootstrap = plan.gof_bootstrap;
            g.seed = stream_key({seed, std::bit_cast<std::uint64_t>(c), std::bit_cast<std::uint64_t>(alpha)});
            const ParametricFit fit = u_statistic(xi, s, grid, theta, rep, g);
            rec.gof_done = true;
            rec.u_centred = fit.u + fit.bias;
            rec.p_value = fit.p_value;
            rec.rejected = fit.rejected;
            rec.gap = fit.gap;
          }
          rec.gap_true = gap_true;
          rec.ok = true;
        } catch (const std::exception& e) {
          rec.failure = e.what();
        }
      }
    }
  } catch (const std::exception& e) {
    for (auto& rec : out) rec.failure = e.what();
  }
  return out;
}

CellSummary summarize(const CellKey& key, std::vector<ReplicationRecord> records, double level) {
  CellSummary s;
  s.key = key;
  s.replications = static_cast<Index>(records.size());
  std::vector<double> err, bias_hat, bias_theory, rv, tau_true, tau_hat, abs_err, rho_sup, rv_sup, u, gap,
      gap_true, r2, r2_pop, centred;
  Index ci = 0, band = 0, rejected = 0;
  for (const auto& r : records) {
    if (!r.ok) {
      ++s.failures;
      if (s.failure_messages.size() < 3) s.failure_messages.push_back(r.failure);
      continue;
    }
    err.push_back(r.err);
    bias_hat.push_back(r.bias_hat);
    bias_theory.push_back(r.bias_theory);
    rv.push_back(r.rv_err);
    tau_true.push_back(r.tau_true);
    tau_hat.push_back(r.tau_hat);
    abs_err.push_back(r.abs_err);
    rho_sup.push_back(r.rho_sup_err);
    rv_sup.push_back(r.rv_sup_err);
    if (r.gof_done) {
      u.push_back(r.u_centred);
      gap.push_back(r.gap);
      gap_true.push_back(r.gap_true);
      rejected += r.rejected;
    }
    r2.push_back(r.r2);
    r2_pop.push_back(r.r2_population);
    centred.push_back(r.err - r.bias_hat);
    ci += r.ci_covers;
    band += r.band_covers;
  }
  const auto ok = static_cast<double>(err.size());
  if (ok >= 2) {
    s.mean_err = stats::mean(err);
    s.sd_err = std::sqrt(stats::variance(err));
    s.se_err = s.sd_err / std::sqrt(ok);
    s.var_rv_err = stats::variance(rv);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.gof_replications = static_cast<Index>(u.size());
  s.mean_u_centred = s.se_u_centred = s.gof_rejection = s.median_gap = s.median_gap_true = nan;
  if (u.size() >= 2) {
    const auto g = static_cast<double>(u.size());
    s.mean_u_centred = stats::mean(u);
    s.se_u_centred = std::sqrt(stats::variance(u) / g);
    s.gof_rejection = static_cast<double>(rejected) / g;
    s.median_gap = quantile_free_median(gap);
    s.median_gap_true = quantile_free_median(gap_true);
  }
  if (ok >= 1) {
    s.mean_bias_hat = stats::mean(bias_hat);
    s.mean_bias_theory = stats::mean(bias_theory);
    s.mean_tau_true = stats::mean(tau_true);
    s.median_tau_true = quantile_free_median(tau_true);
    s.median_tau_hat = quantile_free_median(tau_hat);
    s.median_abs_err = quantile_free_median(abs_err);
    s.median_rho_sup_err = quantile_free_median(rho_sup);
    s.median_rv_sup_err = quantile_free_median(rv_sup);
    s.pointwise_coverage = static_cast<double>(ci) / ok;
    s.band_coverage = static_cast<double>(band) / ok;
    s.median_r2 = quantile_free_median(r2);
    s.median_r2_population = quantile_free_median(r2_pop);
  }
  if (err.size() >= 200) {
    const auto mn = mixed_normal_check(centred, tau_hat);
    s.ks_standardized = mn.ks_standardized;
    s.ks_unstandardized = mn.ks_unstandardized;
  }
  (void)level;
  s.records = std::move(records);
  return s;
}

}  // namespace

const CellSummary& McSummary::cell(const CellKey& key) const {
  for (const auto& c : cells)
    if (c.key.n == key.n && std::abs(c.key.c - key.c) < 1e-12 && std::abs(c.key.alpha - key.alpha) < 1e-12)
      return c;
  fail(ErrorKind::InvalidArgument, "no cell n=" + std::to_string(key.n) + " c=" + csv::format(key.c) +
                                       " alpha=" + csv::format(key.alpha));
}

McSummary run_plan(const ExperimentPlan& plan, const RunOptions& options) {
  validate_plan(plan);
  const auto sizes = plan_sizes(plan);
  const std::size_t per_path = plan.c.size() * plan.alpha.size();
  const std::size_t tasks = sizes.size() * static_cast<std::size_t>(plan.replications);
  std::vector<std::vector<ReplicationRecord>> results(tasks);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const Index n = sizes[t / static_cast<std::size_t>(plan.replications)];
      const Index r = static_cast<Index>(t % static_cast<std::size_t>(plan.replications));
      results[t] = replicate(plan, n, r);
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(tasks, 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }

  McSummary summary;
  summary.plan_name = plan.name;
  summary.model = std::string(model_name(plan.model));
  summary.level = plan.level;
  for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
    std::size_t cell = 0;
    for (double c : plan.c) {
      for (double alpha : plan.alpha) {
        std::vector<ReplicationRecord> recs;
        recs.reserve(static_cast<std::size_t>(plan.replications));
        for (Index r = 0; r < plan.replications; ++r)
          recs.push_back(results[ni * static_cast<std::size_t>(plan.replications) + static_cast<std::size_t>(r)][cell]);
        summary.cells.push_back(summarize({sizes[ni], c, alpha}, std::move(recs), plan.level));
        ++cell;
      }
    }
  }
  (void)per_path;
  std::sort(summary.cells.begin(), summary.cells.end(),
            [](const CellSummary& a, const CellSummary& b) { return a.key < b.key; });

  if (sizes.size() >= 4) {
    for (double c : plan.c) {
      for (double alpha : plan.alpha) {
        std::vector<double> ns, qv, rho, rv;
        for (Index n : sizes) {
          const auto& cell = summary.cell({n, c, alpha});
          ns.push_back(static_cast<double>(n));
          qv.push_back(cell.median_abs_err);
          rho.push_back(cell.median_rho_sup_err);
          rv.push_back(cell.median_rv_sup_err);
        }
        auto add = [&](const char* name, const std::vector<double>& med) {
          try {
            summary.rates.push_back({name, c, alpha, static_cast<Index>(ns.size()), rate_regression(ns, med)});
          } catch (const Error&) {
            // recorded as absent; a check on it will fail
          }
        };
        add("qv_abs_err", qv);
        add("rho_sup_err", rho);
        add("rv_sup_err", rv);
      }
    }
  }
  summary.checks = evaluate_checks(plan, summary);
  return summary;
}

stats::LinearFit rate_regression(const std::vector<double>& n, const std::vector<double>& median_error) {
  if (n.size() != median_error.size()) fail(ErrorKind::LengthMismatch, "rate regression inputs differ in length");
  if (n.size() < 4)
    fail(ErrorKind::InsufficientCells, "rate regression needs >= 4 n values, got " + std::to_string(n.size()));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(median_error[i] > 0.0))
      fail(ErrorKind::InvalidArgument, "rate regression needs positive n and errors");
    x.push_back(std::log(n[i]));
    y.push_back(std::log(median_error[i]));
  }
  return stats::least_squares(x, y);
}

MixedNormalCheck mixed_normal_check(const std::vector<double>& errors, const std::vector<double>& tau_hat) {
  if (errors.size() != tau_hat.size()) fail(ErrorKind::LengthMismatch, "errors and tau_hat differ in length");
  if (errors.size() < 200)
    fail(ErrorKind::InsufficientReplications, "mixed-normal check needs >= 200 replications, got " +
                                                  std::to_string(errors.size()));
  std::vector<double> standardized, raw;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(tau_hat[i] > 0.0)) continue;
    standardized.push_back(errors[i] / std::sqrt(tau_hat[i]));
  }
  const double m = stats::mean(errors);
  const double sd = std::sqrt(stats::variance(errors));
  for (double e : errors) raw.push_back(sd > 0.0 ? (e - m) / sd : 0.0);
  return {stats::ks_distance_normal(standardized), stats::ks_distance_normal(raw)};
}

namespace {

CellKey key_from(const json& p, const McSummary& s) {
  CellKey k;
  k.n = p.value("n", s.cells.empty() ? Index{0} : s.cells.front().key.n);
  k.c = p.value("c", 1.0);
  k.alpha = p.value("alpha", 0.5);
  return k;
}

CheckResult range(CheckResult r, double value, double lo, double hi, std::string detail = {}) {
  r.value = value;
  r.lower = lo;
  r.upper = hi;
  r.pass = std::isfinite(value) && value >= lo && value <= hi;
  r.detail = std::move(detail);
  return r;
}

CheckResult evaluate(const CheckSpec& spec, const McSummary& s, double level) {
  CheckResult r;
  r.id = spec.id;
  r.kind = spec.kind;
  const json& p = spec.params;
  const double inf = std::numeric_limits<double>::infinity();
  if (spec.kind == "failures") {
    Index total = 0;
    for (const auto& c : s.cells) total += c.failures;
    return range(r, static_cast<double>(total), 0.0, p.value("max", 0.0), "failed replications across all cells");
  }
  if (spec.kind == "rate") {
    const std::string stat = p.value("statistic", "qv_abs_err");
    const double c = p.value("c", 1.0), alpha = p.value("alpha", 0.5);
    const double target = p.value("target", -0.5), tol = p.value("tol", 0.15);
    for (const auto& row : s.rates)
      if (row.statistic == stat && std::abs(row.c - c) < 1e-12 && std::abs(row.alpha - alpha) < 1e-12)
        return range(r, row.fit.slope, target - tol, target + tol,
                     stat + " slope over " + std::to_string(row.cells) + " n values");
    return range(r, std::numeric_limits<double>::quiet_NaN(), target - tol, target + tol,
                 "no rate regression for " + stat);
  }
  const CellSummary* cell = nullptr;
  try {
    cell = &s.cell(key_from(p, s));
  } catch (const Error& e) {
    r.detail = e.what();
    return r;
  }
  const std::string where = "n=" + std::to_string(cell->key.n) + " c=" + csv::format(cell->key.c) +
                            " alpha=" + csv::format(cell->key.alpha);
  const double tol_se = p.value("tol_se", 3.0);
  if (spec.kind == "bias_theory") {
    const double target = p.contains("target") ? p["target"].get<double>() : cell->mean_bias_theory;
    return range(r, cell->mean_err, target - tol_se * cell->se_err, target + tol_se * cell->se_err,
                 "mean normalized error vs bias " + csv::format(target) + " (" + where + ")");
  }
  if (spec.kind == "bias_sign") {
    const std::string sign = p.value("sign", "zero");
    if (sign == "positive") return range(r, cell->mean_err, 0.0 + 1e-300, inf, "mean normalized error > 0 (" + where + ")");
    if (sign == "negative") return range(r, cell->mean_err, -inf, -1e-300, "mean normalized error < 0 (" + where + ")");
    return range(r, cell->mean_err, -tol_se * cell->se_err, tol_se * cell->se_err,
                 "|mean normalized error| < " + csv::format(tol_se) + " SE (" + where + ")");
  }
  if (spec.kind == "rv_variance") {
    const double target = p.contains("target") ? p["target"].get<double>() : cell->mean_tau_true;
    const double tol = p.contains("tol") ? p["tol"].get<double>() : p.value("rel_tol", 0.15) * target;
    return range(r, cell->var_rv_err, target - tol, target + tol, "variance of normalized [Z,Z]_T error (" + where + ")");
  }
  if (spec.kind == "avar_median") {
    const double target = p.contains("target") ? p["target"].get<double>() : cell->median_tau_true;
    const double tol = p.value("rel_tol", 0.10) * target;
    return range(r, cell->median_tau_hat, target - tol, target + tol, "median quarticity estimate (" + where + ")");
  }
  if (spec.kind == "band_coverage" || spec.kind == "pointwise_coverage") {
    const double target = p.value("target", level), tol = p.value("tol", 0.03);
    const double v = spec.kind == "band_coverage" ? cell->band_coverage : cell->pointwise_coverage;
    return range(r, v, target - tol, target + tol, spec.kind + " (" + where + ")");
  }
  if (spec.kind == "ks_standardized") {
    const double max = p.value("max", 0.08);
    if (!cell->ks_standardized) {
      r.detail = "needs >= 200 successful replications (" + where + ")";
      return r;
    }
    auto out = range(r, *cell->ks_standardized, 0.0, max, "KS of standardized errors (" + where + ")");
    if (p.value("below_unstandardized", false)) {
      out.upper = std::min(max, std::nextafter(*cell->ks_unstandardized, 0.0));
      out.pass = out.pass && *cell->ks_standardized < *cell->ks_unstandardized;
      out.detail += "; unstandardized " + csv::format(*cell->ks_unstandardized);
    }
    return out;
  }
  if (spec.kind == "gof_rejection") {
    return range(r, cell->gof_rejection, p.value("min", 0.0), p.value("max", 1.0), "U-test rejection rate (" + where + ")");
  }
  if (spec.kind == "u_centred") {
    return range(r, cell->mean_u_centred, -tol_se * cell->se_u_centred, tol_se * cell->se_u_centred,
                 "mean of U + bias (" + where + ")");
  }
  if (spec.kind == "gap") {
    const double tol = p.value("rel_tol", 0.20) * cell->median_gap_true;
    return range(r, cell->median_gap, cell->median_gap_true - tol, cell->median_gap_true + tol,
                 "median sqrt(dt_bar) U vs true gap (" + where + ")");
  }
  if (spec.kind == "r2_median") {
    return range(r, cell->median_r2, p.value("min", 0.45), p.value("max", 0.55), "median R^2_T (" + where + ")");
  }
  r.detail = "unknown check kind";
  return r;
}

}  // namespace

std::vector<CheckResult> evaluate_checks(const ExperimentPlan& plan, const McSummary& summary) {
  std::vector<CheckResult> out;
  for (const auto& spec : plan.checks) out.push_back(evaluate(spec, summary, plan.level));
  return out;
}

std::map<std::string, std::string> summary_csvs(const McSummary& s, const ExperimentPlan& plan) {
  auto wants = [&](const char* family) {
    return std::find(plan.statistics.begin(), plan.statistics.end(), family) != plan.statistics.end();
  };
  auto f = [](double v) { return csv::format(v); };
  std::map<std::string, std::string> out;
  auto key_cols = [&](std::ostringstream& o, const CellSummary& c) {
    o << s.model << ',' << c.key.n << ',' << f(c.key.c) << ',' << f(c.key.alpha) << ',';
  };
  if (wants("errors")) {
    std::ostringstream o;
    o << "model,n,c,alpha,replications,failures,mean_err,sd_err,se_err,mean_bias_hat,mean_bias_theory,"
         "var_rv_err,mean_tau_true,median_tau_true,median_tau_hat,median_abs_err,median_rho_sup_err,"
         "median_rv_sup_err\n";
    for (const auto& c : s.cells) {
      key_cols(o, c);
      o << c.replications << ',' << c.failures << ',' << f(c.mean_err) << ',' << f(c.sd_err) << ','
        << f(c.se_err) << ',' << f(c.mean_bias_hat) << ',' << f(c.mean_bias_theory) << ',' << f(c.var_rv_err)
        << ',' << f(c.mean_tau_true) << ',' << f(c.median_tau_true) << ',' << f(c.median_tau_hat) << ','
        << f(c.median_abs_err) << ',' << f(c.median_rho_sup_err) << ',' << f(c.median_rv_sup_err) << '\n';
    }
    out["errors.csv"] = o.str();
  }
  if (wants("coverage")) {
    std::ostringstream o;
    o << "model,n,c,alpha,level,pointwise_coverage,band_coverage\n";
    for (const auto& c : s.cells) {
      key_cols(o, c);
      o << f(s.level) << ',' << f(c.pointwise_coverage) << ',' << f(c.band_coverage) << '\n';
    }
    out["coverage.csv"] = o.str();
  }
  if (wants("mixed_normal")) {
    std::ostringstream o;
    o << "model,n,c,alpha,ks_standardized,ks_unstandardized\n";
    for (const auto& c : s.cells) {
      key_cols(o, c);
      o << format_opt(c.ks_standardized) << ',' << format_opt(c.ks_unstandardized) << '\n';
    }
    out["mixed_normal.csv"] = o.str();
  }
  if (wants("gof")) {
    std::ostringstream o;
    o << "model,n,c,alpha,gof_replications,rejection_rate,mean_u_centred,se_u_centred,median_gap,median_gap_true,median_r2,"
         "median_r2_population\n";
    for (const auto& c : s.cells) {
      key_cols(o, c);
      o << c.gof_replications << ',' << format_nan(c.gof_rejection) << ',' << format_nan(c.mean_u_centred) << ','
        << format_nan(c.se_u_centred) << ',' << format_nan(c.median_gap) << ',' << format_nan(c.median_gap_true)
        << ',' << f(c.median_r2) << ',' << f(c.median_r2_population) << '\n';
    }
    out["gof.csv"] = o.str();
  }
  if (wants("rates")) {
    std::ostringstream o;
    o << "model,statistic,c,alpha,cells,slope,slope_se,intercept\n";
    for (const auto& r : s.rates)
      o << s.model << ',' << r.statistic << ',' << f(r.c) << ',' << f(r.alpha) << ',' << r.cells << ','
        << f(r.fit.slope) << ',' << f(r.fit.slope_se) << ',' << f(r.fit.intercept) << '\n';
    out["rates.csv"] = o.str();
  }
  if (plan.persist_replications) {
    std::ostringstream o;
    o << "model,n,c,alpha,replication,ok,err,bias_hat,bias_theory,rv_err,tau_hat,tau_true,rho_sup_err,"
         "ci_covers,band_covers,r2,u_centred,p_value,gap,gap_true\n";
    for (const auto& c : s.cells)
      for (const auto& r : c.records) {
        key_cols(o, c);
        o << r.replication << ',' << r.ok << ',' << f(r.err) << ',' << f(r.bias_hat) << ',' << f(r.bias_theory)
          << ',' << f(r.rv_err) << ',' << f(r.tau_hat) << ',' << f(r.tau_true) << ',' << f(r.rho_sup_err) << ','
          << r.ci_covers << ',' << r.band_covers << ',' << f(r.r2) << ',' << f(r.u_centred) << ','
          << f(r.p_value) << ',' << f(r.gap) << ',' << f(r.gap_true) << '\n';
      }
    out["replications.csv"] = o.str();
  }
  return out;
}

json verdict_json(const std::vector<CheckResult>& checks) {
  json j;
  bool all = true;
  j["checks"] = json::array();
  for (const auto& c : checks) {
    all = all && c.pass;
    j["checks"].push_back({{"id", c.id},
                           {"kind", c.kind},
                           {"pass", c.pass},
                           {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                           {"lower", std::isfinite(c.lower) ? json(c.lower) : json(nullptr)},
                           {"upper", std::isfinite(c.upper) ? json(c.upper) : json(nullptr)},
                           {"detail", c.detail}});
  }
  j["pass"] = all;
  return j;
}

}  // namespace itoanova
