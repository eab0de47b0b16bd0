#include "itoanova/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "itoanova/anova.hpp"
#include "itoanova/csv.hpp"
#include "itoanova/gof.hpp"
#include "itoanova/quadvar.hpp"
#include "itoanova/rng.hpp"

namespace itoanova {

using nlohmann::json;

namespace {

const char* const kTitles[] = {
    "",
    "qv_alpha(1/2) equals [Xi, Z_hat]",
    "qv_alpha is affine in alpha",
    "grid functional H_n on uniform and alternating grids",
    "variance of the normalized [Z,Z]_T error",
    "bias of the alpha family under constant rho",
    "convergence rates",
    "quarticity estimate of the asymptotic variance",
    "mixed normality under stochastic volatility",
    "global band coverage and c_1",
    "goodness-of-fit size and power",
    "R^2 sanity",
    "determinism of the Monte Carlo summaries",
};

std::string fmt(double v) { return csv::format(v); }

CheckSpec check(int item, std::string id, std::string kind, json params) {
  params["item"] = item;
  return {std::move(id), std::move(kind), std::move(params)};
}

CheckSpec supplementary(std::string id, std::string kind, json params) {
  return {std::move(id), std::move(kind), std::move(params)};
}

struct SyntheticInput {
  SamplingGrid grid;
  Column s, xi, rho;
};

// Irregular grid, correlated random walks and a noisy rho column.
SyntheticInput synthetic_input(std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo;
  const Index k = 50 + static_cast<Index>(rng() % 451);
  std::vector<double> t(static_cast<std::size_t>(k) + 1, 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + 0.1 + expo(rng);
  SyntheticInput in{SamplingGrid(t), Column(k + 1), Column(k + 1), Column(k + 1)};
  const double beta = 3.0 * normal(rng);
  in.s(0) = 100.0 * normal(rng);
  in.xi(0) = 100.0 * normal(rng);
  for (Index i = 0; i < k; ++i) {
    const double dt = t[static_cast<std::size_t>(i) + 1] - t[static_cast<std::size_t>(i)];
    const double ds = std::sqrt(dt) * normal(rng);
    in.s(i + 1) = in.s(i) + ds;
    in.xi(i + 1) = in.xi(i) + beta * ds + 0.5 * std::sqrt(dt) * normal(rng);
  }
  for (Index i = 0; i <= k; ++i) in.rho(i) = beta + 0.3 * normal(rng);
  return in;
}

double rel_diff(const Column& a, const Column& b, double scale) {
  const double d = (a - b).cwiseAbs().maxCoeff();
  return scale > 0.0 ? d / scale : d;
}

AcceptanceItem item_identity() {
  AcceptanceItem it{1, kTitles[1], false, {}};
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto in = synthetic_input(stream_key({0xa11ULL, t}));
    const auto res = residuals(in.xi, in.s, in.rho, in.grid);
    const Column half = qv_alpha(res, in.xi, in.s, in.rho, 0.5).values;
    const Column cross = realized_cov(in.xi, res.path, in.grid).values;
    worst = std::max(worst, rel_diff(half, cross, cross.cwiseAbs().maxCoeff()));
  }
  it.pass = worst < 1e-12;
  it.details.push_back("max relative difference over 100 inputs " + fmt(worst) + " (< 1e-12)");
  return it;
}

AcceptanceItem item_convexity() {
  AcceptanceItem it{2, kTitles[2], false, {}};
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto in = synthetic_input(stream_key({0xc0ffULL, t}));
    const auto res = residuals(in.xi, in.s, in.rho, in.grid);
    const Column q0 = qv_alpha(res, in.xi, in.s, in.rho, 0.0).values;
    const Column q1 = qv_alpha(res, in.xi, in.s, in.rho, 1.0).values;
    const double scale = std::max(q0.cwiseAbs().maxCoeff(), q1.cwiseAbs().maxCoeff());
    for (double alpha : {0.1, 0.25, 0.5, 0.7, 0.9}) {
      const Column qa = qv_alpha(res, in.xi, in.s, in.rho, alpha).values;
      worst = std::max(worst, rel_diff(qa, (1.0 - alpha) * q0 + alpha * q1, scale));
    }
  }
  it.pass = worst < 1e-12;
  it.details.push_back("max relative deviation over 100 inputs x 5 alphas " + fmt(worst) + " (< 1e-12)");
  return it;
}

AcceptanceItem item_grid_functional() {
  AcceptanceItem it{3, kTitles[3], false, {}};
  bool ok = true;
  // Dyadic uniform grids: every time and spacing is exact, so equality is bitwise.
  for (Index k : {1, 2, 64, 4096, 65536}) {
    const auto g = SamplingGrid::uniform(1.0, k);
    const Column h = h_curve(g);
    const bool exact = (h.array() == g.times().array()).all();
    ok = ok && exact;
    if (!exact) it.details.push_back("uniform k=" + std::to_string(k) + " is not bitwise exact");
  }
  // Other uniform grids carry rounding in the times themselves.
  double worst = 0.0;
  for (auto [T, k] : std::vector<std::pair<double, Index>>{{1.0, 3}, {1.0, 100}, {2.5, 1000}, {7.0, 999}}) {
    const auto g = SamplingGrid::uniform(T, k);
    worst = std::max(worst, (h_curve(g) - g.times()).cwiseAbs().maxCoeff() / T);
  }
  ok = ok && worst < 1e-12;
  it.details.push_back("uniform dyadic grids bitwise exact; non-dyadic max |H - t|/T " + fmt(worst));
  double worst_alt = 0.0;
  for (Index k : {2, 10, 4096, 10000}) {
    const auto g = SamplingGrid::alternating(1.0, k);
    const Column h = h_curve(g);
    worst_alt = std::max(worst_alt, std::abs(h(k) / g.horizon() - 10.0 / 9.0));
  }
  ok = ok && worst_alt < 1e-12;
  it.details.push_back("alternating a,2a grids: max |H(T)/T - 10/9| " + fmt(worst_alt) + " (< 1e-12)");
  it.pass = ok;
  return it;
}

AcceptanceItem item_band_constant() {
  AcceptanceItem it{9, kTitles[9], false, {}};
  double worst = 0.0;
  for (const auto& o : band_constant_oracle()) worst = std::max(worst, std::abs(unit_band_constant(o.level) - o.c1));
  it.pass = worst < 1e-6;
  it.details.push_back("c_1 vs eigen-series oracle at levels 0.5/0.9/0.95/0.99: max |diff| " + fmt(worst) +
                       " (< 1e-6)");
  return it;
}

AcceptanceItem item_r2_file() {
  AcceptanceItem it{11, kTitles[11], false, {}};
  Xoshiro256 rng(stream_key({0x5151ULL}));
  std::normal_distribution<double> normal;
  const Index k = 2048;
  std::ostringstream file;
  file << "time,S,Xi\n";
  double s = 10.0;
  for (Index i = 0; i <= k; ++i) {
    if (i > 0) s += normal(rng) / std::sqrt(static_cast<double>(k));
    file << csv::format(static_cast<double>(i) / static_cast<double>(k)) << ',' << csv::format(s) << ','
         << csv::format(2.0 * s) << '\n';
  }
  std::istringstream in(file.str());
  const PathSeries paths = csv::read_paths(in, "xi_equals_2s.csv");
  const auto rep = analyze(paths.column("S"), paths.column("Xi"), paths.grid(), {});
  const auto r2 = r_squared(paths.column("Xi"), rep);
  const double last = r2.r2(k);
  it.pass = last == 1.0 && rep.estimate.terminal() == 0.0;
  it.details.push_back("Xi = 2S file: R^2_T = " + fmt(last) + ", estimate_T = " + fmt(rep.estimate.terminal()) +
                       " (exactly 1 and 0)");
  return it;
}

}  // namespace

const std::vector<BandConstantOracle>& band_constant_oracle() {
  static const std::vector<BandConstantOracle> table{
      {0.50, 1.14897325814965323222334251672},
      {0.90, 1.95996394941864721564101707150},
      {0.95, 2.24140272733214161848788853131},
      {0.99, 2.80703376834380171439541598322},
  };
  return table;
}

std::vector<ExperimentPlan> acceptance_plans(std::uint64_t seed_base) {
  std::vector<ExperimentPlan> plans;

  ExperimentPlan a;
  a.name = "constant_rho";
  a.model = ConstantRho{1.0, 1.0, 1.0};
  a.model_index = 0;
  a.n = {4096};
  a.alpha = {0.0, 0.5, 1.0};
  a.replications = 1000;
  a.seed_base = seed_base;
  a.statistics = {"errors", "coverage", "mixed_normal", "gof"};
  a.gof_alpha = {0.5};
  a.checks = {
      check(4, "rv_variance", "rv_variance", {{"alpha", 0.5}, {"target", 2.0}, {"tol", 0.3}}),
      check(5, "bias_alpha0", "bias_theory", {{"alpha", 0.0}, {"target", 1.0}, {"tol_se", 3.0}}),
      check(5, "sign_alpha0", "bias_sign", {{"alpha", 0.0}, {"sign", "positive"}}),
      check(5, "sign_alpha1", "bias_sign", {{"alpha", 1.0}, {"sign", "negative"}}),
      check(5, "sign_alpha_half", "bias_sign", {{"alpha", 0.5}, {"sign", "zero"}, {"tol_se", 3.0}}),
      check(7, "avar_median", "avar_median", {{"alpha", 0.5}, {"target", 2.0}, {"rel_tol", 0.10}}),
      check(9, "band_coverage", "band_coverage", {{"alpha", 0.5}, {"tol", 0.03}}),
      check(10, "gof_size", "gof_rejection", {{"alpha", 0.5}, {"min", 0.03}, {"max", 0.07}}),
      check(11, "r2_median", "r2_median", {{"alpha", 0.5}, {"min", 0.45}, {"max", 0.55}}),
      supplementary("failures", "failures", json::object()),
      supplementary("pointwise_coverage", "pointwise_coverage", {{"alpha", 0.5}, {"tol", 0.03}}),
      supplementary("ks_constant_rho", "ks_standardized", {{"alpha", 0.5}, {"max", 0.06}}),
      supplementary("u_centred", "u_centred", {{"alpha", 0.5}, {"tol_se", 3.0}}),
      supplementary("bias_alpha1", "bias_theory", {{"alpha", 1.0}, {"target", -1.0}, {"tol_se", 3.0}}),
  };
  plans.push_back(a);

  ExperimentPlan b;
  b.name = "rates";
  b.model = ConstantRho{1.5, 1.0, 0.5};
  b.model_index = 1;
  b.n = {256, 1024, 4096, 16384};
  b.alpha = {0.0, 0.5, 1.0};
  b.replications = 200;
  b.seed_base = seed_base;
  b.statistics = {"errors", "rates"};
  for (double alpha : b.alpha)
    b.checks.push_back(check(6, "qv_rate_alpha" + fmt(alpha), "rate",
                             {{"statistic", "qv_abs_err"}, {"alpha", alpha}, {"target", -0.5}, {"tol", 0.15}}));
  b.checks.push_back(check(6, "rv_rate", "rate", {{"statistic", "rv_sup_err"}, {"alpha", 0.5}, {"target", -0.5}, {"tol", 0.15}}));
  b.checks.push_back(
      check(6, "rho_rate", "rate", {{"statistic", "rho_sup_err"}, {"alpha", 0.5}, {"target", -0.25}, {"tol", 0.10}}));
  b.checks.push_back(supplementary("failures", "failures", json::object()));
  plans.push_back(b);

  ExperimentPlan c;
  c.name = "stoch_vol";
  c.model = StochVol{1.0, 0.0, 1.0, 1.0, 0.0, 1.0};
  c.model_index = 2;
  c.n = {4096};
  c.alpha = {0.5};
  c.replications = 1000;
  c.seed_base = seed_base;
  c.statistics = {"errors", "coverage", "mixed_normal"};
  c.checks = {
      check(8, "ks_standardized", "ks_standardized", {{"alpha", 0.5}, {"max", 0.08}, {"below_unstandardized", true}}),
      supplementary("failures", "failures", json::object()),
      supplementary("band_coverage", "band_coverage", {{"alpha", 0.5}, {"tol", 0.03}}),
  };
  plans.push_back(c);

  ExperimentPlan d;
  d.name = "martingale_rho";
  d.model = MartingaleRho{1.0, 1.0, 1.0, 1.0};
  d.model_index = 3;
  d.n = {4096};
  d.alpha = {0.5};
  d.replications = 200;
  d.seed_base = seed_base;
  d.statistics = {"errors", "gof"};
  d.checks = {
      check(10, "gof_power", "gof_rejection", {{"alpha", 0.5}, {"min", std::nextafter(0.5, 1.0)}, {"max", 1.0}}),
      supplementary("failures", "failures", json::object()),
  };
  plans.push_back(d);
  return plans;
}

bool AcceptanceRun::pass() const {
  return std::all_of(items.begin(), items.end(), [](const AcceptanceItem& i) { return i.pass; });
}

json AcceptanceRun::verdict() const {
  json j;
  j["pass"] = pass();
  j["criteria"] = json::array();
  for (const auto& it : items)
    j["criteria"].push_back({{"item", it.number}, {"title", it.title}, {"pass", it.pass}, {"details", it.details}});
  j["plans"] = json::array();
  for (std::size_t p = 0; p < summaries.size(); ++p) {
    json pj = verdict_json(summaries[p].checks);
    pj["plan"] = plans[p].name;
    j["plans"].push_back(pj);
  }
  return j;
}

AcceptanceRun run_acceptance(const AcceptanceOptions& options) {
  AcceptanceRun run;
  std::map<int, AcceptanceItem> items;
  for (int i = 1; i <= 12; ++i) items[i] = {i, kTitles[i], true, {}};

  auto merge = [&](AcceptanceItem direct) {
    auto& it = items[direct.number];
    it.pass = it.pass && direct.pass;
    for (auto& d : direct.details) it.details.push_back(std::move(d));
  };
  merge(item_identity());
  merge(item_convexity());
  merge(item_grid_functional());
  merge(item_band_constant());
  merge(item_r2_file());

  run.plans = acceptance_plans(options.seed_base);
  for (const auto& plan : run.plans) {
    run.summaries.push_back(run_plan(plan, {options.threads}));
    const auto& summary = run.summaries.back();
    for (auto& [name, bytes] : summary_csvs(summary, plan)) run.csvs[plan.name + "/" + name] = bytes;
    for (std::size_t i = 0; i < plan.checks.size(); ++i) {
      const auto& spec = plan.checks[i];
      const auto& res = summary.checks[i];
      if (!spec.params.contains("item")) continue;
      auto& it = items[spec.params["item"].get<int>()];
      it.pass = it.pass && res.pass;
      it.details.push_back(plan.name + "/" + res.id + ": " + fmt(res.value) + " in [" + fmt(res.lower) + ", " +
                           fmt(res.upper) + "] " + (res.pass ? "ok" : "FAIL") + " - " + res.detail);
    }
  }

  // Power must also exceed the size.
  const auto& size = run.summaries[0].cell({4096, 1.0, 0.5});
  const auto& power = run.summaries[3].cell({4096, 1.0, 0.5});
  const bool above = power.gof_rejection > size.gof_rejection;
  items[10].pass = items[10].pass && above;
  items[10].details.push_back("power " + fmt(power.gof_rejection) + " exceeds size " + fmt(size.gof_rejection) +
                              (above ? " ok" : " FAIL"));

  if (options.determinism_rerun) {
    std::size_t compared = 0, differing = 0;
    for (const auto& plan : run.plans) {
      const auto again = run_plan(plan, {options.rerun_threads});
      for (auto& [name, bytes] : summary_csvs(again, plan)) {
        ++compared;
        if (run.csvs[plan.name + "/" + name] != bytes) {
          ++differing;
          items[12].details.push_back(plan.name + "/" + name + " differs between runs");
        }
      }
    }
    items[12].pass = differing == 0 && compared > 0;
    items[12].details.push_back(std::to_string(compared) + " summary CSVs rerun with " +
                                std::to_string(options.rerun_threads) + " threads, " + std::to_string(differing) +
                                " differ");
  } else {
    items[12].pass = false;
    items[12].details.push_back("rerun disabled; determinism not checked");
  }

  for (auto& [_, it] : items) run.items.push_back(std::move(it));
  return run;
}

}  // namespace itoanova
