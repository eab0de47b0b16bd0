#include "itoanova/cli.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "itoanova/acceptance.hpp"
#include "itoanova/anova.hpp"
#include "itoanova/csv.hpp"
#include "itoanova/gof.hpp"
#include "itoanova/harness.hpp"
#include "itoanova/sim.hpp"

namespace itoanova::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Logger {
  bool json_mode = false;

  void log(const char* level, const std::string& msg) const {
    if (json_mode)
      std::cerr << json{{"level", level}, {"msg", msg}}.dump() << '\n';
    else
      std::cerr << "itoanova: " << (std::string(level) == "info" ? "" : std::string(level) + ": ") << msg << '\n';
    std::cerr.flush();
  }
  void info(const std::string& msg) const { log("info", msg); }
  void warn(const std::string& msg) const { log("warning", msg); }
  void error(const std::string& msg) const { log("error", msg); }
};

struct Global {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool json_logs = false;
};

struct Inputs {
  std::string input;
  std::string s_file, xi_file;
  std::string s_col = "S", xi_col = "Xi";
};

struct EstimatorFlags {
  double alpha = 0.5;
  double c = 1.0;
  double level = 0.95;
  double floor = kDefaultFloor;
  bool no_bias_correct = false;
  bool isotonic = false;

  AnovaOptions options() const {
    AnovaOptions o;
    o.alpha = alpha;
    o.c = c;
    o.level = level;
    o.floor = floor;
    o.bias_correct = !no_bias_correct;
    o.isotonic = isotonic;
    return o;
  }
  json to_json() const {
    return {{"alpha", alpha}, {"c", c}, {"level", level}, {"floor", floor}, {"bias_correct", !no_bias_correct},
            {"isotonic", isotonic}};
  }
};

void add_inputs(CLI::App* app, Inputs& in) {
  auto* input = app->add_option("--input,-i", in.input, "CSV with header time,<S column>,<Xi column>");
  auto* s = app->add_option("--s-file", in.s_file, "asynchronous S ticks, header time,value");
  auto* xi = app->add_option("--xi-file", in.xi_file, "asynchronous Xi ticks, header time,value");
  input->excludes(s)->excludes(xi);
  s->needs(xi);
  xi->needs(s);
  app->add_option("--s-col", in.s_col, "regressor column name")->capture_default_str();
  app->add_option("--xi-col", in.xi_col, "response column name")->capture_default_str();
}

void add_estimator(CLI::App* app, EstimatorFlags& f) {
  app->add_option("--alpha", f.alpha, "estimator weight in [0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app->add_option("--c", f.c, "smoothing constant c = sqrt(dt_bar)/h")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--level", f.level, "confidence level in (0, 1)")
      ->check(CLI::Bound(1e-12, 1.0 - 1e-12))
      ->capture_default_str();
  app->add_option("--floor", f.floor, "relative floor for spot <S,S> denominators")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_flag("--no-bias-correct", f.no_bias_correct, "do not subtract the plug-in bias");
  app->add_flag("--isotonic", f.isotonic, "project the estimate onto nondecreasing paths");
}

struct LoadedData {
  PathSeries paths;
  std::vector<fs::path> files;
};

LoadedData load(const Inputs& in) {
  if (!in.input.empty()) {
    LoadedData d{csv::read_paths(fs::path(in.input)), {in.input}};
    d.paths.column(in.s_col);
    d.paths.column(in.xi_col);
    return d;
  }
  if (in.s_file.empty()) fail(ErrorKind::InvalidArgument, "give --input or both --s-file and --xi-file");
  return {previous_tick_align(csv::read_raw(fs::path(in.s_file)), csv::read_raw(fs::path(in.xi_file)), in.s_col,
                              in.xi_col),
          {in.s_file, in.xi_file}};
}

json manifest(const std::string& command, const json& config, const std::vector<std::uint64_t>& seeds,
              const std::vector<fs::path>& inputs) {
  json j;
  j["tool"] = "itoanova";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config;
  j["seeds"] = seeds;
  j["inputs"] = json::array();
  for (const auto& p : inputs) j["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json inputs_json(const Inputs& in) {
  if (!in.input.empty()) return {{"input", in.input}, {"s_col", in.s_col}, {"xi_col", in.xi_col}};
  return {{"s_file", in.s_file}, {"xi_file", in.xi_file}, {"s_col", in.s_col}, {"xi_col", in.xi_col}};
}

json report_summary(const AnovaReport& r, const std::optional<RSquaredReport>& r2) {
  const Index k = r.grid.intervals();
  json j;
  j["points"] = r.grid.size();
  j["horizon"] = r.grid.horizon();
  j["dt_bar"] = r.grid.mean_spacing();
  j["bandwidth"] = {{"c", r.bw.c}, {"h", r.bw.h}};
  j["estimate"] = r.estimate.terminal();
  j["raw_estimate"] = r.raw_estimate.terminal();
  j["bias"] = r.bias.terminal();
  j["bias_correction"] = r.bias_correction(k);
  j["avar"] = r.avar.terminal();
  j["ci"] = {{"level", r.ci.level}, {"lower", r.ci.lower(k)}, {"upper", r.ci.upper(k)}};
  if (r.band)
    j["band"] = {{"level", r.band->level},         {"tau_hat", r.band->tau_hat}, {"c_unit", r.band->c_unit},
                 {"c_tau", r.band->c_tau},         {"half_width", r.band->half_width}};
  else
    j["band"] = nullptr;
  if (r2)
    j["r2"] = {{"value", number_or_null(r2->r2(k))},
               {"variance", number_or_null(r2->variance(k))},
               {"ci_lower", number_or_null(r2->ci.lower(k))},
               {"ci_upper", number_or_null(r2->ci.upper(k))}};
  else
    j["r2"] = nullptr;
  const auto& d = r.diag;
  j["diagnostics"] = {{"burn_in_span", d.burn_in_span},   {"burn_in_points", d.burn_in_points},
                      {"floor_hits", d.floor_hits},       {"thin_window", d.thin_window},
                      {"mesh_ratio", d.mesh_ratio},       {"mesh_ratio_ok", d.mesh_ratio_ok},
                      {"isotonic_applied", d.isotonic_applied}, {"rho_qv_caveat", d.rho_qv_caveat}};
  return j;
}

std::string report_csv(const AnovaReport& r) {
  std::ostringstream o;
  o << "time,estimate,bias,avar,ci_lo,ci_hi,band_lo,band_hi\n";
  for (Index i = 0; i < r.grid.size(); ++i) {
    o << csv::format(r.grid[i]) << ',' << csv::format(r.estimate.values(i)) << ','
      << csv::format(std::sqrt(r.grid.mean_spacing()) * r.bias.values(i)) << ',' << csv::format(r.avar.values(i))
      << ',' << csv::format(r.ci.lower(i)) << ',' << csv::format(r.ci.upper(i)) << ',';
    if (r.band) o << csv::format(r.band->lower(i)) << ',' << csv::format(r.band->upper(i));
    else o << ',';
    o << '\n';
  }
  return o.str();
}

std::string rho_csv(const SpotSeries& rho) {
  std::ostringstream o;
  o << "time,rho_hat,valid\n";
  for (Index i = 0; i < rho.grid.size(); ++i)
    o << csv::format(rho.grid[i]) << ',' << csv::format(rho.values(i)) << ','
      << static_cast<int>(rho.valid[static_cast<std::size_t>(i)]) << '\n';
  return o.str();
}

void warn_diagnostics(const AnovaReport& r, const Logger& log) {
  if (r.diag.thin_window) log.warn("rolling window holds fewer than 5 increments");
  if (!r.diag.mesh_ratio_ok) log.warn("mesh ratio " + csv::format(r.diag.mesh_ratio) + " exceeds the cap");
  if (r.diag.floor_hits > 0) log.warn(std::to_string(r.diag.floor_hits) + " windows hit the denominator floor");
  if (!r.band) log.warn("estimated tau is zero; no global band");
}

std::map<std::string, std::string> cmd_simulate(const Global& g, const std::string& model_file,
                                                const std::string& model_text, double horizon, Index n,
                                                const std::string& grid_kind, Index fine_factor,
                                                const Logger& log) {
  json mj;
  std::vector<fs::path> inputs;
  if (!model_file.empty()) {
    std::ifstream f(model_file);
    if (!f) fail(ErrorKind::IoError, "cannot open " + model_file);
    try {
      mj = json::parse(f);
    } catch (const json::exception& e) {
      fail(ErrorKind::ConfigError, model_file + ": " + e.what());
    }
    inputs.push_back(model_file);
  } else {
    try {
      mj = json::parse(model_text);
    } catch (const json::exception& e) {
      fail(ErrorKind::ConfigError, std::string("--model-json: ") + e.what());
    }
  }
  const SimModel model = model_from_json(mj);
  validate_model(model, horizon);
  const SamplingGrid grid = grid_kind == "alternating" ? SamplingGrid::alternating(horizon, n)
                                                       : SamplingGrid::uniform(horizon, n);
  log.info("simulating " + std::string(model_name(model)) + " with " + std::to_string(fine_factor * n) +
           " fine steps");
  const FinePath fine = simulate(model, horizon, fine_factor * n, g.seed);
  const Observation obs = subsample(fine, grid);
  const GroundTruth truth = ground_truth(fine, obs);

  std::ostringstream observations;
  csv::write_paths(observations, obs.paths);
  csv::Table t{{"time", "qv_Z_true", "rho_true", "qv_S_true", "qv_Xi_true", "cov_XiS_true", "int_rho2_dSS_true",
                "Z_true"},
               {grid.times(), truth.qv_z, truth.rho, truth.qv_s, truth.qv_xi, truth.cov_xis, truth.int_rho2_dss,
                truth.z}};
  std::ostringstream truth_csv;
  csv::write_table(truth_csv, t);

  json config{{"model", model_to_json(model)}, {"horizon", horizon},     {"n", n},
              {"grid", grid_kind},             {"fine_factor", fine_factor}, {"tau_true", truth.tau},
              {"max_snap_error", obs.max_snap_error}};
  return {{"observations.csv", observations.str()},
          {"truth.csv", truth_csv.str()},
          {"manifest.json", dump(manifest("simulate", config, {g.seed}, inputs))}};
}

std::map<std::string, std::string> cmd_estimate(const Global& g, const Inputs& in, const EstimatorFlags& f,
                                                const Logger& log) {
  const auto data = load(in);
  const Column& s = data.paths.column(in.s_col);
  const Column& xi = data.paths.column(in.xi_col);
  const AnovaReport r = analyze(s, xi, data.paths.grid(), f.options());
  warn_diagnostics(r, log);
  std::optional<RSquaredReport> r2;
  try {
    r2 = r_squared(xi, r);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateTotalSS) throw;
    log.warn("[Xi,Xi]_T is zero; R^2 omitted");
  }
  json config{{"inputs", inputs_json(in)}, {"estimator", f.to_json()}};
  return {{"report.csv", report_csv(r)},
          {"summary.json", dump(report_summary(r, r2))},
          {"rho_hat.csv", rho_csv(r.spot.rho)},
          {"manifest.json", dump(manifest("estimate", config, {g.seed}, data.files))}};
}

std::map<std::string, std::string> cmd_band(const Global& g, const Inputs& in, const EstimatorFlags& f,
                                            const Logger& log) {
  const auto data = load(in);
  const AnovaReport r = analyze(data.paths.column(in.s_col), data.paths.column(in.xi_col), data.paths.grid(),
                                f.options());
  warn_diagnostics(r, log);
  if (!r.band) fail(ErrorKind::DegenerateTau, "estimated tau is zero; a global band is undefined");
  std::ostringstream o;
  o << "time,estimate,center,band_lo,band_hi\n";
  for (Index i = 0; i < r.grid.size(); ++i)
    o << csv::format(r.grid[i]) << ',' << csv::format(r.estimate.values(i)) << ','
      << csv::format(r.estimate.values(i) - r.bias_correction(i)) << ',' << csv::format(r.band->lower(i)) << ','
      << csv::format(r.band->upper(i)) << '\n';
  json b{{"level", r.band->level},   {"tau_hat", r.band->tau_hat},       {"c_unit", r.band->c_unit},
         {"c_tau", r.band->c_tau},   {"half_width", r.band->half_width}, {"estimate", r.estimate.terminal()},
         {"bias_correction", r.bias_correction(r.grid.intervals())}};
  json config{{"inputs", inputs_json(in)}, {"estimator", f.to_json()}};
  return {{"band.csv", o.str()},
          {"band.json", dump(b)},
          {"manifest.json", dump(manifest("band", config, {g.seed}, data.files))}};
}

std::map<std::string, std::string> cmd_gof(const Global& g, const Inputs& in, const EstimatorFlags& f,
                                           Index bootstrap, const Logger& log) {
  const auto data = load(in);
  const Column& s = data.paths.column(in.s_col);
  const Column& xi = data.paths.column(in.xi_col);
  const auto& grid = data.paths.grid();
  const AnovaReport r = analyze(s, xi, grid, f.options());
  warn_diagnostics(r, log);
  const double theta = fit_constant_beta(xi, s, grid);
  GofOptions go;
  go.bootstrap = bootstrap;
  go.seed = g.seed;
  const ParametricFit fit = u_statistic(xi, s, grid, theta, r, go);
  json j{{"family", fit.family},     {"theta_hat", fit.theta_hat}, {"U", fit.u},
         {"bias", fit.bias},         {"null_sd", fit.null_sd},     {"p_value", fit.p_value},
         {"gap", fit.gap},           {"level", fit.level},         {"rejected", fit.rejected},
         {"eta_hat", fit.eta_hat},   {"vs_terminal", fit.vs_terminal}, {"bootstrap", fit.bootstrap}};
  json config{{"inputs", inputs_json(in)}, {"estimator", f.to_json()}, {"family", "constant"}, {"bootstrap", bootstrap}};
  return {{"gof.json", dump(j)}, {"manifest.json", dump(manifest("gof", config, {g.seed}, data.files))}};
}

std::map<std::string, std::string> cmd_mc(const Global& g, const std::string& plan_file, unsigned threads,
                                          bool& passed, const Logger& log) {
  std::ifstream f(plan_file);
  if (!f) fail(ErrorKind::IoError, "cannot open " + plan_file);
  json pj;
  try {
    pj = json::parse(f);
  } catch (const json::exception& e) {
    fail(ErrorKind::PlanError, std::string(": ") + e.what());
  }
  std::map<std::string, std::string> out;
  if (pj.is_object() && pj.contains("suite")) {
    if (pj["suite"] != "acceptance") fail(ErrorKind::PlanError, "/suite: only \"acceptance\" is known");
    for (const auto& [key, _] : pj.items())
      if (key != "suite" && key != "seed_base" && key != "determinism_rerun")
        fail(ErrorKind::PlanError, "/" + key + ": unknown field for the acceptance suite");
    AcceptanceOptions opt;
    opt.threads = threads;
    if (pj.contains("seed_base")) {
      if (!pj["seed_base"].is_number_integer()) fail(ErrorKind::PlanError, "/seed_base: expected an integer");
      opt.seed_base = pj["seed_base"].get<std::uint64_t>();
    }
    if (pj.contains("determinism_rerun")) {
      if (!pj["determinism_rerun"].is_boolean()) fail(ErrorKind::PlanError, "/determinism_rerun: expected a boolean");
      opt.determinism_rerun = pj["determinism_rerun"].get<bool>();
    }
    log.info("running the acceptance suite, seed base " + std::to_string(opt.seed_base));
    const AcceptanceRun run = run_acceptance(opt);
    for (const auto& item : run.items) log.info(std::string(item.pass ? "PASS " : "FAIL ") + std::to_string(item.number) + " " + item.title);
    out = run.csvs;
    out["verdict.json"] = dump(run.verdict());
    json plans = json::array();
    for (const auto& p : run.plans) plans.push_back(plan_to_json(p));
    out["manifest.json"] = dump(manifest("mc", {{"suite", "acceptance"}, {"plans", plans}}, {opt.seed_base}, {plan_file}));
    passed = run.pass();
    return out;
  }
  const ExperimentPlan plan = plan_from_json(pj);
  log.info("running plan '" + plan.name + "' with " + std::to_string(plan.replications) + " replications");
  const McSummary summary = run_plan(plan, {threads});
  for (const auto& c : summary.cells)
    if (c.failures > 0)
      log.warn(std::to_string(c.failures) + " failed replications at n=" + std::to_string(c.key.n) + ": " +
               c.failure_messages.front());
  out = summary_csvs(summary, plan);
  const json verdict = verdict_json(summary.checks);
  out["verdict.json"] = dump(verdict);
  out["manifest.json"] = dump(manifest("mc", plan_to_json(plan), {plan.seed_base}, {plan_file}));
  passed = verdict["pass"].get<bool>();
  (void)g;
  return out;
}

}  // namespace

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + file.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

void write_outputs(const fs::path& dir, const std::map<std::string, std::string>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::pair<fs::path, fs::path>> staged;
  try {
    for (const auto& [name, bytes] : files) {
      const fs::path target = dir / name;
      fs::create_directories(target.parent_path());
      fs::path tmp = target;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) fail(ErrorKind::IoError, "cannot write " + tmp.string());
      staged.emplace_back(tmp, target);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      out.close();
      if (!out) fail(ErrorKind::IoError, "short write to " + tmp.string());
    }
  } catch (...) {
    for (const auto& [tmp, _] : staged) fs::remove(tmp, ec);
    throw;
  }
  for (const auto& [tmp, target] : staged) {
    fs::rename(tmp, target, ec);
    if (ec) fail(ErrorKind::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
  }
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"ANOVA for Ito processes: residual quadratic variation, bands, R^2 and goodness of fit",
               "itoanova"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out-dir,-o", g.out_dir, "directory for output files")->capture_default_str();
  app.add_flag("--json-logs", g.json_logs, "log as one JSON object per line");

  auto* sim = app.add_subcommand("simulate", "simulate S and Xi with ground truth");
  std::string model_file, model_text;
  double horizon = 1.0;
  Index n = 1024, fine_factor = 64;
  std::string grid_kind = "uniform";
  auto* mf = sim->add_option("--model", model_file, "model JSON file");
  auto* mt = sim->add_option("--model-json", model_text, "model JSON text");
  mf->excludes(mt);
  sim->add_option("--horizon", horizon, "time horizon T")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--n", n, "observation intervals")->check(CLI::Range(Index{1}, Index{1} << 24))->capture_default_str();
  sim->add_option("--grid", grid_kind, "observation grid")
      ->check(CLI::IsMember({"uniform", "alternating"}))
      ->capture_default_str();
  sim->add_option("--fine-factor", fine_factor, "fine steps per observation interval")
      ->check(CLI::Range(Index{1}, Index{4096}))
      ->capture_default_str();

  Inputs in;
  EstimatorFlags est;
  auto* estimate = app.add_subcommand("estimate", "residual QV report, rho_hat and R^2");
  add_inputs(estimate, in);
  add_estimator(estimate, est);
  auto* band = app.add_subcommand("band", "global confidence band");
  add_inputs(band, in);
  add_estimator(band, est);
  auto* gof = app.add_subcommand("gof", "U test of a parametric regression coefficient");
  add_inputs(gof, in);
  add_estimator(gof, est);
  std::string family = "constant";
  Index bootstrap = 99;
  gof->add_option("--family", family, "parametric family")->check(CLI::IsMember({"constant"}))->capture_default_str();
  gof->add_option("--bootstrap", bootstrap, "wild-bootstrap replicates for the null sd")
      ->check(CLI::Range(Index{2}, Index{100000}))
      ->capture_default_str();
  auto* mc = app.add_subcommand("mc", "Monte Carlo validation plan");
  std::string plan_file;
  unsigned threads = 0;
  mc->add_option("--plan", plan_file, "plan JSON file")->required();
  mc->add_option("--threads", threads, "worker threads (0: all cores)")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Usage;
  }

  Logger log{g.json_logs};
  try {
    std::map<std::string, std::string> files;
    bool passed = true;
    if (*sim) {
      if (model_file.empty() && model_text.empty()) {
        log.error("simulate needs --model or --model-json");
        return Usage;
      }
      files = cmd_simulate(g, model_file, model_text, horizon, n, grid_kind, fine_factor, log);
    } else if (*estimate) {
      files = cmd_estimate(g, in, est, log);
    } else if (*band) {
      files = cmd_band(g, in, est, log);
    } else if (*gof) {
      files = cmd_gof(g, in, est, bootstrap, log);
    } else if (*mc) {
      files = cmd_mc(g, plan_file, threads, passed, log);
    }
    write_outputs(g.out_dir, files);
    for (const auto& [name, _] : files) log.info("wrote " + (fs::path(g.out_dir) / name).string());
    if (!passed) {
      log.error("acceptance checks failed; see verdict.json");
      return AcceptanceFail;
    }
    return Ok;
  } catch (const Error& e) {
    log.error(e.what());
    return Data;
  } catch (const std::exception& e) {
    log.error(e.what());
    return Data;
  }
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace itoanova::cli
