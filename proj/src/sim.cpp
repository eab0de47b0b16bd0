#include "itoanova/sim.hpp"

#include <cmath>
#include <random>

#include "itoanova/rng.hpp"

namespace itoanova {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double get(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    fail(ErrorKind::ConfigError, std::string("model field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v))
    fail(ErrorKind::DegenerateModel, std::string(name) + " must be a finite value >= 0");
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    fail(ErrorKind::DegenerateModel, std::string(name) + " must be a finite value > 0");
}

struct Factors {
  explicit Factors(std::uint64_t seed, std::uint64_t count) {
    for (std::uint64_t f = 0; f < count; ++f) engines.emplace_back(stream_key({seed, f}));
    normals.resize(count);
  }
  double draw(std::size_t f) { return normals[f](engines[f]); }

  std::vector<Xoshiro256> engines;
  std::vector<std::normal_distribution<double>> normals;
};

void allocate(FinePath& p, Index n) {
  for (Column* c : {&p.s, &p.xi, &p.z, &p.rho, &p.spot_ss, &p.spot_zz, &p.spot_xis, &p.qv_z, &p.qv_s,
                    &p.qv_xi, &p.cov_xis, &p.int_rho2_dss, &p.qv_rho, &p.int_cov_drho,
                    &p.int_rhoqv_dss})
    c->setZero(n + 1);
}

// Left-point accumulation of every ground-truth integral over step j -> j+1.
void accumulate_truth(FinePath& p, Index j, double dt, double rho_vol2) {
  const double rho = p.rho(j);
  p.qv_s(j + 1) = p.qv_s(j) + p.spot_ss(j) * dt;
  p.qv_z(j + 1) = p.qv_z(j) + p.spot_zz(j) * dt;
  p.cov_xis(j + 1) = p.cov_xis(j) + p.spot_xis(j) * dt;
  p.int_rho2_dss(j + 1) = p.int_rho2_dss(j) + rho * rho * p.spot_ss(j) * dt;
  p.qv_xi(j + 1) = p.qv_xi(j) + (rho * rho * p.spot_ss(j) + p.spot_zz(j)) * dt;
  p.qv_rho(j + 1) = p.qv_rho(j) + rho_vol2 * dt;
  p.int_cov_drho(j + 1) = p.int_cov_drho(j) + p.spot_xis(j) * (p.rho(j + 1) - p.rho(j));
  p.int_rhoqv_dss(j + 1) = p.int_rhoqv_dss(j) + rho_vol2 * p.spot_ss(j) * dt;
}

void fill_last_coefficients(FinePath& p) {
  const Index n = p.n_fine;
  p.spot_ss(n) = p.spot_ss(n - 1);
  p.spot_zz(n) = p.spot_zz(n - 1);
  p.spot_xis(n) = p.spot_xis(n - 1);
}

void run(const ConstantRho& m, FinePath& p, std::uint64_t seed) {
  Factors f(seed, 2);
  const double dt = p.step(), sq = std::sqrt(dt);
  p.rho.setConstant(m.rho);
  p.spot_ss.setConstant(m.sigma_s * m.sigma_s);
  p.spot_zz.setConstant(m.sigma_z * m.sigma_z);
  p.spot_xis.setConstant(m.rho * m.sigma_s * m.sigma_s);
  for (Index j = 0; j < p.n_fine; ++j) {
    const double ds = m.sigma_s * sq * f.draw(0);
    const double dz = m.sigma_z * sq * f.draw(1);
    p.s(j + 1) = p.s(j) + ds;
    p.z(j + 1) = p.z(j) + dz;
    p.xi(j + 1) = p.xi(j) + m.rho * ds + dz;
    accumulate_truth(p, j, dt, 0.0);
  }
}

void run(const MartingaleRho& m, FinePath& p, std::uint64_t seed) {
  Factors f(seed, 3);
  const double dt = p.step(), sq = std::sqrt(dt);
  p.rho(0) = m.rho0;
  for (Index j = 0; j < p.n_fine; ++j) {
    const double ds = m.sigma_s * sq * f.draw(0);
    const double dz = m.sigma_z * sq * f.draw(1);
    p.rho(j + 1) = p.rho(j) + m.sigma_rho * sq * f.draw(2);
    p.spot_ss(j) = m.sigma_s * m.sigma_s;
    p.spot_zz(j) = m.sigma_z * m.sigma_z;
    p.spot_xis(j) = p.rho(j) * p.spot_ss(j);
    p.s(j + 1) = p.s(j) + ds;
    p.z(j + 1) = p.z(j) + dz;
    p.xi(j + 1) = p.xi(j) + p.rho(j) * ds + dz;
    accumulate_truth(p, j, dt, m.sigma_rho * m.sigma_rho);
  }
  fill_last_coefficients(p);
  p.spot_xis(p.n_fine) = p.rho(p.n_fine) * p.spot_ss(p.n_fine);
}

void run(const StochVol& m, FinePath& p, std::uint64_t seed) {
  Factors f(seed, 4);
  const double dt = p.step(), sq = std::sqrt(dt);
  double v = m.theta_v;
  p.rho(0) = m.rho0;
  for (Index j = 0; j < p.n_fine; ++j) {
    const double vol = std::exp(v);
    const double ds = vol * sq * f.draw(0);
    const double dz = m.sigma_z * vol * sq * f.draw(1);
    p.rho(j + 1) = p.rho(j) + (m.sigma_rho > 0.0 ? m.sigma_rho * sq * f.draw(2) : 0.0);
    p.spot_ss(j) = vol * vol;
    p.spot_zz(j) = m.sigma_z * m.sigma_z * vol * vol;
    p.spot_xis(j) = p.rho(j) * p.spot_ss(j);
    p.s(j + 1) = p.s(j) + ds;
    p.z(j + 1) = p.z(j) + dz;
    p.xi(j + 1) = p.xi(j) + p.rho(j) * ds + dz;
    accumulate_truth(p, j, dt, m.sigma_rho * m.sigma_rho);
    v += m.kappa_v * (m.theta_v - v) * dt + m.xi * sq * f.draw(3);
  }
  const double vol = std::exp(v);
  p.spot_ss(p.n_fine) = vol * vol;
  p.spot_zz(p.n_fine) = m.sigma_z * m.sigma_z * vol * vol;
  p.spot_xis(p.n_fine) = p.rho(p.n_fine) * p.spot_ss(p.n_fine);
}

void run(const VasicekBondPair& m, FinePath& p, std::uint64_t seed) {
  Factors f(seed, 1);
  const double dt = p.step(), sq = std::sqrt(dt);
  double r = m.r0;
  auto coefficients = [&](Index j) {
    const double t = p.time(j);
    const double p1 = vasicek::bond_price(m, r, m.maturity1 - t);
    const double p2 = vasicek::bond_price(m, r, m.maturity2 - t);
    const double d1 = vasicek::duration_factor(m.kappa, m.maturity1 - t) * p1;
    const double d2 = vasicek::duration_factor(m.kappa, m.maturity2 - t) * p2;
    p.s(j) = p1;
    p.xi(j) = p2;
    p.rho(j) = d2 / d1;
    p.spot_ss(j) = d1 * d1 * m.gamma * m.gamma;
    p.spot_xis(j) = d1 * d2 * m.gamma * m.gamma;
    p.spot_zz(j) = 0.0;
  };
  coefficients(0);
  for (Index j = 0; j < p.n_fine; ++j) {
    r += m.kappa * (m.alpha - r) * dt + m.gamma * sq * f.draw(0);
    coefficients(j + 1);
    p.z(j + 1) = p.z(j) + (p.xi(j + 1) - p.xi(j)) - p.rho(j) * (p.s(j + 1) - p.s(j));
    accumulate_truth(p, j, dt, 0.0);
  }
  // rho is a function of (r, t) here; its quadratic variation is not tracked.
  p.qv_rho.setZero();
  p.int_rhoqv_dss.setZero();
}

}  // namespace

std::string_view model_name(const SimModel& model) {
  return std::visit(overloaded{[](const ConstantRho&) { return std::string_view("ConstantRho"); },
                               [](const MartingaleRho&) { return std::string_view("MartingaleRho"); },
                               [](const StochVol&) { return std::string_view("StochVol"); },
                               [](const VasicekBondPair&) { return std::string_view("VasicekBondPair"); }},
                    model);
}

SimModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("model") || !j.at("model").is_string())
    fail(ErrorKind::ConfigError, "model document needs a string field 'model'");
  const auto name = j.at("model").get<std::string>();
  if (name == "ConstantRho") {
    ConstantRho m;
    m.rho = get(j, "rho", m.rho);
    m.sigma_s = get(j, "sigma_S", m.sigma_s);
    m.sigma_z = get(j, "sigma_Z", m.sigma_z);
    return m;
  }
  if (name == "MartingaleRho") {
    MartingaleRho m;
    m.rho0 = get(j, "rho_0", m.rho0);
    m.sigma_rho = get(j, "sigma_rho", m.sigma_rho);
    m.sigma_s = get(j, "sigma_S", m.sigma_s);
    m.sigma_z = get(j, "sigma_Z", m.sigma_z);
    return m;
  }
  if (name == "StochVol") {
    StochVol m;
    m.kappa_v = get(j, "kappa_v", m.kappa_v);
    m.theta_v = get(j, "theta_v", m.theta_v);
    m.xi = get(j, "xi", m.xi);
    m.rho0 = get(j, "rho_0", m.rho0);
    m.sigma_rho = get(j, "sigma_rho", m.sigma_rho);
    m.sigma_z = get(j, "sigma_Z", m.sigma_z);
    return m;
  }
  if (name == "VasicekBondPair") {
    VasicekBondPair m;
    m.kappa = get(j, "kappa", m.kappa);
    m.alpha = get(j, "alpha", m.alpha);
    m.gamma = get(j, "gamma", m.gamma);
    m.maturity1 = get(j, "T1", m.maturity1);
    m.maturity2 = get(j, "T2", m.maturity2);
    m.r0 = get(j, "r_0", m.r0);
    return m;
  }
  fail(ErrorKind::ConfigError,
       "unknown model '" + name + "'; valid variants: ConstantRho, MartingaleRho, StochVol, VasicekBondPair");
}

nlohmann::json model_to_json(const SimModel& model) {
  return std::visit(
      overloaded{
          [](const ConstantRho& m) {
            return nlohmann::json{{"model", "ConstantRho"}, {"rho", m.rho}, {"sigma_S", m.sigma_s},
                                  {"sigma_Z", m.sigma_z}};
          },
          [](const MartingaleRho& m) {
            return nlohmann::json{{"model", "MartingaleRho"}, {"rho_0", m.rho0}, {"sigma_rho", m.sigma_rho},
                                  {"sigma_S", m.sigma_s}, {"sigma_Z", m.sigma_z}};
          },
          [](const StochVol& m) {
            return nlohmann::json{{"model", "StochVol"}, {"kappa_v", m.kappa_v}, {"theta_v", m.theta_v},
                                  {"xi", m.xi}, {"rho_0", m.rho0}, {"sigma_rho", m.sigma_rho},
                                  {"sigma_Z", m.sigma_z}};
          },
          [](const VasicekBondPair& m) {
            return nlohmann::json{{"model", "VasicekBondPair"}, {"kappa", m.kappa}, {"alpha", m.alpha},
                                  {"gamma", m.gamma}, {"T1", m.maturity1}, {"T2", m.maturity2},
                                  {"r_0", m.r0}};
          }},
      model);
}

void validate_model(const SimModel& model, double horizon) {
  require_positive(horizon, "horizon");
  std::visit(overloaded{[](const ConstantRho& m) {
                          require_positive(m.sigma_s, "sigma_S");
                          require_nonnegative(m.sigma_z, "sigma_Z");
                        },
                        [](const MartingaleRho& m) {
                          require_positive(m.sigma_s, "sigma_S");
                          require_nonnegative(m.sigma_z, "sigma_Z");
                          require_nonnegative(m.sigma_rho, "sigma_rho");
                        },
                        [](const StochVol& m) {
                          require_positive(m.kappa_v, "kappa_v");
                          require_nonnegative(m.xi, "xi");
                          require_nonnegative(m.sigma_rho, "sigma_rho");
                          require_nonnegative(m.sigma_z, "sigma_Z");
                          if (!std::isfinite(m.theta_v)) fail(ErrorKind::DegenerateModel, "theta_v not finite");
                        },
                        [horizon](const VasicekBondPair& m) {
                          require_positive(m.kappa, "kappa");
                          require_positive(m.gamma, "gamma");
                          if (!(horizon < m.maturity1 && m.maturity1 < m.maturity2))
                            fail(ErrorKind::DegenerateModel, "bond pair needs horizon < T1 < T2");
                        }},
             model);
}

namespace vasicek {

double duration_factor(double kappa, double tau) { return -std::expm1(-kappa * tau) / kappa; }

double bond_price(const VasicekBondPair& m, double r, double tau) {
  const double b = duration_factor(m.kappa, tau);
  const double k2 = m.kappa * m.kappa;
  const double g2 = m.gamma * m.gamma;
  const double log_a = (b - tau) * (k2 * m.alpha - 0.5 * g2) / k2 - g2 * b * b / (4.0 * m.kappa);
  return std::exp(log_a - b * r);
}

double hedge_ratio(const VasicekBondPair& m, double r, double t) {
  const double d1 = duration_factor(m.kappa, m.maturity1 - t) * bond_price(m, r, m.maturity1 - t);
  const double d2 = duration_factor(m.kappa, m.maturity2 - t) * bond_price(m, r, m.maturity2 - t);
  return d2 / d1;
}

}  // namespace vasicek

FinePath simulate(const SimModel& model, double horizon, Index n_fine, std::uint64_t seed) {
  if (n_fine < 1024) fail(ErrorKind::InvalidArgument, "n_fine must be at least 2^10");
  validate_model(model, horizon);
  FinePath p;
  p.horizon = horizon;
  p.n_fine = n_fine;
  allocate(p, n_fine);
  std::visit([&](const auto& m) { run(m, p, seed); }, model);
  return p;
}

Observation subsample(const FinePath& fine, const SamplingGrid& grid) {
  const double dt = fine.step();
  if (grid.horizon() > fine.horizon + 0.5 * dt)
    fail(ErrorKind::GridBeyondHorizon, "observation grid ends at " + std::to_string(grid.horizon()) +
                                           ", fine path at " + std::to_string(fine.horizon));
  std::vector<Index> idx(static_cast<std::size_t>(grid.size()));
  double max_err = 0.0;
  for (Index i = 0; i < grid.size(); ++i) {
    const Index j = std::min<Index>(static_cast<Index>(std::llround(grid[i] / dt)), fine.n_fine);
    if (i > 0 && j <= idx[static_cast<std::size_t>(i) - 1])
      fail(ErrorKind::InvalidArgument, "observation grid is too dense for the fine path");
    idx[static_cast<std::size_t>(i)] = j;
    max_err = std::max(max_err, std::abs(grid[i] - fine.time(j)));
  }
  Column s(grid.size()), xi(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    s(i) = fine.s(idx[static_cast<std::size_t>(i)]);
    xi(i) = fine.xi(idx[static_cast<std::size_t>(i)]);
  }
  return {PathSeries(grid, {"S", "Xi"}, {std::move(s), std::move(xi)}), std::move(idx), max_err};
}

double tau_true(const FinePath& fine, const SamplingGrid& grid, const std::vector<Index>& fine_index) {
  const Column dt = grid.spacings();
  double tau = 0.0;
  for (Index i = 0; i < grid.intervals(); ++i) {
    const double zz = fine.spot_zz(fine_index[static_cast<std::size_t>(i)]);
    tau += 2.0 * zz * zz * dt(i) * dt(i) / grid.mean_spacing();
  }
  return tau;
}

GroundTruth ground_truth(const FinePath& fine, const Observation& obs) {
  const auto& grid = obs.paths.grid();
  const Index n = grid.size();
  auto pick = [&](const Column& c) {
    Column out(n);
    for (Index i = 0; i < n; ++i) out(i) = c(obs.fine_index[static_cast<std::size_t>(i)]);
    return out;
  };
  GroundTruth g;
  g.qv_z = pick(fine.qv_z);
  g.qv_s = pick(fine.qv_s);
  g.qv_xi = pick(fine.qv_xi);
  g.cov_xis = pick(fine.cov_xis);
  g.int_rho2_dss = pick(fine.int_rho2_dss);
  g.rho = pick(fine.rho);
  g.z = pick(fine.z);
  g.int_cov_drho = pick(fine.int_cov_drho);
  g.int_rhoqv_dss = pick(fine.int_rhoqv_dss);
  const Column dt = grid.spacings();
  g.h_weighted_qv_z.setZero(n);
  for (Index i = 0; i + 1 < n; ++i)
    g.h_weighted_qv_z(i + 1) =
        g.h_weighted_qv_z(i) + dt(i) / grid.mean_spacing() * (g.qv_z(i + 1) - g.qv_z(i));
  g.tau = tau_true(fine, grid, obs.fine_index);
  return g;
}

}  // namespace itoanova
