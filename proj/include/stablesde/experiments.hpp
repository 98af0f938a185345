#pragma once

// Config-driven experiment runners behind the command-line tool, and the
// acceptance suite built from them. Every runner returns a JSON result, one CSV
// table and a list of named assertions; the suite adds runtime limits.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stablesde/drift.hpp"
#include "stablesde/errors.hpp"
#include "stablesde/io.hpp"
#include "stablesde/levy_measure.hpp"
#include "stablesde/resolvent_solver.hpp"
#include "stablesde/rng.hpp"
#include "stablesde/sde_integrator.hpp"
#include "stablesde/stable_sampler.hpp"
#include "stablesde/stats.hpp"

namespace stablesde::experiments {

inline constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Results

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string to_csv() const {
    auto cell = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    };
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + cell(r[i]);
      out += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Outcome {
  std::string command;
  nlohmann::json result;
  Table table;
  std::vector<Assertion> assertions;
  // Secondary artifacts keyed by file stem.
  std::map<std::string, Table> extra_tables;
  std::map<std::string, nlohmann::json> extra_json;

  bool pass() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
  }
  void check(std::string name, bool ok, std::string detail = {}) {
    assertions.push_back({std::move(name), ok, std::move(detail)});
  }
  nlohmann::json assertions_json() const {
    auto a = nlohmann::json::array();
    for (const auto& x : assertions) a.push_back({{"name", x.name}, {"pass", x.pass}, {"detail", x.detail}});
    return a;
  }
};

inline std::string num(double x) { return format_double(x); }

inline std::string join(std::span<const double> v, const char* sep = " ") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + num(v[i]);
  return s;
}

// ---------------------------------------------------------------------------
// Config reading

/// Config validation failure carrying every problem found.
class ConfigErrors : public ConfigError {
 public:
  explicit ConfigErrors(std::vector<std::string> errors)
      : ConfigError(errors.empty() ? "invalid config" : errors.front()), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Typed access to a JSON object that records type errors and unknown keys
/// instead of stopping at the first one.
class ConfigReader {
 public:
  explicit ConfigReader(const nlohmann::json& j) : j_(j) {
    if (!j_.is_object()) errors_.push_back("config must be a JSON object");
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.is_object() || !j_.contains(key) || j_.at(key).is_null()) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      errors_.push_back("'" + key + "' has the wrong type");
      return fallback;
    }
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    used_.insert(key);
    if (!j_.is_object() || !j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      errors_.push_back("'" + key + "' has the wrong type");
      return std::nullopt;
    }
  }

  nlohmann::json raw(const std::string& key, nlohmann::json fallback) {
    used_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return fallback;
    return j_.at(key);
  }

  void require(bool ok, const std::string& message) {
    if (!ok) errors_.push_back(message);
  }

  /// Throws ConfigErrors if anything was wrong, including keys never read.
  void finish() {
    if (j_.is_object())
      for (const auto& [k, v] : j_.items())
        if (!used_.count(k)) errors_.push_back("unknown key '" + k + "'");
    if (!errors_.empty()) throw ConfigErrors(errors_);
  }

 private:
  const nlohmann::json& j_;
  std::set<std::string> used_;
  std::vector<std::string> errors_;
};

inline SpectralMeasure read_measure(ConfigReader& r, const nlohmann::json& doc, const std::string& key) {
  try {
    return measure_from_json(doc);
  } catch (const std::exception& e) {
    r.require(false, "'" + key + "': " + e.what());
    return two_point_measure(0.5);
  }
}

inline Drift read_drift(ConfigReader& r, const nlohmann::json& doc, const std::string& key, int dimension = 1) {
  try {
    return drift_from_json(doc, dimension);
  } catch (const std::exception& e) {
    r.require(false, "'" + key + "': " + e.what());
    return zero_drift(dimension);
  }
}

// ---------------------------------------------------------------------------
// Regression manifest (calibrated constants)

struct RegressionManifest {
  std::optional<double> fd_allowance;
  std::optional<double> bifurcation_floor;
  nlohmann::json document = nlohmann::json::object();
};

inline RegressionManifest load_regression_manifest(const std::string& path) {
  RegressionManifest m;
  std::ifstream is(path);
  if (!is) return m;
  try {
    is >> m.document;
    if (m.document.contains("resolvent_compare"))
      m.fd_allowance = m.document.at("resolvent_compare").at("fd_allowance").get<double>();
    if (m.document.contains("bifurcation"))
      m.bifurcation_floor = m.document.at("bifurcation").at("floor").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed regression manifest: ") + e.what());
  }
  return m;
}

// ---------------------------------------------------------------------------
// hk-check

struct HkCheckConfig {
  nlohmann::json measure = {{"kind", "lattice"}, {"alpha", 0.5}, {"spacing", 0.3}};
  std::vector<double> thetas{0.4};
  int direction_grid = 720;
  std::vector<double> delta_grid = default_delta_grid();
  std::optional<bool> expect_satisfied;
  std::uint64_t seed = 0x5eed;

  static HkCheckConfig parse(const nlohmann::json& j) {
    ConfigReader r(j);
    HkCheckConfig c;
    c.measure = r.raw("measure", c.measure);
    read_measure(r, c.measure, "measure");
    if (auto t = r.optional<double>("theta")) c.thetas = {*t};
    c.thetas = r.get("thetas", c.thetas);
    c.direction_grid = r.get("direction_grid", c.direction_grid);
    c.delta_grid = r.get("delta_grid", c.delta_grid);
    c.expect_satisfied = r.optional<bool>("expect_satisfied");
    c.seed = r.get("seed", c.seed);
    r.require(!c.thetas.empty(), "'thetas' must not be empty");
    for (double t : c.thetas) r.require(t > 0.0 && t < std::numbers::pi, "every theta must lie in (0, pi)");
    r.require(c.direction_grid >= 8, "'direction_grid' must be at least 8");
    r.require(!c.delta_grid.empty(), "'delta_grid' must not be empty");
    for (double d : c.delta_grid) r.require(d > 0.0 && d <= 1.0, "every delta must lie in (0, 1]");
    r.finish();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"measure", measure}, {"thetas", thetas}, {"direction_grid", direction_grid},
                     {"delta_grid", delta_grid}, {"seed", seed}};
    if (expect_satisfied) j["expect_satisfied"] = *expect_satisfied;
    return j;
  }
};

inline Outcome run_hk_check(const HkCheckConfig& c) {
  Outcome o{"hk-check"};
  const auto m = measure_from_json(c.measure);
  o.table.header = {"theta", "direction", "best_axis", "ratio"};
  o.result = {{"command", o.command}, {"measure", to_json(m)}, {"reports", nlohmann::json::array()}};
  for (double theta : c.thetas) {
    const auto rep = check_cone_condition(m, theta, c.direction_grid, c.delta_grid, {360, c.seed});
    auto j = to_json(rep);
    j.erase("per_direction");
    o.result["reports"].push_back(j);
    for (const auto& row : rep.per_direction_table)
      o.table.add({num(theta), join(row.direction), join(row.best_axis), num(row.ratio)});
    if (c.expect_satisfied)
      o.check("theta=" + num(theta) + " satisfied", rep.satisfied == *c.expect_satisfied,
              "satisfied=" + std::string(rep.satisfied ? "true" : "false") + " kappa_hat=" + num(rep.kappa_hat));
  }
  return o;
}

// ---------------------------------------------------------------------------
// epsilon0

struct Epsilon0Config {
  double kappa = 2.0 / 3.0;
  double alpha = 0.5;
  double theta = 0.2;
  int gamma_points = 200;
  int eta_points = 200;
  std::optional<bool> expect_feasible;
  double refinement_tolerance = 1e-6;  // relative, between the grid and a 2.5x finer one

  static Epsilon0Config parse(const nlohmann::json& j) {
    ConfigReader r(j);
    Epsilon0Config c;
    c.kappa = r.get("kappa", c.kappa);
    c.alpha = r.get("alpha", c.alpha);
    c.theta = r.get("theta", c.theta);
    c.gamma_points = r.get("gamma_points", c.gamma_points);
    c.eta_points = r.get("eta_points", c.eta_points);
    c.expect_feasible = r.optional<bool>("expect_feasible");
    c.refinement_tolerance = r.get("refinement_tolerance", c.refinement_tolerance);
    r.require(c.kappa > 0.0, "'kappa' must be positive");
    r.require(c.alpha > 0.0 && c.alpha < 1.0, "'alpha' must lie in (0, 1)");
    r.require(c.gamma_points >= 1 && c.eta_points >= 1, "grid sizes must be positive");
    r.finish();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kappa", kappa},           {"alpha", alpha},         {"theta", theta},
                     {"gamma_points", gamma_points}, {"eta_points", eta_points},
                     {"refinement_tolerance", refinement_tolerance}};
    if (expect_feasible) j["expect_feasible"] = *expect_feasible;
    return j;
  }
};

inline Outcome run_epsilon0(const Epsilon0Config& c) {
  Outcome o{"epsilon0"};
  const auto res = compute_epsilon0(c.kappa, c.alpha, c.theta, {c.gamma_points, c.eta_points});
  const auto fine = compute_epsilon0(c.kappa, c.alpha, c.theta,
                                     {c.gamma_points * 5 / 2 + 1, c.eta_points * 5 / 2 + 1});
  const double rel = res.feasible ? std::abs(fine.epsilon0 - res.epsilon0) / res.epsilon0 : 0.0;
  o.result = to_json(res);
  o.result["command"] = o.command;
  o.result["refined_epsilon0"] = fine.epsilon0;
  o.result["refinement_relative_change"] = rel;
  const auto iv = admissible_theta_interval(c.alpha);
  o.result["theta_interval"] = {{"feasible_upper", iv.feasible_upper}, {"printed_lower", iv.printed_lower},
                                {"printed_upper", iv.printed_upper}};
  o.table.header = {"kappa", "alpha", "theta", "epsilon0", "gamma_star", "eta_star", "feasible"};
  auto opt = [](double x) { return std::isfinite(x) ? num(x) : std::string(); };
  o.table.add({num(c.kappa), num(c.alpha), num(c.theta), num(res.epsilon0), opt(res.gamma_star), opt(res.eta_star),
               res.feasible ? "true" : "false"});
  if (c.expect_feasible) o.check("feasible", res.feasible == *c.expect_feasible);
  if (res.feasible) o.check("grid refinement", rel <= c.refinement_tolerance, "relative change " + num(rel));
  return o;
}

// ---------------------------------------------------------------------------
// sampler-validate

/// 20 frequencies with h psi(xi) log-spaced in [t_min, t_max]; in d = 2 the angle also rotates.
inline std::vector<std::vector<double>> cf_frequencies(const SpectralMeasure& m, double h, int count, double t_min,
                                                       double t_max) {
  std::vector<std::vector<double>> xs;
  const int d = m.dimension();
  for (int k = 0; k < count; ++k) {
    const double t = t_min * std::pow(t_max / t_min, count > 1 ? double(k) / (count - 1) : 0.0);
    std::vector<double> u(d, 0.0);
    if (d == 1) {
      u[0] = 1.0;
    } else {
      const double phi = (k + 0.5) * std::numbers::pi / count;
      u[0] = std::cos(phi);
      u[1] = std::sin(phi);
    }
    const double psi_u = levy_symbol(m, u);
    const double r = std::pow(t / (h * psi_u), 1.0 / m.alpha());
    for (double& x : u) x *= r;
    xs.push_back(u);
  }
  return xs;
}

/// Cutoff rho with h |xi|^2 / 2 * int_{|z|<=rho} |z|^2 mu(dz) <= bias, capped at 1.
inline double compound_poisson_cutoff(const SpectralMeasure& m, double h, double xi_max, double bias) {
  const double a = m.alpha();
  const double rho = std::pow(2.0 * (2.0 - a) * bias / (h * m.total_mass() * xi_max * xi_max), 1.0 / (2.0 - a));
  return std::min(1.0, rho);
}

struct SamplerValidateConfig {
  nlohmann::json measure = {{"kind", "two_point"}, {"alpha", 0.5}};
  std::string method;      // empty: the exact method for the measure kind
  double cutoff = 0.0;     // compound_poisson; 0 picks one from bias_target
  double bias_target = 5e-4;
  double h = 1.0;
  std::size_t N = 1000000;
  int frequencies = 20;
  double t_min = 0.02, t_max = 4.0;
  std::size_t ks_samples = 100000;
  double ks_h = 0.01;
  std::uint64_t seed = 1;

  static SamplerValidateConfig parse(const nlohmann::json& j) {
    ConfigReader r(j);
    SamplerValidateConfig c;
    c.measure = r.raw("measure", c.measure);
    const auto m = read_measure(r, c.measure, "measure");
    c.method = r.get("method", c.method);
    c.cutoff = r.get("cutoff", c.cutoff);
    c.bias_target = r.get("bias_target", c.bias_target);
    c.h = r.get("h", c.h);
    c.N = r.get("N", c.N);
    c.frequencies = r.get("frequencies", c.frequencies);
    c.t_min = r.get("t_min", c.t_min);
    c.t_max = r.get("t_max", c.t_max);
    c.ks_samples = r.get("ks_samples", c.ks_samples);
    c.ks_h = r.get("ks_h", c.ks_h);
    c.seed = r.get("seed", c.seed);
    r.require(c.h > 0.0 && c.ks_h > 0.0, "'h' and 'ks_h' must be positive");
    r.require(c.N >= 1, "'N' must be positive");
    r.require(c.frequencies >= 1, "'frequencies' must be positive");
    r.require(c.t_min > 0.0 && c.t_max >= c.t_min, "need 0 < t_min <= t_max");
    r.require(c.cutoff >= 0.0 && c.cutoff <= 1.0, "'cutoff' must lie in [0, 1]");
    r.require(c.bias_target > 0.0, "'bias_target' must be positive");
    r.require(m.dimension() <= 2, "sampler-validate supports d <= 2");
    if (!c.method.empty()) {
      try {
        auto spec = default_sampler(m);
        spec.method = sampler_method_from_string(c.method);
        spec.cutoff = 1.0;
        validate(spec);
      } catch (const ConfigError& e) {
        r.require(false, std::string("'method': ") + e.what());
      }
    }
    r.finish();
    return c;
  }

  nlohmann::json to_json() const {
    return {{"measure", measure}, {"method", method}, {"cutoff", cutoff}, {"bias_target", bias_target},
            {"h", h}, {"N", N}, {"frequencies", frequencies}, {"t_min", t_min}, {"t_max", t_max},
            {"ks_samples", ks_samples}, {"ks_h", ks_h}, {"seed", seed}};
  }
};

inline SamplerSpec resolve_sampler(const SamplerValidateConfig& c, const SpectralMeasure& m,
                                   const std::vector<std::vector<double>>& xis, double& bias_bound) {
  auto spec = default_sampler(m, c.seed, 0);
  if (!c.method.empty()) spec.method = sampler_method_from_string(c.method);
  bias_bound = 0.0;
  if (spec.method == SamplerMethod::compound_poisson) {
    double xi_max = 0.0;
    for (const auto& xi : xis) xi_max = std::max(xi_max, norm(xi));
    spec.cutoff = c.cutoff > 0.0 ? c.cutoff : compound_poisson_cutoff(m, c.h, xi_max, c.bias_target);
    bias_bound = c.h * xi_max * xi_max * 0.5 * m.truncated_second_moment(spec.cutoff);
  }
  return spec;
}

inline Outcome run_sampler_validate(const SamplerValidateConfig& c) {
  Outcome o{"sampler-validate"};
  const auto m = measure_from_json(c.measure);
  const auto xis = cf_frequencies(m, c.h, c.frequencies, c.t_min, c.t_max);
  double bias = 0.0;
  const auto spec = resolve_sampler(c, m, xis, bias);
  const auto z = sample_increments(spec, c.h, c.N);
  const int d = m.dimension();
  o.table.header = {"k", "xi", "empirical", "exact", "deviation"};
  double worst = 0.0;
  for (std::size_t k = 0; k < xis.size(); ++k) {
    const double emp = empirical_cf(z, d, xis[k]);
    const double exact = std::exp(-c.h * levy_symbol(m, xis[k]));
    worst = std::max(worst, std::abs(emp - exact));
    o.table.add({std::to_string(k), join(xis[k]), num(emp), num(exact), num(std::abs(emp - exact))});
  }
  const double tol = 4.0 / std::sqrt(static_cast<double>(c.N));

  // h^{1/alpha} scaling of the law, first coordinate; compound Poisson scales its cutoff too.
  auto small = spec, unit = spec;
  small.stream_id = 1;
  unit.stream_id = 2;
  const double s = std::pow(c.ks_h, 1.0 / m.alpha());
  if (spec.method == SamplerMethod::compound_poisson) small.cutoff = spec.cutoff * s;
  const auto a = sample_increments(small, c.ks_h, c.ks_samples);
  const auto b = sample_increments(unit, 1.0, c.ks_samples);
  std::vector<double> xa(c.ks_samples), xb(c.ks_samples);
  for (std::size_t k = 0; k < c.ks_samples; ++k) {
    xa[k] = a[k * d];
    xb[k] = s * b[k * d];
  }
  const auto ks = ks_two_sample(xa, xb);

  o.result = {{"command", o.command},  {"sampler", to_json(spec)},     {"h", c.h},
              {"N", c.N},              {"max_deviation", worst},       {"tolerance", tol},
              {"bias_bound", bias},    {"ks_statistic", ks.statistic}, {"ks_p_value", ks.p_value}};
  o.check("characteristic function", worst < tol, "max deviation " + num(worst) + " vs " + num(tol));
  o.check("self-similarity", ks.p_value > 0.01, "KS p " + num(ks.p_value));
  return o;
}

// ---------------------------------------------------------------------------
// resolvent-compare (b = 0, d = 1)

struct ResolventCompareConfig {
  double alpha = 0.5;
  double c = 1.0;  // isotropic density c |z|^{-1-alpha}
  double lambda = 1.0;
  std::vector<double> points{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  std::size_t N = 100000;
  double h = 1e-3;
  double epsilon = 0.01;  // sets T through select_truncation
  double bump_radius = 1.0;
  double grid_half_width = 32.0;
  double grid_step = 1.0 / 32.0;
  double fft_half_width = 2500.0;
  std::optional<double> fd_allowance;
  std::uint64_t seed = 5;

  static ResolventCompareConfig parse(const nlohmann::json& j) {
    ConfigReader r(j);
    ResolventCompareConfig c;
    c.alpha = r.get("alpha", c.alpha);
    c.c = r.get("c", c.c);
    c.lambda = r.get("lambda", c.lambda);
    c.points = r.get("points", c.points);
    c.N = r.get("N", c.N);
    c.h = r.get("h", c.h);
    c.epsilon = r.get("epsilon", c.epsilon);
    c.bump_radius = r.get("bump_radius", c.bump_radius);
    c.grid_half_width = r.get("grid_half_width", c.grid_half_width);
    c.grid_step = r.get("grid_step", c.grid_step);
    c.fft_half_width = r.get("fft_half_width", c.fft_half_width);
    c.fd_allowance = r.optional<double>("fd_allowance");
    c.seed = r.get("seed", c.seed);
    r.require(c.alpha > 0.0 && c.alpha < 1.0, "'alpha' must lie in (0, 1)");
    r.require(c.c > 0.0 && c.lambda > 0.0 && c.h > 0.0 && c.epsilon > 0.0, "c, lambda, h, epsilon must be positive");
    r.require(c.N >= 40, "'N' must be at least 40 (batch standard errors)");
    r.require(c.bump_radius > 0.0, "'bump_radius' must be positive");
    r.require(c.grid_step > 0.0 && c.grid_half_width >= 2.0 * c.grid_step, "grid too small");
    r.require(c.fft_half_width >= c.grid_half_width, "'fft_half_width' must cover the grid");
    for (double x : c.points)
      r.require(std::abs(x) <= 0.5 * c.grid_half_width, "points must lie in the inner half of the grid");
    r.finish();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"alpha", alpha}, {"c", c}, {"lambda", lambda}, {"points", points}, {"N", N}, {"h", h},
                     {"epsilon", epsilon}, {"bump_radius", bump_radius}, {"grid_half_width", grid_half_width},
                     {"grid_step", grid_step}, {"fft_half_width", fft_half_width}, {"seed", seed}};
    if (fd_allowance) j["fd_allowance"] = *fd_allowance;
    return j;
  }
};

struct FdAllowance {
  double step_change = 0.0;    // max |u(Delta) - u(Delta/2)| at the points
  double domain_change = 0.0;  // max |u(X) - u(2X)| at the points
  double allowance = 0.0;      // 2 step_change + domain_change / (1 - 2^{-alpha})
};

inline GridSolution fd_solution(const ResolventCompareConfig& c, double half_width, double step) {
  const auto m = SpectralMeasure::isotropic(1, c.alpha, c.c);
  const auto f = smooth_bump(c.bump_radius);
  const auto g = make_grid(half_width, step);
  return solve_resolvent(g, m, zero_drift(), c.lambda, sample_on_grid(g, [&](double x) { return f.scalar(x); }));
}

inline std::vector<double> fd_solution_at(const ResolventCompareConfig& c, double half_width, double step) {
  const auto sol = fd_solution(c, half_width, step);
  std::vector<double> out;
  for (double x : c.points) out.push_back(sol.u[sol.grid.index_of(x)]);
  return out;
}

/// Step halving and domain doubling around the configured grid. The zero exterior
/// loses mass at a rate no slower than X^{-alpha}, so the domain change is
/// extrapolated geometrically.
inline FdAllowance calibrate_fd_allowance(const ResolventCompareConfig& c) {
  const auto base = fd_solution_at(c, c.grid_half_width, c.grid_step);
  const auto fine = fd_solution_at(c, c.grid_half_width, 0.5 * c.grid_step);
  const auto wide = fd_solution_at(c, 2.0 * c.grid_half_width, c.grid_step);
  FdAllowance a;
  for (std::size_t i = 0; i < base.size(); ++i) {
    a.step_change = std::max(a.step_change, std::abs(base[i] - fine[i]));
    a.domain_change = std::max(a.domain_change, std::abs(base[i] - wide[i]));
  }
  a.allowance = 2.0 * a.step_change + a.domain_change / (1.0 - std::pow(2.0, -c.alpha));
  return a;
}

inline Outcome run_resolvent_compare(const ResolventCompareConfig& c) {
  Outcome o{"resolvent-compare"};
  const auto m = SpectralMeasure::isotropic(1, c.alpha, c.c);
  const auto f = smooth_bump(c.bump_radius);
  const double fd_allow = c.fd_allowance ? *c.fd_allowance : calibrate_fd_allowance(c).allowance;

  // Monte Carlo: one noise path serves all points.
  const auto trunc = select_truncation(c.epsilon, c.lambda, f.sup(), 0.0, m);
  std::vector<std::vector<double>> xs;
  for (double x : c.points) xs.push_back({x});
  const auto mc = mc_resolvent_points(xs, c.lambda, f, zero_drift(), default_sampler(m, c.seed, 0), trunc, c.h, c.N);
  const double mc_allow = 0.5 * c.h * f.sup();  // leading left-endpoint quadrature error
  auto& est = o.extra_tables["mc_estimates"];
  est.header = {"x", "lambda", "value", "std_error", "tail_bias", "N", "h", "seed"};
  for (const auto& e : mc)
    est.add({join(e.x), num(e.lambda), num(e.value), num(e.std_error), num(e.tail_bias_bound), std::to_string(e.N),
             num(e.h), std::to_string(e.seed)});

  const auto sol = fd_solution(c, c.grid_half_width, c.grid_step);
  std::vector<double> fd;
  for (double x : c.points) fd.push_back(sol.u[sol.grid.index_of(x)]);
  auto& grid_csv = o.extra_tables["grid_solution"];
  grid_csv.header = {"x", "u"};
  for (std::size_t j = 0; j < sol.grid.nodes; ++j) grid_csv.add({num(sol.grid.x(j)), num(sol.u[j])});
  o.extra_json["operator_diagnostics"] = {{"grid", {{"half_width", sol.grid.half_width}, {"step", sol.grid.step},
                                                    {"nodes", sol.grid.nodes}}},
                                          {"lambda", sol.lambda},
                                          {"residual_norm", sol.residual_norm},
                                          {"diagnostics", to_json(sol.matrix_diagnostics)}};

  const auto og = periodic_oracle_grid(c.fft_half_width, c.grid_step);
  const auto fo = fft_oracle(c.lambda, c.alpha, isotropic_symbol_coefficient(m),
                             sample_on_grid(og, [&](double x) { return f.scalar(x); }), og.step);
  double f_integral = 0.0;
  for (std::size_t j = 0; j < og.nodes; ++j) f_integral += f.scalar(og.x(j)) * og.step;
  const double fft_allow =
      periodic_wrap_estimate(c.lambda, c.alpha, c.c, f_integral, 2.0 * og.half_width + og.step);

  o.table.header = {"x",      "mc",        "mc_std_error", "fd",         "fft",       "mc_minus_fd", "mc_minus_fft",
                    "fd_minus_fft", "tol_mc_fd", "tol_mc_fft", "tol_fd_fft"};
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const double u_fft = fo[og.index_of(c.points[i])];
    const double mc_band = 3.0 * mc[i].std_error + mc[i].tail_bias_bound + mc_allow;
    const double t_mf = mc_band + fd_allow, t_mo = mc_band + fft_allow, t_fo = fd_allow + fft_allow;
    const double d_mf = mc[i].value - fd[i], d_mo = mc[i].value - u_fft, d_fo = fd[i] - u_fft;
    o.table.add({num(c.points[i]), num(mc[i].value), num(mc[i].std_error), num(fd[i]), num(u_fft), num(d_mf),
                 num(d_mo), num(d_fo), num(t_mf), num(t_mo), num(t_fo)});
    const std::string at = "x=" + num(c.points[i]);
    o.check(at + " mc-fd", std::abs(d_mf) <= t_mf, num(d_mf) + " vs " + num(t_mf));
    o.check(at + " mc-fft", std::abs(d_mo) <= t_mo, num(d_mo) + " vs " + num(t_mo));
    o.check(at + " fd-fft", std::abs(d_fo) <= t_fo, num(d_fo) + " vs " + num(t_fo));
    worst_ratio = std::max({worst_ratio, std::abs(d_mf) / t_mf, std::abs(d_mo) / t_mo, std::abs(d_fo) / t_fo});
  }
  o.result = {{"command", o.command},
              {"truncation", to_json(trunc)},
              {"fd_allowance", fd_allow},
              {"fft_allowance", fft_allow},
              {"mc_allowance", mc_allow},
              {"tail_bias_bound", mc.front().tail_bias_bound},
              {"worst_ratio", worst_ratio},
              {"fft_nodes", og.nodes}};
  return o;
}

// ---------------------------------------------------------------------------
// decay-check

struct DecayCheckConfig {
  nlohmann::json measure = {{"kind", "two_point"}, {"alpha", 0.5}};
  nlohmann::json drift = {{"drift", "example1"}, {"alpha", 0.5}, {"scale", 1.0}};
  double epsilon = 0.01;
  double lambda = 1.0;
  double bump_radius = 1.0;
  std::size_t exit_N = 100000;
  double exit_h = 1e-2;
  std::size_t far_N = 10000;
  double far_h = 1e-2;
  std::uint64_t seed = 6;

  static DecayCheckConfig parse(const nlohmann::json& j) {
    ConfigReader r(j);
    DecayCheckConfig c;
    c.measure = r.raw("measure", c.measure);
    const auto m = read_measure(r, c.measure, "measure");
    c.drift = r.raw("drift", c.drift);
    const auto b = read_drift(r, c.drift, "drift", m.dimension());
    c.epsilon = r.get("epsilon", c.epsilon);
    c.lambda = r.get("lambda", c.lambda);
    c.bump_radius = r.get("bump_radius", c.bump_radius);
    c.exit_N = r.get("exit_N", c.exit_N);
    c.exit_h = r.get("exit_h", c.exit_h);
    c.far_N = r.get("far_N", c.far_N);
    c.far_h = r.get("far_h", c.far_h);
    c.seed = r.get("seed", c.seed);
    r.require(m.dimension() == 1, "decay-check runs in d = 1");
    r.require(c.epsilon > 0.0 && c.lambda > 0.0 && c.bump_radius > 0.0, "epsilon, lambda, bump_radius must be positive");
    r.require(c.exit_N >= 1 && c.far_N >= 40, "need exit_N >= 1 and far_N >= 40");
    r.require(c.exit_h > 0.0 && c.far_h > 0.0, "step sizes must be positive");
    r.finish();
    return c;
  }

  nlohmann::json to_json() const {
    return {{"measure", measure}, {"drift", drift},   {"epsilon", epsilon}, {"lambda", lambda},
            {"bump_radius", bump_radius}, {"exit_N", exit_N}, {"exit_h", exit_h}, {"far_N", far_N},
            {"far_h", far_h}, {"seed", seed}};
  }
};

inline Outcome run_decay_check(const DecayCheckConfig& c) {
  Outcome o{"decay-check"};
  const auto m = measure_from_json(c.measure);
  const auto b = drift_from_json(c.drift, 1);
  const auto f = smooth_bump(c.bump_radius);
  const auto trunc = select_truncation(c.epsilon, c.lambda, f.sup(), b.sup_bound, m);
  const double bound = exit_probability_bound(trunc, f.sup());
  const auto exit = simulate_exit_probability({0.0}, b, default_sampler(m, c.seed, 0), trunc.R, trunc.T, c.exit_h, c.exit_N);
  o.table.header = {"check", "x", "value", "std_error", "bound"};
  o.table.add({"exit_probability", "0", num(exit.probability), num(exit.std_error), num(bound)});
  o.check("exit probability", exit.probability < bound + 3.0 * exit.std_error,
          num(exit.probability) + " vs " + num(bound) + " + 3 * " + num(exit.std_error));
  nlohmann::json far = nlohmann::json::array();
  std::uint64_t stream = 1;
  for (double sign : {-1.0, 1.0}) {
    const double x = sign * (f.support_radius() + trunc.R);
    const auto r = mc_resolvent({x}, c.lambda, f, b, default_sampler(m, c.seed, stream++), trunc, c.far_h, c.far_N);
    o.table.add({"far_field_resolvent", num(x), num(r.value), num(r.std_error), num(c.epsilon)});
    o.check("far field x=" + num(x), std::abs(r.value) < c.epsilon + 3.0 * r.std_error,
            num(r.value) + " vs " + num(c.epsilon) + " + 3 * " + num(r.std_error));
    far.push_back({{"x", x}, {"value", r.value}, {"std_error", r.std_error}});
  }
  o.result = {{"command", o.command}, {"truncation", to_json(trunc)}, {"exit_bound", bound},
              {"exit_probability", exit.probability}, {"exit_std_error", exit.std_error}, {"far_field", far}};
  return o;
}

// ---------------------------------------------------------------------------
// bifurcation

struct BifurcationConfig {
  double alpha = 0.5;
  std::vector<double> betas{0.25, 0.75};
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3, 1e-4};
  double T = 1.0;
  double h = 1e-4;
  std::size_t N = 100000;
  double threshold = 0.5;
  double noise_weight = 0.01;
  std::optional<double> floor;  // lower bound for beta < 1 - alpha
  double final_gap = 0.05;      // upper bound at the last epsilon for beta > 1 - alpha
  std::uint64_t seed = 8;

  static BifurcationConfig parse(const nlohmann::json& j) {
    ConfigReader r(j);
    BifurcationConfig c;
    c.alpha = r.get("alpha", c.alpha);
    c.betas = r.get("betas", c.betas);
    c.epsilons = r.get("epsilons", c.epsilons);
    c.T = r.get("T", c.T);
    c.h = r.get("h", c.h);
    c.N = r.get("N", c.N);
    c.threshold = r.get("threshold", c.threshold);
    c.noise_weight = r.get("noise_weight", c.noise_weight);
    c.floor = r.optional<double>("floor");
    c.final_gap = r.get("final_gap", c.final_gap);
    c.seed = r.get("seed", c.seed);
    r.require(c.alpha > 0.0 && c.alpha < 1.0, "'alpha' must lie in (0, 1)");
    for (double b : c.betas) r.require(b > 0.0 && b <= 1.0, "every beta must lie in (0, 1]");
    r.require(!c.epsilons.empty(), "'epsilons' must not be empty");
    for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
      r.require(c.epsilons[i] > 0.0, "epsilons must be positive");
      if (i) r.require(c.epsilons[i] < c.epsilons[i - 1], "epsilons must decrease");
    }
    r.require(c.h > 0.0 && c.T >= c.h, "need 0 < h <= T");
    r.require(c.N >= 1, "'N' must be positive");
    r.require(c.threshold > 0.0 && c.threshold < 1.0, "'threshold' must lie in (0, 1)");
    r.require(c.noise_weight > 0.0, "'noise_weight' must be positive");
    r.finish();
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"alpha", alpha}, {"betas", betas}, {"epsilons", epsilons}, {"T", T}, {"h", h}, {"N", N},
                     {"threshold", threshold}, {"noise_weight", noise_weight}, {"final_gap", final_gap},
                     {"seed", seed}};
    if (floor) j["floor"] = *floor;
    return j;
  }
};

/// Successive gaps may rise by at most 3 combined standard errors.
inline bool statistically_nonincreasing(const std::vector<BifurcationRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].gap > rows[i - 1].gap + 3.0 * std::hypot(rows[i].std_error, rows[i - 1].std_error)) return false;
  return true;
}

inline Outcome run_bifurcation(const BifurcationConfig& c) {
  Outcome o{"bifurcation"};
  o.table.header = {"beta", "epsilon", "p_plus", "p_minus", "gap", "std_error"};
  o.result = {{"command", o.command}, {"tables", nlohmann::json::array()}};
  for (std::size_t bi = 0; bi < c.betas.size(); ++bi) {
    const double beta = c.betas[bi];
    const auto rows = bifurcation_gap(beta, c.alpha, c.epsilons, c.T, c.h, c.N, c.threshold,
                                      {c.noise_weight, c.seed + 1000 * bi});
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& r : rows) {
      o.table.add({num(beta), num(r.epsilon), num(r.p_plus), num(r.p_minus), num(r.gap), num(r.std_error)});
      jt.push_back({{"epsilon", r.epsilon}, {"p_plus", r.p_plus}, {"p_minus", r.p_minus}, {"gap", r.gap},
                    {"std_error", r.std_error}});
    }
    const bool regular = beta > 1.0 - c.alpha;
    o.result["tables"].push_back({{"beta", beta}, {"regime", regular ? "unique" : "non-unique"}, {"rows", jt}});
    const std::string tag = "beta=" + num(beta);
    if (regular) {
      o.check(tag + " gap decreases", statistically_nonincreasing(rows));
      o.check(tag + " final gap", rows.back().gap < c.final_gap, num(rows.back().gap) + " vs " + num(c.final_gap));
    } else if (c.floor) {
      for (const auto& r : rows)
        o.check(tag + " eps=" + num(r.epsilon) + " above floor", r.gap > *c.floor, num(r.gap) + " vs " + num(*c.floor));
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// comparison-check

struct ComparisonCheckConfig {
  int trials = 100;
  double grid_half_width = 8.0;
  double grid_step = 1.0 / 16.0;
  std::uint64_t seed = 7;

  static ComparisonCheckConfig parse(const nlohmann::json& j) {
    ConfigReader r(j);
    ComparisonCheckConfig c;
    c.trials = r.get("trials", c.trials);
    c.grid_half_width = r.get("grid_half_width", c.grid_half_width);
    c.grid_step = r.get("grid_step", c.grid_step);
    c.seed = r.get("seed", c.seed);
    r.require(c.trials >= 1, "'trials' must be positive");
    r.require(c.grid_step > 0.0 && c.grid_half_width >= 2.0 * c.grid_step, "grid too small");
    r.finish();
    return c;
  }

  nlohmann::json to_json() const {
    return {{"trials", trials}, {"grid_half_width", grid_half_width}, {"grid_step", grid_step}, {"seed", seed}};
  }
};

/// Random ordered right-hand sides f1 <= f2 built from bumps and nodewise noise;
/// even trials use example1 drifts, odd trials Tanaka drifts.
inline Outcome run_comparison_check(const ComparisonCheckConfig& c) {
  Outcome o{"comparison-check"};
  const auto g = make_grid(c.grid_half_width, c.grid_step);
  PhiloxStream rng(c.seed, 0);
  o.table.header = {"trial", "drift", "alpha", "lambda", "holds", "max_violation", "m_matrix"};
  int held = 0, certified = 0;
  for (int t = 0; t < c.trials; ++t) {
    const double alpha = 0.3 + 0.4 * rng.uniform();
    const double lambda = 0.2 + 4.8 * rng.uniform();
    const auto b = t % 2 == 0 ? example1_drift(alpha, 2.0 * rng.uniform()) : tanaka_drift(0.05 + 0.9 * rng.uniform());
    const auto mu = two_point_measure(alpha, 0.2 + 2.0 * rng.uniform());
    std::vector<double> f1(g.nodes, 0.0), f2;
    for (int k = 0; k < 3; ++k) {
      const TestFunction bump{{(2.0 * rng.uniform() - 1.0) * 0.5 * g.half_width}, 0.2 + 2.0 * rng.uniform(),
                              2.0 * rng.uniform() - 1.0};
      for (std::size_t j = 0; j < g.nodes; ++j) f1[j] += bump.scalar(g.x(j));
    }
    f2 = f1;
    const TestFunction extra{{(2.0 * rng.uniform() - 1.0) * 0.5 * g.half_width}, 0.2 + 2.0 * rng.uniform(), rng.uniform()};
    for (std::size_t j = 0; j < g.nodes; ++j) f2[j] += extra.scalar(g.x(j)) + (rng.uniform() < 0.1 ? rng.uniform() : 0.0);
    const auto s1 = solve_resolvent(g, mu, b, lambda, f1);
    const auto s2 = solve_resolvent(g, mu, b, lambda, f2);
    const auto cmp = comparison_check(s1, s2);
    const bool cert = s1.matrix_diagnostics.m_matrix && s2.matrix_diagnostics.m_matrix;
    held += cmp.holds;
    certified += cert;
    o.table.add({std::to_string(t), b.name, num(alpha), num(lambda), cmp.holds ? "true" : "false",
                 num(cmp.max_violation), cert ? "true" : "false"});
    if (!cmp.holds) o.check("trial " + std::to_string(t) + " comparison", false, "violation " + num(cmp.max_violation));
  }
  o.check("all comparisons hold", held == c.trials, std::to_string(held) + "/" + std::to_string(c.trials));
  o.check("all operators are M-matrices", certified == c.trials, std::to_string(certified) + "/" + std::to_string(c.trials));
  o.result = {{"command", o.command}, {"trials", c.trials}, {"held", held}, {"m_matrix", certified},
              {"grid", {{"half_width", g.half_width}, {"step", g.step}, {"nodes", g.nodes}}}};
  return o;
}

// ---------------------------------------------------------------------------
// Dispatch

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"hk-check",    "epsilon0",    "sampler-validate", "resolvent-compare",
                                              "decay-check", "bifurcation", "comparison-check"};
  return names;
}

/// Parses the config for `command` and returns its canonical (fully defaulted) form.
inline nlohmann::json canonical_config(const std::string& command, const nlohmann::json& j) {
  if (command == "hk-check") return HkCheckConfig::parse(j).to_json();
  if (command == "epsilon0") return Epsilon0Config::parse(j).to_json();
  if (command == "sampler-validate") return SamplerValidateConfig::parse(j).to_json();
  if (command == "resolvent-compare") return ResolventCompareConfig::parse(j).to_json();
  if (command == "decay-check") return DecayCheckConfig::parse(j).to_json();
  if (command == "bifurcation") return BifurcationConfig::parse(j).to_json();
  if (command == "comparison-check") return ComparisonCheckConfig::parse(j).to_json();
  throw ConfigErrors({"unknown command '" + command + "'"});
}

inline Outcome run_command(const std::string& command, const nlohmann::json& j) {
  if (command == "hk-check") return run_hk_check(HkCheckConfig::parse(j));
  if (command == "epsilon0") return run_epsilon0(Epsilon0Config::parse(j));
  if (command == "sampler-validate") return run_sampler_validate(SamplerValidateConfig::parse(j));
  if (command == "resolvent-compare") return run_resolvent_compare(ResolventCompareConfig::parse(j));
  if (command == "decay-check") return run_decay_check(DecayCheckConfig::parse(j));
  if (command == "bifurcation") return run_bifurcation(BifurcationConfig::parse(j));
  if (command == "comparison-check") return run_comparison_check(ComparisonCheckConfig::parse(j));
  throw ConfigErrors({"unknown command '" + command + "'"});
}

// ---------------------------------------------------------------------------
// Acceptance suite

struct CriterionResult {
  int id = 0;
  std::string title;
  bool checks_pass = false;
  double seconds = 0.0;
  double limit_seconds = 0.0;
  std::string detail;
  nlohmann::json data = nlohmann::json::object();

  bool pass() const { return checks_pass && seconds < limit_seconds; }
  std::string line() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1fs/%.0fs", seconds, limit_seconds);
    return "CRITERION " + std::to_string(id) + " " + (pass() ? "PASS" : "FAIL") + " [" + title + "] (" + buf + ") " +
           detail;
  }
};

namespace detail {

template <class Fn>
CriterionResult timed(int id, std::string title, double limit, Fn&& body) {
  CriterionResult r;
  r.id = id;
  r.title = std::move(title);
  r.limit_seconds = limit;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.checks_pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline double angle_to_diagonal(std::span<const double> v) {
  double best = std::numbers::pi;
  for (int k = 0; k < 4; ++k) {
    const double diag = std::numbers::pi / 4 + k * std::numbers::pi / 2;
    double d = std::abs(std::remainder(std::atan2(v[1], v[0]) - diag, 2.0 * std::numbers::pi));
    best = std::min(best, d);
  }
  return best;
}

}  // namespace detail

inline constexpr double kDeg = std::numbers::pi / 180.0;

/// 1: isotropic measures are certified and kappa_hat * delta^{alpha-2} is scale free.
inline CriterionResult criterion1() {
  return detail::timed(1, "hypothesis certification, isotropic", 10.0, [](CriterionResult& r) {
    constexpr double kScaleTolerance = 1e-10;
    constexpr double kTheta = 0.4;
    const auto grid = default_delta_grid();
    bool ok = true;
    double worst_spread = 0.0, min_kappa = 1e300;
    for (int d : {1, 2})
      for (double a : {0.3, 0.5, 0.7}) {
        const auto m = SpectralMeasure::isotropic(d, a, 1.0);
        const auto rep = check_cone_condition(m, kTheta, 720, grid);
        const auto& axis = rep.per_direction_table.front().best_axis;
        const Cone cone(axis, kTheta);
        double lo = 1e300, hi = 0.0;
        for (double delta : grid) {
          const double v = cone_second_moment(m, cone, delta) * std::pow(delta, a - 2.0);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        const double spread = (hi - lo) / hi;
        worst_spread = std::max(worst_spread, spread);
        min_kappa = std::min(min_kappa, rep.kappa_hat);
        ok = ok && rep.satisfied && rep.kappa_hat > 0.0 && spread <= kScaleTolerance;
        r.data["cases"].push_back({{"d", d}, {"alpha", a}, {"satisfied", rep.satisfied}, {"kappa_hat", rep.kappa_hat},
                                   {"scale_spread", spread}});
      }
    r.checks_pass = ok;
    r.detail = "6 cases; min kappa_hat " + num(min_kappa) + ", max relative spread " + num(worst_spread) +
               " (tol " + num(kScaleTolerance) + ")";
  });
}

/// 2: the independent-coordinates measure fails with a diagonal worst direction;
/// lattice-of-rays measures pass.
inline CriterionResult criterion2() {
  return detail::timed(2, "hypothesis refutation and lattice", 30.0, [](CriterionResult& r) {
    constexpr double kDiagonalTolerance = 2.0 * kDeg;
    const auto grid = default_delta_grid();
    bool ok = true;
    double worst_angle = 0.0;
    // Cones wider than pi/4 contain a coordinate axis from every direction; those are reported, not asserted.
    const std::vector<double> thetas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, std::numbers::pi / 4};
    for (double a : {0.3, 0.5, 0.7}) {
      const auto m = independent_coordinates_measure(2, a);
      for (double theta : thetas) {
        const auto rep = check_cone_condition(m, theta, 720, grid);
        const double ang = detail::angle_to_diagonal(rep.worst_direction);
        worst_angle = std::max(worst_angle, ang);
        ok = ok && !rep.satisfied && ang <= kDiagonalTolerance;
        r.data["independent"].push_back({{"alpha", a}, {"theta", theta}, {"satisfied", rep.satisfied},
                                         {"worst_direction_to_diagonal_deg", ang / kDeg}});
      }
      const auto wide = check_cone_condition(m, 1.0, 720, grid);
      r.data["independent_wide_cone"].push_back({{"alpha", a}, {"theta", 1.0}, {"satisfied", wide.satisfied}});
    }
    bool lattice_ok = true;
    constexpr double kSpacing = 0.3;
    for (double a : {0.3, 0.5, 0.7}) {
      const double edge = admissible_theta_interval(a).feasible_upper;
      const double theta = 0.5 * (0.5 * kSpacing + edge);
      const auto rep = check_cone_condition(lattice_of_rays_measure(a, kSpacing), theta, 720, grid);
      lattice_ok = lattice_ok && kSpacing < 2.0 * edge && rep.satisfied && rep.kappa_hat > 0.0;
      r.data["lattice"].push_back({{"alpha", a}, {"spacing", kSpacing}, {"theta", theta}, {"satisfied", rep.satisfied},
                                   {"kappa_hat", rep.kappa_hat}});
    }
    r.checks_pass = ok && lattice_ok;
    r.detail = "independent: unsatisfied for theta in [0.1, pi/4] x 3 alphas, worst direction within " +
               num(worst_angle / kDeg) + " deg of a diagonal; lattice spacing 0.3: " +
               (lattice_ok ? "satisfied" : "NOT satisfied") + "; theta = 1.0 > pi/4 is covered (see data)";
  });
}

/// 3: epsilon0 at (2/3, 0.5, 0.2).
inline CriterionResult criterion3() {
  return detail::timed(3, "epsilon0", 60.0, [](CriterionResult& r) {
    constexpr double kRefinement = 1e-6, kLinearity = 1e-12;
    const auto base = compute_epsilon0(2.0 / 3.0, 0.5, 0.2);
    double spread = 0.0;
    for (Epsilon0Grid g : {Epsilon0Grid{50, 50}, Epsilon0Grid{100, 100}, Epsilon0Grid{400, 400}, Epsilon0Grid{800, 800}})
      spread = std::max(spread, std::abs(compute_epsilon0(2.0 / 3.0, 0.5, 0.2, g).epsilon0 - base.epsilon0) / base.epsilon0);
    bool infeasible = true;
    int cases = 0;
    for (double a : {0.3, 0.5, 0.7}) {
      const double edge = admissible_theta_interval(a).feasible_upper;
      for (double theta : {edge, std::nextafter(edge, 2.0), edge + 1e-6, 0.5 * (edge + std::numbers::pi / 2), 1.5}) {
        const double c2 = std::cos(theta) * std::cos(theta);
        if (!(c2 <= 1.0 / (2.0 - a))) continue;
        ++cases;
        infeasible = infeasible && !compute_epsilon0(2.0 / 3.0, a, theta).feasible;
      }
    }
    double lin = 0.0;
    for (double k : {0.01, 0.5, 1.0, 3.0, 100.0})
      lin = std::max(lin, std::abs(compute_epsilon0(k, 0.5, 0.2).epsilon0 / k - base.epsilon0 / (2.0 / 3.0)) /
                              (base.epsilon0 / (2.0 / 3.0)));
    r.checks_pass = base.feasible && base.epsilon0 > 0.0 && spread <= kRefinement && infeasible && lin <= kLinearity;
    r.data = {{"epsilon0", base.epsilon0}, {"gamma_star", base.gamma_star}, {"eta_star", base.eta_star},
              {"refinement_spread", spread}, {"infeasible_cases", cases}, {"linearity_defect", lin}};
    r.detail = "epsilon0 " + num(base.epsilon0) + ", refinement spread " + num(spread) + ", " + std::to_string(cases) +
               " edge cases infeasible: " + (infeasible ? "yes" : "NO") + ", linearity defect " + num(lin);
  });
}

/// 4: every sampler method on its measures for three alphas.
inline CriterionResult criterion4() {
  return detail::timed(4, "sampler correctness", 120.0, [](CriterionResult& r) {
    bool ok = true;
    double worst_ratio = 0.0, min_p = 1.0;
    int runs = 0;
    for (double a : {0.3, 0.5, 0.7}) {
      struct Case {
        nlohmann::json measure;
        std::string method;
        bool ks;
      };
      const std::vector<Case> cases{
          {{{"kind", "two_point"}, {"alpha", a}}, "ray_sum", true},
          {{{"kind", "independent"}, {"alpha", a}, {"d", 2}}, "ray_sum", false},
          {{{"kind", "lattice"}, {"alpha", a}, {"spacing", 0.3}}, "ray_sum", false},
          {{{"kind", "isotropic"}, {"alpha", a}, {"d", 1}, {"c", 1.0}}, "subordination", true},
          {{{"kind", "isotropic"}, {"alpha", a}, {"d", 2}, {"c", 1.0}}, "subordination", false},
          {{{"kind", "two_point"}, {"alpha", a}}, "compound_poisson", true},
          {{{"kind", "isotropic"}, {"alpha", a}, {"d", 2}, {"c", 1.0}}, "compound_poisson", false},
      };
      for (const auto& cs : cases) {
        SamplerValidateConfig c;
        c.measure = cs.measure;
        c.method = cs.method;
        c.seed = 4000 + static_cast<std::uint64_t>(runs);
        c.ks_samples = cs.ks ? 100000 : 10;
        const auto o = run_sampler_validate(c);
        ++runs;
        const double ratio = o.result.at("max_deviation").get<double>() / o.result.at("tolerance").get<double>();
        worst_ratio = std::max(worst_ratio, ratio);
        bool case_ok = o.assertions[0].pass;
        if (cs.ks) {
          min_p = std::min(min_p, o.result.at("ks_p_value").get<double>());
          case_ok = case_ok && o.assertions[1].pass;
        }
        ok = ok && case_ok;
        r.data["cases"].push_back({{"measure", cs.measure}, {"method", cs.method}, {"max_deviation", o.result["max_deviation"]},
                                   {"bias_bound", o.result["bias_bound"]},
                                   {"ks_p_value", cs.ks ? o.result["ks_p_value"] : nlohmann::json(nullptr)}});
      }
    }
    r.checks_pass = ok;
    r.detail = std::to_string(runs) + " method/measure cases at N=1e6: worst deviation " + num(worst_ratio) +
               " x 4/sqrt(N); 9 KS self-similarity tests, min p " + num(min_p);
  });
}

/// 5: Monte Carlo, finite differences and the spectral oracle agree at nine points.
inline CriterionResult criterion5(const RegressionManifest& manifest) {
  return detail::timed(5, "MC / FD / FFT triangle", 300.0, [&](CriterionResult& r) {
    ResolventCompareConfig c;
    if (!manifest.fd_allowance) throw ConfigError("regression manifest lacks the calibrated fd_allowance");
    c.fd_allowance = manifest.fd_allowance;
    const auto o = run_resolvent_compare(c);
    r.checks_pass = o.pass();
    r.data = o.result;
    int failed = 0;
    for (const auto& a : o.assertions) failed += !a.pass;
    r.detail = "9 points x 3 pairs, " + std::to_string(failed) + " outside tolerance; worst |diff|/tol " +
               num(o.result.at("worst_ratio").get<double>()) + "; fd allowance " + num(*c.fd_allowance) +
               " (calibrated), tail bias " + num(o.result.at("tail_bias_bound").get<double>());
  });
}

/// 6: exit probability and far-field values under the truncation constants.
inline CriterionResult criterion6() {
  return detail::timed(6, "decay and exit bound", 300.0, [](CriterionResult& r) {
    const auto o = run_decay_check(DecayCheckConfig{});
    r.checks_pass = o.pass();
    r.data = o.result;
    const auto& t = o.result.at("truncation");
    r.detail = "T=" + num(t.at("T").get<double>()) + " m=" + num(t.at("m").get<double>()) + " R=" +
               num(t.at("R").get<double>()) + "; exit " + num(o.result.at("exit_probability").get<double>()) +
               " (se " + num(o.result.at("exit_std_error").get<double>()) + ") vs bound " +
               num(o.result.at("exit_bound").get<double>()) + "; far field |u| " +
               num(std::max(std::abs(o.result["far_field"][0]["value"].get<double>()),
                            std::abs(o.result["far_field"][1]["value"].get<double>()))) +
               " vs 0.01";
  });
}

/// 7: discrete comparison principle on random ordered pairs.
inline CriterionResult criterion7() {
  return detail::timed(7, "discrete comparison principle", 60.0, [](CriterionResult& r) {
    const auto o = run_comparison_check(ComparisonCheckConfig{});
    r.checks_pass = o.pass();
    r.data = o.result;
    r.detail = std::to_string(o.result.at("held").get<int>()) + "/100 comparisons hold, " +
               std::to_string(o.result.at("m_matrix").get<int>()) + "/100 M-matrix certificates";
  });
}

/// 8: the gap closes above the threshold and persists below it.
inline CriterionResult criterion8(const RegressionManifest& manifest) {
  return detail::timed(8, "uniqueness threshold", 900.0, [&](CriterionResult& r) {
    if (!manifest.bifurcation_floor) throw ConfigError("regression manifest lacks the calibrated bifurcation floor");
    BifurcationConfig c;
    c.floor = manifest.bifurcation_floor;
    const auto o = run_bifurcation(c);
    r.checks_pass = o.pass();
    r.data = o.result;
    std::string s;
    for (const auto& t : o.result.at("tables")) {
      s += "beta=" + num(t.at("beta").get<double>()) + " gaps";
      for (const auto& row : t.at("rows")) s += " " + num(std::round(row.at("gap").get<double>() * 1e4) / 1e4);
      s += "; ";
    }
    r.detail = s + "floor " + num(*c.floor);
  });
}

inline std::vector<CriterionResult> run_acceptance(const RegressionManifest& manifest,
                                                   const std::function<void(const CriterionResult&)>& report = {}) {
  std::vector<CriterionResult> out;
  auto add = [&](CriterionResult r) {
    if (report) report(r);
    out.push_back(std::move(r));
  };
  add(criterion1());
  add(criterion2());
  add(criterion3());
  add(criterion4());
  add(criterion5(manifest));
  add(criterion6());
  add(criterion7());
  add(criterion8(manifest));
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationOptions {
  std::size_t oracle_N = 10000;
  double oracle_h = 1e-5;
  double floor_fraction = 0.5;
};

/// Regression manifest: the finite-difference allowance from refinement and the
/// non-uniqueness floor from a fine-step run.
inline nlohmann::json calibrate(const CalibrationOptions& opts = {}) {
  nlohmann::json doc;
  doc["format"] = "stablesde-regression-1";
  const ResolventCompareConfig rc;
  const auto fa = calibrate_fd_allowance(rc);
  doc["resolvent_compare"] = {{"fd_allowance", fa.allowance},
                              {"step_change", fa.step_change},
                              {"domain_change", fa.domain_change},
                              {"grid_half_width", rc.grid_half_width},
                              {"grid_step", rc.grid_step},
                              {"points", rc.points},
                              {"rule", "2 * step_change + domain_change / (1 - 2^-alpha)"}};
  BifurcationConfig bc;
  bc.betas = {0.25};
  bc.h = opts.oracle_h;
  bc.N = opts.oracle_N;
  bc.seed = 9001;
  const auto rows = bifurcation_gap(0.25, bc.alpha, bc.epsilons, bc.T, bc.h, bc.N, bc.threshold, {bc.noise_weight, bc.seed});
  double lowest = 1e300;
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : rows) {
    lowest = std::min(lowest, r.gap - 3.0 * r.std_error);
    jr.push_back({{"epsilon", r.epsilon}, {"gap", r.gap}, {"std_error", r.std_error}});
  }
  doc["bifurcation"] = {{"floor", opts.floor_fraction * lowest},
                        {"rule", "floor_fraction * min over epsilon of (gap - 3 std_error)"},
                        {"floor_fraction", opts.floor_fraction},
                        {"alpha", bc.alpha},
                        {"beta", 0.25},
                        {"oracle_h", bc.h},
                        {"oracle_N", bc.N},
                        {"noise_weight", bc.noise_weight},
                        {"seed", bc.seed},
                        {"rows", jr}};
  return doc;
}

}  // namespace stablesde::experiments
