#pragma once

// Bounded drift fields b : R^d -> R^d and sampled Hoelder seminorm diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "stablesde/errors.hpp"
#include "stablesde/rng.hpp"

namespace stablesde {

namespace drifts {

struct Zero {
  double operator()(double) const { return 0.0; }
};

struct Constant {
  std::vector<double> value;
  double operator()(double) const { return value[0]; }
};

/// scale * (1 ^ r^{1-alpha} / |log r|), r = |x|; 0 at r = 0 and `scale` at r = 1.
struct Example1 {
  double alpha;
  double scale;
  double magnitude(double r) const {
    if (r == 0.0) return 0.0;
    if (r == 1.0) return scale;
    return scale * std::min(1.0, std::pow(r, 1.0 - alpha) / std::abs(std::log(r)));
  }
  double operator()(double x) const { return magnitude(std::abs(x)); }
};

/// sign(x) (1 ^ |x|^beta), with sqrt-based powers for beta in {1/4, 1/2, 3/4}.
struct Tanaka {
  double beta;
  double operator()(double x) const {
    const double r = std::abs(x);
    double m;
    if (r >= 1.0) {
      m = 1.0;
    } else if (beta == 0.5) {
      m = std::sqrt(r);
    } else if (beta == 0.25) {
      m = std::sqrt(std::sqrt(r));
    } else if (beta == 0.75) {
      const double s = std::sqrt(r);
      m = s * std::sqrt(s);
    } else {
      m = std::pow(r, beta);
    }
    return x >= 0.0 ? m : -m;
  }
};

/// 1 ^ |x|^p (even).
struct Power {
  double p;
  double operator()(double x) const { return std::min(1.0, std::pow(std::abs(x), p)); }
};

using Kernel = std::variant<Zero, Constant, Example1, Tanaka, Power>;

}  // namespace drifts

/// A named bounded drift. Evaluation is pure and safe to call concurrently.
struct Drift {
  std::string name;
  int dimension = 1;
  drifts::Kernel kernel;
  double sup_bound = 0.0;
  std::optional<double> declared_seminorm;
  std::map<std::string, double> params;

  bool is_zero() const { return std::holds_alternative<drifts::Zero>(kernel); }

  /// First component for d = 1 (the only component).
  double scalar(double x) const {
    return std::visit([x](const auto& k) { return k(x); }, kernel);
  }

  void evaluate(std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, drifts::Zero>) {
          } else if constexpr (std::is_same_v<K, drifts::Constant>) {
            std::copy(k.value.begin(), k.value.end(), out.begin());
          } else if constexpr (std::is_same_v<K, drifts::Example1>) {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            out[0] = k.magnitude(std::sqrt(r2));
          } else {
            out[0] = k(x[0]);
          }
        },
        kernel);
  }

  std::vector<double> operator()(std::span<const double> x) const {
    std::vector<double> out(x.size());
    evaluate(x, out);
    return out;
  }
};

inline Drift zero_drift(int dimension = 1) {
  Drift b{"zero", dimension, drifts::Zero{}, 0.0, 0.0, {}};
  return b;
}

inline Drift constant_drift(std::vector<double> value) {
  double n = 0.0;
  for (double v : value) n += v * v;
  const int d = static_cast<int>(value.size());
  if (d < 1) throw DomainError("constant drift needs a value");
  Drift b{"constant", d, drifts::Constant{std::move(value)}, std::sqrt(n), 0.0, {}};
  return b;
}

/// Scalar radial profile 1 ^ |x|^{1-alpha} |log|x||^{-1}, applied along e_1.
inline Drift example1_drift(double alpha, double scale, int dimension = 1) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (!(scale > 0.0)) throw DomainError("scale must be positive");
  if (dimension < 1) throw DomainError("dimension must be positive");
  Drift b{"example1", dimension, drifts::Example1{alpha, scale}, scale, std::nullopt, {}};
  b.params = {{"alpha", alpha}, {"scale", scale}, {"value_at_unit_radius", scale}, {"value_at_origin", 0.0}};
  return b;
}

inline Drift tanaka_drift(double beta, int dimension = 1) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0,1)");
  if (dimension != 1) throw UnsupportedDimension("tanaka drift is defined for d = 1 only");
  Drift b{"tanaka", 1, drifts::Tanaka{beta}, 1.0, std::nullopt, {{"beta", beta}}};
  return b;
}

/// 1 ^ |x|^p on the line; its p-Hoelder seminorm is exactly 1.
inline Drift power_drift(double p, int dimension = 1) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("power must lie in (0,1]");
  if (dimension != 1) throw UnsupportedDimension("power drift is defined for d = 1 only");
  Drift b{"power", 1, drifts::Power{p}, 1.0, 1.0, {{"p", p}}};
  return b;
}

/// {"drift":"tanaka","beta":0.25}, {"drift":"example1","alpha":0.5,"scale":1}, ...
inline Drift drift_from_json(const nlohmann::json& j, int dimension = 1) {
  try {
    const std::string name = j.at("drift").get<std::string>();
    if (name == "zero") return zero_drift(dimension);
    if (name == "constant") return constant_drift(j.at("value").get<std::vector<double>>());
    if (name == "example1") return example1_drift(j.at("alpha").get<double>(), j.value("scale", 1.0), dimension);
    if (name == "tanaka") return tanaka_drift(j.at("beta").get<double>(), dimension);
    if (name == "power") return power_drift(j.at("p").get<double>(), dimension);
    throw ConfigError("unknown drift '" + name + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed drift document: ") + e.what());
  }
}

inline nlohmann::json to_json(const Drift& b) {
  nlohmann::json j{{"drift", b.name}, {"dimension", b.dimension}, {"sup_bound", b.sup_bound}};
  for (const auto& [k, v] : b.params) j[k] = v;
  if (const auto* c = std::get_if<drifts::Constant>(&b.kernel)) j["value"] = c->value;
  if (b.declared_seminorm) j["declared_seminorm"] = *b.declared_seminorm;
  return j;
}

// ---------------------------------------------------------------------------
// Hoelder seminorm estimate

struct HolderEstimate {
  double global_estimate = 0.0;
  /// (delta, sup of the ratio over sampled pairs with 0 < |x - y| < delta), delta = 10^{-k}.
  std::vector<std::pair<double, double>> local_profile;
  /// (delta, sup of the ratio over sampled pairs with delta/10 <= |x - y| < delta): the
  /// per-scale growth that the windowed sup hides once it is unbounded.
  std::vector<std::pair<double, double>> scale_profile;
};

/// Sampled lower bound of sup |b(x) - b(y)| / |x - y|^exponent.
/// Structured pairs come first: pairs (c, c + s u) and (c - s u/2, c + s u/2)
/// around c in {0, e_1, -e_1} with s on a log grid. Random pairs (uniform centre in
/// the window, log-uniform separation) fill the remaining budget from a fixed
/// stream, so a larger budget evaluates a superset of pairs.
inline HolderEstimate holder_seminorm_estimate(const Drift& b, double exponent, double window, long pair_budget,
                                               std::uint64_t seed = 0x401de5) {
  if (!(exponent > 0.0 && exponent <= 1.0)) throw DomainError("exponent must lie in (0,1]");
  if (!(window > 0.0)) throw DomainError("window must be positive");
  const int d = b.dimension;
  constexpr int kDecades = 12;
  std::vector<double> best_in_decade(kDecades + 3, 0.0);  // index j: separation in [10^{-j}, 10^{1-j})
  double global = 0.0;
  std::vector<double> x(d), y(d), bx(d), by(d);
  long used = 0;

  auto record = [&] {
    double sep2 = 0.0;
    for (int i = 0; i < d; ++i) sep2 += (x[i] - y[i]) * (x[i] - y[i]);
    const double sep = std::sqrt(sep2);
    if (!(sep > 0.0)) return;
    b.evaluate(x, bx);
    b.evaluate(y, by);
    double diff2 = 0.0;
    for (int i = 0; i < d; ++i) diff2 += (bx[i] - by[i]) * (bx[i] - by[i]);
    const double ratio = std::sqrt(diff2) / std::pow(sep, exponent);
    global = std::max(global, ratio);
    const int j = std::clamp(static_cast<int>(std::ceil(-std::log10(sep))), 0, kDecades + 2);
    best_in_decade[j] = std::max(best_in_decade[j], ratio);
    ++used;
  };

  for (double centre : {0.0, 1.0, -1.0}) {
    for (int e = 0; e <= 4 * (kDecades + 2) && used < pair_budget; ++e) {
      const double s = std::pow(10.0, -0.25 * e);
      for (double sgn : {1.0, -1.0}) {
        std::fill(x.begin(), x.end(), 0.0);
        std::fill(y.begin(), y.end(), 0.0);
        x[0] = centre;
        y[0] = centre + sgn * s;
        record();
        x[0] = centre - 0.5 * sgn * s;
        y[0] = centre + 0.5 * sgn * s;
        record();
      }
    }
  }

  PhiloxStream rng(seed, 0x401de5);
  while (used < pair_budget) {
    const double sep = std::pow(10.0, -(kDecades + 1) * rng.uniform());
    double un = 0.0;
    for (int i = 0; i < d; ++i) {
      y[i] = rng.normal();
      un += y[i] * y[i];
    }
    un = std::sqrt(un);
    for (int i = 0; i < d; ++i) {
      x[i] = window * (2.0 * rng.uniform() - 1.0);
      y[i] = x[i] + sep * y[i] / un;
    }
    const long before = used;
    record();
    if (used == before) ++used;
  }

  HolderEstimate est;
  est.global_estimate = global;
  // Windowed sup over |x - y| < 10^{-k}: maximum over the decades j > k.
  double running = 0.0;
  std::vector<double> suffix(kDecades + 3, 0.0);
  for (int j = kDecades + 2; j >= 0; --j) {
    running = std::max(running, best_in_decade[j]);
    suffix[j] = running;
  }
  for (int k = 0; k <= kDecades; ++k) {
    est.local_profile.emplace_back(std::pow(10.0, -k), suffix[k + 1]);
    est.scale_profile.emplace_back(std::pow(10.0, -k), best_in_decade[k + 1]);
  }
  return est;
}

}  // namespace stablesde
