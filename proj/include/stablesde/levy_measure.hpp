#pragma once

// Symmetric alpha-stable Levy measures in polar form
//   mu(A) = int_0^inf int_{S^{d-1}} 1_A(r theta) Sigma(dtheta) r^{-1-alpha} dr,
// the cone covering condition on their truncated second moments, and the
// drift-smallness threshold derived from it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stablesde/errors.hpp"
#include "stablesde/quadrature.hpp"
#include "stablesde/rng.hpp"

namespace stablesde {

inline constexpr double kUnitTolerance = 1e-12;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

enum class MeasureKind { discrete, isotropic };

struct Atom {
  std::vector<double> direction;
  double weight = 0.0;
};

/// Angular (spectral) measure Sigma together with the stability index.
/// Discrete measures are finite sums of weighted atoms; an empty atom list is
/// the zero measure. Isotropic measures have Levy density c |z|^{-d-alpha}.
class SpectralMeasure {
 public:
  static SpectralMeasure discrete(int dimension, double alpha, std::vector<Atom> atoms) {
    SpectralMeasure m(dimension, alpha, MeasureKind::discrete);
    m.atoms_ = std::move(atoms);
    m.validate_atoms();
    return m;
  }

  static SpectralMeasure isotropic(int dimension, double alpha, double c) {
    SpectralMeasure m(dimension, alpha, MeasureKind::isotropic);
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("isotropic constant must be positive");
    m.c_ = c;
    return m;
  }

  int dimension() const { return d_; }
  double alpha() const { return alpha_; }
  MeasureKind kind() const { return kind_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double isotropic_constant() const { return c_; }
  bool is_zero() const { return kind_ == MeasureKind::discrete && atoms_.empty(); }

  /// Sigma(S^{d-1}).
  double total_mass() const {
    if (kind_ == MeasureKind::isotropic) return c_ * unit_sphere_area(d_ - 1);
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
  }

  /// mu({|z| > m}).
  double tail_mass(double m) const { return total_mass() * std::pow(m, -alpha_) / alpha_; }

  /// int_{|z| <= m} |z|^2 mu(dz).
  double truncated_second_moment(double m) const {
    return total_mass() * std::pow(m, 2.0 - alpha_) / (2.0 - alpha_);
  }

  /// int_{|z| <= rho} |z| mu(dz); finite because alpha < 1.
  double truncated_first_moment(double rho) const {
    return total_mass() * std::pow(rho, 1.0 - alpha_) / (1.0 - alpha_);
  }

  /// Index pairs (i, j) with atom j = -atom i, i < j. Valid measures pair every atom.
  std::vector<std::pair<std::size_t, std::size_t>> symmetric_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<bool> used(atoms_.size(), false);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (used[i]) continue;
      for (std::size_t j = i + 1; j < atoms_.size(); ++j) {
        if (!used[j] && is_mirror(atoms_[i], atoms_[j])) {
          used[i] = used[j] = true;
          pairs.emplace_back(i, j);
          break;
        }
      }
    }
    return pairs;
  }

  /// Same measure with every atom direction negated.
  SpectralMeasure negated() const {
    SpectralMeasure m = *this;
    for (auto& a : m.atoms_)
      for (double& x : a.direction) x = -x;
    return m;
  }

 private:
  SpectralMeasure(int d, double alpha, MeasureKind kind) : d_(d), alpha_(alpha), kind_(kind) {
    if (d < 1) throw DomainError("dimension must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie strictly inside (0,1)");
  }

  static bool is_mirror(const Atom& a, const Atom& b) {
    if (std::abs(a.weight - b.weight) > kUnitTolerance * std::max(1.0, a.weight)) return false;
    for (std::size_t k = 0; k < a.direction.size(); ++k)
      if (std::abs(a.direction[k] + b.direction[k]) > kUnitTolerance) return false;
    return true;
  }

  void validate_atoms() const {
    for (const auto& a : atoms_) {
      if (static_cast<int>(a.direction.size()) != d_) throw DomainError("atom direction has wrong dimension");
      if (std::abs(norm(a.direction) - 1.0) > kUnitTolerance) throw DomainError("atom direction is not a unit vector");
      if (!(a.weight > 0.0) || !std::isfinite(a.weight)) throw DomainError("atom weights must be strictly positive");
    }
    if (symmetric_pairs().size() * 2 != atoms_.size()) throw DomainError("measure is not symmetric");
  }

  int d_;
  double alpha_;
  MeasureKind kind_;
  std::vector<Atom> atoms_;
  double c_ = 0.0;
};

// ---------------------------------------------------------------------------
// Named measures

/// d = 1, atoms {+1, -1} with equal weight; Levy density w |z|^{-1-alpha}.
inline SpectralMeasure two_point_measure(double alpha, double weight = 1.0) {
  return SpectralMeasure::discrete(1, alpha, {{{1.0}, weight}, {{-1.0}, weight}});
}

/// Independent symmetric alpha-stable coordinates: atoms +-e_i with unit weight.
inline SpectralMeasure independent_coordinates_measure(int dimension, double alpha) {
  std::vector<Atom> atoms;
  for (int i = 0; i < dimension; ++i) {
    std::vector<double> e(dimension, 0.0);
    e[i] = 1.0;
    atoms.push_back({e, 1.0});
    e[i] = -1.0;
    atoms.push_back({e, 1.0});
  }
  return SpectralMeasure::discrete(dimension, alpha, std::move(atoms));
}

/// Planar measure carried by the lines through 0 at angles i*spacing, i*spacing < pi,
/// each half-line with radial density r^{-1-alpha}.
inline SpectralMeasure lattice_of_rays_measure(double alpha, double spacing) {
  if (!(spacing > 0.0 && spacing < std::numbers::pi)) throw DomainError("ray spacing must lie in (0, pi)");
  std::vector<Atom> atoms;
  for (int i = 0; i * spacing < std::numbers::pi - 1e-12; ++i) {
    const double phi = i * spacing;
    const double c = std::cos(phi), s = std::sin(phi);
    atoms.push_back({{c, s}, 1.0});
    atoms.push_back({{-c, -s}, 1.0});
  }
  return SpectralMeasure::discrete(2, alpha, std::move(atoms));
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const SpectralMeasure& m) {
  nlohmann::json j{{"d", m.dimension()}, {"alpha", m.alpha()}};
  if (m.kind() == MeasureKind::isotropic) {
    j["kind"] = "isotropic";
    j["c"] = m.isotropic_constant();
  } else {
    j["kind"] = "discrete";
    j["atoms"] = nlohmann::json::array();
    for (const auto& a : m.atoms()) j["atoms"].push_back({{"dir", a.direction}, {"w", a.weight}});
  }
  return j;
}

/// Parses the canonical document. Also accepts the presets
/// {"kind":"two_point","w":..}, {"kind":"independent"} and {"kind":"lattice","spacing":..}.
inline SpectralMeasure measure_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const double alpha = j.at("alpha").get<double>();
    if (kind == "isotropic") return SpectralMeasure::isotropic(j.at("d").get<int>(), alpha, j.value("c", 1.0));
    if (kind == "discrete") {
      std::vector<Atom> atoms;
      for (const auto& a : j.at("atoms")) atoms.push_back({a.at("dir").get<std::vector<double>>(), a.at("w").get<double>()});
      return SpectralMeasure::discrete(j.at("d").get<int>(), alpha, std::move(atoms));
    }
    if (kind == "two_point") return two_point_measure(alpha, j.value("w", 1.0));
    if (kind == "independent") return independent_coordinates_measure(j.value("d", 2), alpha);
    if (kind == "lattice") return lattice_of_rays_measure(alpha, j.at("spacing").get<double>());
    throw ConfigError("unknown measure kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed measure document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Cones and the truncated second moment

class Cone {
 public:
  Cone(std::vector<double> axis, double apex_angle) : axis_(std::move(axis)), apex_(apex_angle) {
    if (std::abs(norm(axis_) - 1.0) > kUnitTolerance) throw DomainError("cone axis must be a unit vector");
    if (!(apex_ > 0.0 && apex_ < std::numbers::pi)) throw DomainError("apex angle must lie in (0, pi)");
    cos_half_ = std::cos(0.5 * apex_);
  }

  const std::vector<double>& axis() const { return axis_; }
  double apex_angle() const { return apex_; }

  /// <x, n> > |x| cos(theta/2).
  bool contains(std::span<const double> x) const { return dot(x, axis_) > norm(x) * cos_half_; }

 private:
  std::vector<double> axis_;
  double apex_;
  double cos_half_;
};

/// Surface measure of a spherical cap of the given half-angle on S^{d-1}.
/// For d = 1 the "cap" is the single point of {+1,-1} on the axis side.
inline double spherical_cap_measure(int d, double half_angle) {
  if (d == 1) return 1.0;
  const int k = d - 2;
  auto integrand = [k](double phi) { return k == 0 ? 1.0 : std::pow(std::sin(phi), k); };
  return unit_sphere_area(k) * tanh_sinh(integrand, 0.0, half_angle);
}

namespace detail {

inline void require_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
}

/// Sigma(S(n, theta)): the angular mass inside the cone.
inline double cone_angular_mass(const SpectralMeasure& m, const Cone& cone) {
  if (m.kind() == MeasureKind::isotropic)
    return m.isotropic_constant() * spherical_cap_measure(m.dimension(), 0.5 * cone.apex_angle());
  double s = 0.0;
  for (const auto& a : m.atoms())
    if (cone.contains(a.direction)) s += a.weight;
  return s;
}

}  // namespace detail

/// I(n, theta, delta) = int_{B_delta cap S(n,theta)} |y|^2 mu(dy)
///                    = Sigma(S(n,theta)) delta^{2-alpha} / (2-alpha).
inline double cone_second_moment(const SpectralMeasure& m, const Cone& cone, double delta) {
  detail::require_delta(delta);
  if (static_cast<int>(cone.axis().size()) != m.dimension()) throw DomainError("cone and measure dimensions differ");
  const double a = m.alpha();
  return detail::cone_angular_mass(m, cone) * std::pow(delta, 2.0 - a) / (2.0 - a);
}

// ---------------------------------------------------------------------------
// Cone condition certification

struct DirectionRow {
  std::vector<double> direction;
  std::vector<double> best_axis;
  double ratio = 0.0;  // max over axes of inf over delta of I / delta^{2-alpha}
};

struct ConeConditionReport {
  double theta = 0.0;
  double kappa_hat = 0.0;
  std::vector<double> worst_direction;
  std::vector<DirectionRow> per_direction_table;
  bool satisfied = false;
};

struct ConeSearchOptions {
  int axes_per_direction = 360;
  std::uint64_t seed = 0x5eed;  // direction/axis sampling for d >= 3
};

/// {2^-k : k = 0..20}.
inline std::vector<double> default_delta_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

namespace detail {

inline std::vector<double> polar(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline double angle_of(std::span<const double> v) { return std::atan2(v[1], v[0]); }

/// inf over the delta grid of I(n, theta, delta) / delta^{2-alpha}; `scales` holds delta^{2-alpha}.
inline double axis_score(const SpectralMeasure& m, const Cone& cone, std::span<const double> scales) {
  const double mass = cone_angular_mass(m, cone) / (2.0 - m.alpha());
  double best = std::numeric_limits<double>::infinity();
  for (double s : scales) best = std::min(best, mass * s / s);
  return best;
}

/// Geodesic point at angle t from unit vector u towards unit vector v.
inline std::vector<double> rotate_towards(std::span<const double> u, std::span<const double> v, double t) {
  const double c = std::clamp(dot(u, v), -1.0, 1.0);
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = v[i] - c * u[i];
  const double wn = norm(w);
  std::vector<double> out(u.begin(), u.end());
  if (wn < 1e-15) return out;
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::cos(t) * u[i] + std::sin(t) * w[i] / wn;
  const double on = norm(out);
  for (double& x : out) x /= on;
  return out;
}

inline std::vector<double> random_unit(PhiloxStream& rng, int d) {
  std::vector<double> v(d);
  double n = 0.0;
  while (n < 1e-12) {
    for (double& x : v) x = rng.normal();
    n = norm(v);
  }
  for (double& x : v) x /= n;
  return v;
}

}  // namespace detail

/// Estimates kappa: for each direction on a grid, the best cone containing it
/// (largest guaranteed second moment across delta), then the minimum over directions.
///
/// d = 1: directions {+1, -1}; the only admissible axis is the direction itself.
/// d = 2: `direction_grid_size` equally spaced directions. Axes are scanned on a
///   uniform grid of the open arc of admissible axes; for discrete measures the
///   score is piecewise constant in the axis angle, so the scan is completed by
///   evaluating every interval between the breakpoints atom_angle +- theta/2.
///   The worst direction is the centre of the longest run of minimal directions.
/// d >= 3: `direction_grid_size` pseudo-random directions (fixed seed); candidate
///   axes are the direction, the geodesic bisectors towards atoms within angle
///   theta, and `axes_per_direction` random axes in the admissible cap.
inline ConeConditionReport check_cone_condition(const SpectralMeasure& m, double theta, int direction_grid_size,
                                                std::span<const double> delta_grid, ConeSearchOptions opts = {}) {
  if (!(theta > 0.0 && theta < std::numbers::pi)) throw DomainError("theta must lie in (0, pi)");
  if (direction_grid_size < 8) throw DomainError("direction grid must have at least 8 points");
  if (delta_grid.empty()) throw DomainError("delta grid is empty");
  for (double delta : delta_grid) detail::require_delta(delta);

  const int d = m.dimension();
  const double half = 0.5 * theta;
  std::vector<double> scales;
  for (double delta : delta_grid) scales.push_back(std::pow(delta, 2.0 - m.alpha()));
  ConeConditionReport report;
  report.theta = theta;

  auto best_over = [&](std::span<const double> dir, const std::vector<std::vector<double>>& axes, DirectionRow& row) {
    row.direction.assign(dir.begin(), dir.end());
    row.ratio = -1.0;
    for (const auto& ax : axes) {
      const Cone cone(ax, theta);
      if (!cone.contains(dir)) continue;
      const double s = detail::axis_score(m, cone, scales);
      if (s > row.ratio) {
        row.ratio = s;
        row.best_axis = ax;
      }
    }
    if (row.ratio < 0.0) {  // no candidate contained the direction; fall back to the direction itself
      row.best_axis = row.direction;
      row.ratio = detail::axis_score(m, Cone(row.direction, theta), scales);
    }
  };

  if (d == 1) {
    for (double s : {1.0, -1.0}) {
      DirectionRow row;
      std::vector<double> dir{s};
      best_over(dir, {dir}, row);
      report.per_direction_table.push_back(std::move(row));
    }
  } else if (d == 2) {
    const int n_axes = std::max(1, opts.axes_per_direction);
    std::vector<double> atom_angles;
    if (m.kind() == MeasureKind::discrete)
      for (const auto& a : m.atoms()) atom_angles.push_back(detail::angle_of(a.direction));
    for (int i = 0; i < direction_grid_size; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / direction_grid_size;
      std::vector<std::vector<double>> axes;
      if (m.kind() == MeasureKind::isotropic) {
        axes.push_back(detail::polar(phi));
      } else {
        for (int j = 0; j < n_axes; ++j) axes.push_back(detail::polar(phi - half + (j + 0.5) * theta / n_axes));
        std::vector<double> cuts{-half, half};
        for (double ang : atom_angles) {
          for (double sgn : {-1.0, 1.0}) {
            double off = std::remainder(ang + sgn * half - phi, 2.0 * std::numbers::pi);
            if (off > -half && off < half) cuts.push_back(off);
          }
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
          if (cuts[k + 1] > cuts[k]) axes.push_back(detail::polar(phi + 0.5 * (cuts[k] + cuts[k + 1])));
      }
      DirectionRow row;
      best_over(detail::polar(phi), axes, row);
      report.per_direction_table.push_back(std::move(row));
    }
  } else {
    PhiloxStream rng(opts.seed, 0xC0E);
    for (int i = 0; i < direction_grid_size; ++i) {
      const auto dir = detail::random_unit(rng, d);
      std::vector<std::vector<double>> axes{dir};
      if (m.kind() == MeasureKind::discrete) {
        for (const auto& a : m.atoms()) {
          const double ang = std::acos(std::clamp(dot(dir, a.direction), -1.0, 1.0));
          if (ang < theta) axes.push_back(detail::rotate_towards(dir, a.direction, 0.5 * ang));
        }
        for (int j = 0; j < opts.axes_per_direction; ++j) {
          const auto target = detail::random_unit(rng, d);
          axes.push_back(detail::rotate_towards(dir, target, half * rng.uniform()));
        }
      }
      DirectionRow row;
      best_over(dir, axes, row);
      report.per_direction_table.push_back(std::move(row));
    }
  }

  const auto& table = report.per_direction_table;
  double kmin = std::numeric_limits<double>::infinity();
  for (const auto& row : table) kmin = std::min(kmin, row.ratio);
  report.kappa_hat = std::max(0.0, kmin);
  report.satisfied = report.kappa_hat > 0.0;

  const double tie = 1e-12 * std::max(1.0, std::abs(kmin));
  auto is_min = [&](std::size_t i) { return table[i].ratio <= kmin + tie; };
  if (d == 2) {
    // Longest circular run of minimal directions; report its centre.
    const std::size_t n = table.size();
    std::size_t best_start = 0, best_len = 0;
    std::size_t first_break = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!is_min(i)) {
        first_break = i;
        break;
      }
    if (first_break == n) {
      best_len = n;
    } else {
      std::size_t len = 0, start = 0;
      for (std::size_t step = 1; step <= n; ++step) {
        const std::size_t i = (first_break + step) % n;
        if (is_min(i)) {
          if (len == 0) start = i;
          ++len;
          if (len > best_len) {
            best_len = len;
            best_start = start;
          }
        } else {
          len = 0;
        }
      }
    }
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
    const double centre = (static_cast<double>(best_start) + 0.5 * static_cast<double>(best_len - 1)) * step;
    report.worst_direction = detail::polar(centre);
  } else {
    for (std::size_t i = 0; i < table.size(); ++i)
      if (is_min(i)) {
        report.worst_direction = table[i].direction;
        break;
      }
  }
  return report;
}

inline nlohmann::json to_json(const ConeConditionReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.per_direction_table)
    rows.push_back({{"direction", row.direction}, {"best_axis", row.best_axis}, {"ratio", row.ratio}});
  return {{"theta", r.theta},
          {"kappa_hat", r.kappa_hat},
          {"worst_direction", r.worst_direction},
          {"satisfied", r.satisfied},
          {"per_direction", rows}};
}

// ---------------------------------------------------------------------------
// Admissible cone angles and the smallness threshold

struct ThetaInterval {
  double printed_lower = 0.0;  // arccos sqrt(1/(2-alpha))
  double printed_upper = 0.0;  // pi/4
  bool printed_has_feasible_theta = false;  // cos^2 theta > 1/(2-alpha) somewhere inside
  double feasible_lower = 0.0;
  double feasible_upper = 0.0;  // arccos sqrt(1/(2-alpha))
};

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie strictly inside (0,1)");
}

/// Both the nominal interval (arccos sqrt(1/(2-alpha)), pi/4) and the interval
/// (0, arccos sqrt(1/(2-alpha))) on which the exponent window
/// (alpha, 2 - 1/cos^2 theta) is non-empty. The two only touch at one endpoint.
inline ThetaInterval admissible_theta_interval(double alpha) {
  require_alpha(alpha);
  const double edge = std::acos(std::sqrt(1.0 / (2.0 - alpha)));
  ThetaInterval iv;
  iv.printed_lower = edge;
  iv.printed_upper = 0.25 * std::numbers::pi;
  // cos^2 is decreasing on (0, pi/2) and equals 1/(2-alpha) at the lower endpoint.
  iv.printed_has_feasible_theta = false;
  iv.feasible_lower = 0.0;
  iv.feasible_upper = edge;
  return iv;
}

/// (1+eta)^{gamma-2} (2-gamma) cos^2 theta - (1-eta)^{gamma-2}.
inline double epsilon0_positivity_factor(double gamma, double eta, double cos2) {
  return std::pow(1.0 + eta, gamma - 2.0) * (2.0 - gamma) * cos2 - std::pow(1.0 - eta, gamma - 2.0);
}

/// epsilon_0(gamma, eta) = 2 kappa eta^{2-alpha} gamma * positivity factor.
inline double epsilon0_formula(double kappa, double alpha, double theta, double gamma, double eta) {
  const double c = std::cos(theta);
  return 2.0 * kappa * std::pow(eta, 2.0 - alpha) * gamma * epsilon0_positivity_factor(gamma, eta, c * c);
}

struct Epsilon0Grid {
  int gamma_points = 200;
  int eta_points = 200;
};

struct Epsilon0Result {
  double epsilon0 = 0.0;
  double gamma_star = std::numeric_limits<double>::quiet_NaN();
  double eta_star = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
};

namespace detail {

/// Maximiser of a unimodal f on (lo, hi); evaluations stay strictly inside.
template <class F>
double golden_section_max(F&& f, double lo, double hi, double tol = 1e-13) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? x1 : x2;
}

}  // namespace detail

/// Maximises epsilon_0 over gamma in (alpha, 2 - 1/cos^2 theta) and eta in (0,1):
/// a cell-centred grid search followed by alternating golden-section refinement,
/// each line search restricted to the grid cells around the incumbent.
/// The search runs on the kappa-free shape, so the result is exactly linear in kappa.
inline Epsilon0Result compute_epsilon0(double kappa, double alpha, double theta, Epsilon0Grid grid = {}) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  require_alpha(alpha);
  if (grid.gamma_points < 1 || grid.eta_points < 1) throw DomainError("epsilon0 grid must be non-empty");
  Epsilon0Result res;
  const double c = std::cos(theta);
  const double cos2 = c * c;
  if (!(cos2 > 1.0 / (2.0 - alpha))) return res;
  const double g_lo = alpha, g_hi = 2.0 - 1.0 / cos2;
  if (!(g_hi > g_lo)) return res;

  auto shape = [&](double g, double e) {
    return std::pow(e, 2.0 - alpha) * g * epsilon0_positivity_factor(g, e, cos2);
  };

  const double dg = (g_hi - g_lo) / grid.gamma_points;
  const double de = 1.0 / grid.eta_points;
  double best = -std::numeric_limits<double>::infinity();
  int bi = 0, bj = 0;
  for (int i = 0; i < grid.gamma_points; ++i) {
    const double g = g_lo + (i + 0.5) * dg;
    for (int j = 0; j < grid.eta_points; ++j) {
      const double v = shape(g, (j + 0.5) * de);
      if (v > best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  }
  double g = g_lo + (bi + 0.5) * dg;
  double e = (bj + 0.5) * de;
  for (int round = 0; round < 200; ++round) {
    const double g_prev = g, e_prev = e;
    g = detail::golden_section_max([&](double x) { return shape(x, e); }, std::max(g_lo, g - 2.0 * dg),
                                   std::min(g_hi, g + 2.0 * dg));
    e = detail::golden_section_max([&](double y) { return shape(g, y); }, std::max(0.0, e - 2.0 * de),
                                   std::min(1.0, e + 2.0 * de));
    if (std::abs(g - g_prev) <= 1e-15 && std::abs(e - e_prev) <= 1e-15) break;
  }
  const double s = shape(g, e);
  if (s > 0.0 && epsilon0_positivity_factor(g, e, cos2) > 0.0) {
    res.feasible = true;
    res.epsilon0 = 2.0 * kappa * s;
    res.gamma_star = g;
    res.eta_star = e;
  }
  return res;
}

inline nlohmann::json to_json(const Epsilon0Result& r) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return {{"epsilon0", r.epsilon0}, {"gamma_star", num(r.gamma_star)}, {"eta_star", num(r.eta_star)},
          {"feasible", r.feasible}};
}

// ---------------------------------------------------------------------------
// Levy symbol

/// int_{S^{d-1}} |theta_1|^alpha sigma(dtheta) by quadrature.
inline double sphere_abs_moment(int d, double alpha) {
  if (d == 1) return 2.0;
  const int k = d - 2;
  auto integrand = [&](double phi) {
    const double s = k == 0 ? 1.0 : std::pow(std::sin(phi), k);
    return std::pow(std::abs(std::cos(phi)), alpha) * s;
  };
  const double half_pi = 0.5 * std::numbers::pi;
  return unit_sphere_area(k) * (tanh_sinh(integrand, 0.0, half_pi) + tanh_sinh(integrand, half_pi, std::numbers::pi));
}

/// psi(xi) = int (1 - cos<xi,z>) mu(dz). Each atom contributes w K(alpha) |<xi,theta>|^alpha,
/// so a symmetric pair contributes w C(alpha) |<xi,theta>|^alpha with C = 2K.
inline double levy_symbol(const SpectralMeasure& m, std::span<const double> xi) {
  if (static_cast<int>(xi.size()) != m.dimension()) throw DomainError("frequency has wrong dimension");
  const double a = m.alpha();
  const double k = stable_symbol_constant(a);
  if (m.kind() == MeasureKind::isotropic)
    return m.isotropic_constant() * k * sphere_abs_moment(m.dimension(), a) * std::pow(norm(xi), a);
  double s = 0.0;
  for (const auto& atom : m.atoms()) s += atom.weight * std::pow(std::abs(dot(xi, atom.direction)), a);
  return k * s;
}

/// For an isotropic measure, psi(xi) = isotropic_symbol_coefficient * |xi|^alpha.
inline double isotropic_symbol_coefficient(const SpectralMeasure& m) {
  return m.isotropic_constant() * stable_symbol_constant(m.alpha()) * sphere_abs_moment(m.dimension(), m.alpha());
}

}  // namespace stablesde
