#pragma once

// Increments Z_{t+h} - Z_t of a symmetric alpha-stable process with a given
// spectral measure. Three methods:
//   ray_sum          exact, discrete measures: one CMS variate per symmetric atom pair;
//   subordination    exact, isotropic measures: sqrt(2 S) G with S positive (alpha/2)-stable;
//   compound_poisson approximate, any kind: jumps larger than rho only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stablesde/errors.hpp"
#include "stablesde/levy_measure.hpp"
#include "stablesde/quadrature.hpp"
#include "stablesde/rng.hpp"
#include "stablesde/simd_math.hpp"

namespace stablesde {

/// Chambers-Mallows-Stuck: sin(alpha u) / cos(u)^{1/alpha} * (cos((1-alpha) u) / e)^{(1-alpha)/alpha}.
/// With u uniform on (-pi/2, pi/2) and e standard exponential the result has
/// characteristic function exp(-|xi|^alpha).
inline double cms_standard_stable(double alpha, double u, double e) {
  if (u == 0.0) return 0.0;
  return std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
}

/// Kanter's representation of a positive beta-stable variate with Laplace
/// transform exp(-s^beta); u uniform on (0, pi), e standard exponential.
inline double kanter_positive_stable(double beta, double u, double e) {
  return std::sin(beta * u) * std::pow(std::sin((1.0 - beta) * u), (1.0 - beta) / beta) /
         std::pow(std::sin(u), 1.0 / beta) / std::pow(e, (1.0 - beta) / beta);
}

enum class SamplerMethod { ray_sum, subordination, compound_poisson };

inline std::string to_string(SamplerMethod m) {
  switch (m) {
    case SamplerMethod::ray_sum: return "ray_sum";
    case SamplerMethod::subordination: return "subordination";
    case SamplerMethod::compound_poisson: return "compound_poisson";
  }
  return "?";
}

inline SamplerMethod sampler_method_from_string(const std::string& s) {
  if (s == "ray_sum") return SamplerMethod::ray_sum;
  if (s == "subordination") return SamplerMethod::subordination;
  if (s == "compound_poisson") return SamplerMethod::compound_poisson;
  throw ConfigError("unknown sampler method '" + s + "'");
}

struct SamplerSpec {
  SpectralMeasure measure = SpectralMeasure::discrete(1, 0.5, {});
  SamplerMethod method = SamplerMethod::ray_sum;
  double cutoff = 1.0;  // rho, compound_poisson only
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// The exact method for the measure kind.
inline SamplerSpec default_sampler(SpectralMeasure m, std::uint64_t seed = 0, std::uint64_t stream_id = 0) {
  const SamplerMethod method = m.kind() == MeasureKind::isotropic ? SamplerMethod::subordination : SamplerMethod::ray_sum;
  return {std::move(m), method, 1.0, seed, stream_id};
}

inline void validate(const SamplerSpec& spec) {
  const auto kind = spec.measure.kind();
  if (spec.method == SamplerMethod::ray_sum && kind != MeasureKind::discrete)
    throw ConfigError("ray_sum requires a discrete spectral measure");
  if (spec.method == SamplerMethod::subordination && kind != MeasureKind::isotropic)
    throw ConfigError("subordination requires an isotropic spectral measure");
  if (spec.method == SamplerMethod::compound_poisson && !(spec.cutoff > 0.0 && spec.cutoff <= 1.0))
    throw ConfigError("compound_poisson cutoff must lie in (0, 1]");
}

inline nlohmann::json to_json(const SamplerSpec& s) {
  nlohmann::json j{{"measure", to_json(s.measure)}, {"method", to_string(s.method)}, {"seed", s.seed}, {"stream_id", s.stream_id}};
  if (s.method == SamplerMethod::compound_poisson) j["cutoff"] = s.cutoff;
  return j;
}

/// Increment generator for a fixed step h. Holds only precomputed constants;
/// randomness comes from the caller's stream, so one sampler can serve many paths.
class IncrementSampler {
 public:
  IncrementSampler(const SamplerSpec& spec, double h) : spec_(spec), h_(h) {
    validate(spec_);
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("time step must be positive");
    const auto& m = spec_.measure;
    const double a = m.alpha();
    d_ = m.dimension();
    switch (spec_.method) {
      case SamplerMethod::ray_sum: {
        const double k = checked_constant(a);
        for (const auto& [i, j] : m.symmetric_pairs()) {
          const auto& atom = m.atoms()[i];
          rays_.push_back({atom.direction, std::pow(h * atom.weight * 2.0 * k, 1.0 / a)});
        }
        break;
      }
      case SamplerMethod::subordination: {
        checked_constant(a);
        const double beta = 0.5 * a;
        subordinator_scale_ = std::pow(h * isotropic_symbol_coefficient(m), 1.0 / beta);
        break;
      }
      case SamplerMethod::compound_poisson: {
        jump_rate_ = h * m.tail_mass(spec_.cutoff);
        if (m.kind() == MeasureKind::discrete) {
          double acc = 0.0;
          for (const auto& atom : m.atoms()) cumulative_.push_back(acc += atom.weight);
        }
        break;
      }
    }
  }

  int dimension() const { return d_; }
  double step() const { return h_; }
  const SamplerSpec& spec() const { return spec_; }

  /// Expected number of jumps per increment (compound_poisson).
  double jump_rate() const { return jump_rate_; }
  /// int_{|z|<=rho} |z| mu(dz) per unit time: bound on the dropped small-jump drift.
  double small_jump_bias_bound() const {
    return spec_.method == SamplerMethod::compound_poisson ? spec_.measure.truncated_first_moment(spec_.cutoff) : 0.0;
  }

  void sample(PhiloxStream& rng, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    switch (spec_.method) {
      case SamplerMethod::ray_sum:
        for (const auto& ray : rays_) {
          const double x = ray.scale * standard_variate(rng);
          for (int i = 0; i < d_; ++i) out[i] += x * ray.direction[i];
        }
        break;
      case SamplerMethod::subordination: {
        const double beta = 0.5 * spec_.measure.alpha();
        const double u = std::numbers::pi * rng.uniform();
        const double e = -std::log(rng.uniform());
        const double s = subordinator_scale_ * kanter_positive_stable(beta, u, e);
        const double r = std::sqrt(2.0 * s);
        for (int i = 0; i < d_; ++i) out[i] = r * rng.normal();
        break;
      }
      case SamplerMethod::compound_poisson: {
        const auto n = rng.poisson(jump_rate_);
        const double a = spec_.measure.alpha();
        std::vector<double> dir(d_);
        for (std::uint64_t j = 0; j < n; ++j) {
          jump_direction(rng, dir);
          const double r = spec_.cutoff * std::pow(rng.uniform(), -1.0 / a);
          for (int i = 0; i < d_; ++i) out[i] += r * dir[i];
        }
        break;
      }
    }
  }

  /// out.size() consecutive increments of a one-dimensional process. Draw order
  /// matches repeated sample() calls; the alpha = 1/2 ray path is vectorised.
  void fill_scalar(PhiloxStream& rng, std::span<double> out, std::vector<double>& scratch) const {
    if (d_ != 1) throw UnsupportedDimension("fill_scalar needs a one-dimensional sampler");
    const std::size_t n = out.size();
    if (spec_.method == SamplerMethod::ray_sum && rays_.size() == 1 && spec_.measure.alpha() == 0.5) {
      scratch.resize(2 * n);
      double* u = scratch.data();
      double* v = u + n;
      for (std::size_t k = 0; k < n; ++k) {
        u[k] = rng.uniform();
        v[k] = rng.uniform();
      }
      cms_half_batch(u, v, out.data(), n, rays_[0].scale * rays_[0].direction[0]);
      return;
    }
    for (std::size_t k = 0; k < n; ++k) sample(rng, out.subspan(k, 1));
  }

 private:
  struct Ray {
    std::vector<double> direction;
    double scale;
  };

  static double checked_constant(double alpha) {
    // The closed-form symbol constant is cross-checked against quadrature once per alpha.
    thread_local double last_alpha = -1.0;
    thread_local double last_value = 0.0;
    if (alpha != last_alpha) {
      last_value = checked_stable_symbol_constant(alpha);
      last_alpha = alpha;
    }
    return last_value;
  }

  double standard_variate(PhiloxStream& rng) const {
    const double u = std::numbers::pi * (rng.uniform() - 0.5);
    const double e = -std::log(rng.uniform());
    return cms_standard_stable(spec_.measure.alpha(), u, e);
  }

  void jump_direction(PhiloxStream& rng, std::vector<double>& dir) const {
    const auto& m = spec_.measure;
    if (m.kind() == MeasureKind::discrete) {
      const double t = rng.uniform() * cumulative_.back();
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), t);
      const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative_.begin(), cumulative_.size() - 1));
      dir = m.atoms()[idx].direction;
      return;
    }
    if (d_ == 1) {
      dir[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      return;
    }
    double n = 0.0;
    while (n < 1e-12) {
      n = 0.0;
      for (double& x : dir) {
        x = rng.normal();
        n += x * x;
      }
      n = std::sqrt(n);
    }
    for (double& x : dir) x /= n;
  }

  SamplerSpec spec_;
  double h_;
  int d_ = 1;
  std::vector<Ray> rays_;
  double subordinator_scale_ = 0.0;
  double jump_rate_ = 0.0;
  std::vector<double> cumulative_;
};

/// One increment over a step h from the stream (spec.seed, spec.stream_id).
inline std::vector<double> sample_increment(const SamplerSpec& spec, double h) {
  IncrementSampler s(spec, h);
  PhiloxStream rng(spec.seed, spec.stream_id);
  std::vector<double> out(s.dimension());
  s.sample(rng, out);
  return out;
}

/// n consecutive increments from the same stream, row-major n x d.
inline std::vector<double> sample_increments(const SamplerSpec& spec, double h, std::size_t n) {
  IncrementSampler s(spec, h);
  PhiloxStream rng(spec.seed, spec.stream_id);
  const auto d = static_cast<std::size_t>(s.dimension());
  std::vector<double> out(n * d);
  for (std::size_t k = 0; k < n; ++k) s.sample(rng, std::span<double>(out).subspan(k * d, d));
  return out;
}

/// (1/N) sum_k cos<xi, z_k> for row-major samples.
inline double empirical_cf(std::span<const double> samples, int d, std::span<const double> xi) {
  const std::size_t n = samples.size() / static_cast<std::size_t>(d);
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::cos(dot(samples.subspan(k * d, d), xi));
  return s / static_cast<double>(n);
}

}  // namespace stablesde
