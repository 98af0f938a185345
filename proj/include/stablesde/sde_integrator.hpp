#pragma once

// Euler scheme X_{k+1} = X_k + b(X_k) h + dZ_k, Monte Carlo estimation of the
// resolvent functional E int_0^inf e^{-lambda t} f(X_t) dt, and the truncation
// constants (T, m, R) that control its far-field decay.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stablesde/drift.hpp"
#include "stablesde/errors.hpp"
#include "stablesde/io.hpp"
#include "stablesde/levy_measure.hpp"
#include "stablesde/parallel.hpp"
#include "stablesde/rng.hpp"
#include "stablesde/stable_sampler.hpp"
#include "stablesde/stats.hpp"

namespace stablesde {

// ---------------------------------------------------------------------------
// Test functions

/// height * exp(1 - 1/(1 - |x-c|^2/r^2)) inside the ball, 0 outside; height = 0 is f = 0.
struct TestFunction {
  std::vector<double> centre{0.0};
  double radius = 1.0;
  double height = 1.0;

  double sup() const { return std::abs(height); }
  double support_radius() const { return radius; }
  bool is_zero() const { return height == 0.0; }

  double scalar(double x) const {
    const double t = (x - centre[0]) / radius;
    const double q = t * t;
    if (q >= 1.0) return 0.0;
    return height * std::exp(1.0 - 1.0 / (1.0 - q));
  }

  double operator()(std::span<const double> x) const {
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) q += (x[i] - centre[i]) * (x[i] - centre[i]);
    q /= radius * radius;
    if (q >= 1.0) return 0.0;
    return height * std::exp(1.0 - 1.0 / (1.0 - q));
  }
};

inline TestFunction smooth_bump(double radius = 1.0, double height = 1.0, int dimension = 1) {
  if (!(radius > 0.0)) throw DomainError("bump radius must be positive");
  return {std::vector<double>(dimension, 0.0), radius, height};
}

// ---------------------------------------------------------------------------
// Truncation constants

/// Norms of the radial cut-off g with g = 0 at the origin and g = 1 outside the unit ball.
struct BumpProfile {
  double sup_norm = 1.0;
  double grad_norm = 15.0 / 8.0;
  double hess_norm = 10.0 / std::numbers::sqrt3;
};

/// g(r) = 10 r^3 - 15 r^4 + 6 r^5 on [0,1], 1 beyond: C^2 with g'(1) = g''(1) = 0.
inline double quintic_bump(double r) {
  if (r >= 1.0) return 1.0;
  if (r <= 0.0) return 0.0;
  return r * r * r * (10.0 + r * (-15.0 + 6.0 * r));
}

struct TruncationParams {
  double epsilon = 0.0;
  double lambda = 0.0;
  double T = 0.0;
  double m = 0.0;
  double R = 0.0;
  BumpProfile g_profile;
  double T_bound = 0.0;  // |log(lambda eps / (4 |f|)) / lambda|
  double R_bound = 0.0;  // right-hand side that R strictly exceeds
};

/// T: smallest 1.1^k strictly above |log(lambda eps / (4 f_sup)) / lambda|, but at least t_floor.
/// m: smallest value with T mu(|z| > m) <= eps / (4 |g|).
/// R: the next double above
///   (4 T f_sup |D^2 g| int_{|y|<=m} |y|^2 mu(dy) / (eps lambda))^{1/2} + 4 b_sup |Dg| / eps.
inline TruncationParams select_truncation(double epsilon, double lambda, double f_sup, double b_sup,
                                          const SpectralMeasure& measure, BumpProfile g = {}, double t_floor = 1e-3) {
  if (!(epsilon > 0.0 && lambda > 0.0 && f_sup > 0.0)) throw DomainError("epsilon, lambda and f_sup must be positive");
  if (!(b_sup >= 0.0)) throw DomainError("b_sup must be nonnegative");
  TruncationParams p;
  p.epsilon = epsilon;
  p.lambda = lambda;
  p.g_profile = g;
  p.T_bound = std::abs(std::log(lambda * epsilon / (4.0 * f_sup)) / lambda);
  if (p.T_bound < t_floor) {
    p.T = t_floor;
  } else {
    int k = static_cast<int>(std::floor(std::log(p.T_bound) / std::log(1.1)));
    while (std::pow(1.1, k) <= p.T_bound) ++k;
    while (std::pow(1.1, k - 1) > p.T_bound) --k;
    p.T = std::max(std::pow(1.1, k), t_floor);
  }
  const double sigma = measure.total_mass();
  const double a = measure.alpha();
  p.m = sigma > 0.0 ? std::pow(4.0 * g.sup_norm * p.T * sigma / (a * epsilon), 1.0 / a) : 0.0;
  const double second = sigma > 0.0 ? measure.truncated_second_moment(p.m) : 0.0;
  p.R_bound = std::sqrt(4.0 * p.T * f_sup * g.hess_norm * second / (epsilon * lambda)) + 4.0 * b_sup * g.grad_norm / epsilon;
  p.R = std::nextafter(p.R_bound, std::numeric_limits<double>::infinity());
  return p;
}

/// 3 lambda eps / (4 |f|): the target for P(exit from B_R before T).
inline double exit_probability_bound(const TruncationParams& p, double f_sup) {
  return 3.0 * p.lambda * p.epsilon / (4.0 * f_sup);
}

inline nlohmann::json to_json(const TruncationParams& p) {
  return {{"epsilon", p.epsilon}, {"lambda", p.lambda}, {"T", p.T}, {"m", p.m}, {"R", p.R},
          {"T_bound", p.T_bound}, {"R_bound", p.R_bound},
          {"g_profile", {{"sup_norm", p.g_profile.sup_norm}, {"grad_norm", p.g_profile.grad_norm},
                         {"hess_norm", p.g_profile.hess_norm}}}};
}

// ---------------------------------------------------------------------------
// Path simulation core

inline constexpr std::size_t kIncrementChunk = 1024;
inline constexpr std::size_t kPathChunk = 512;
inline constexpr double kMaxInvalidFraction = 1e-3;

/// Steps on [0, T] with h_eff = T / K, K = round(T / h) >= 1.
inline std::size_t step_count(double T, double h) {
  if (!(h > 0.0) || !(T >= h) || !std::isfinite(T)) throw DomainError("need h > 0 and T >= h");
  return static_cast<std::size_t>(std::max(1.0, std::round(T / h)));
}

namespace detail {

/// One-dimensional path; obs(k, X_k) for k = 0..K. Returns whether X_K is finite
/// (non-finite values propagate, so checking the end state suffices).
template <class Kernel, class Obs>
bool scalar_path(const Kernel& b, const IncrementSampler& sampler, PhiloxStream& rng, double x, std::size_t K,
                 double h, Obs& obs, std::vector<double>& inc, std::vector<double>& scratch) {
  obs(std::size_t{0}, x);
  inc.resize(kIncrementChunk);
  for (std::size_t k = 0; k < K;) {
    const std::size_t n = std::min(kIncrementChunk, K - k);
    sampler.fill_scalar(rng, std::span<double>(inc.data(), n), scratch);
    for (std::size_t i = 0; i < n; ++i) {
      x += b(x) * h + inc[i];
      obs(k + i + 1, x);
    }
    k += n;
  }
  return std::isfinite(x);
}

/// General dimension; obs(k, span of X_k).
template <class Obs>
bool vector_path(const Drift& b, const IncrementSampler& sampler, PhiloxStream& rng, std::span<const double> x0,
                 std::size_t K, double h, Obs& obs) {
  const std::size_t d = x0.size();
  std::vector<double> x(x0.begin(), x0.end()), bx(d), dz(d);
  obs(std::size_t{0}, std::span<const double>(x));
  for (std::size_t k = 0; k < K; ++k) {
    b.evaluate(x, bx);
    sampler.sample(rng, dz);
    for (std::size_t i = 0; i < d; ++i) x[i] += bx[i] * h + dz[i];
    obs(k + 1, std::span<const double>(x));
  }
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Runs path p from x0 with stream (seed, stream_id, p). The observer sees
/// (k, state) with state a double in d = 1 and a span otherwise.
template <class ScalarObs, class VectorObs>
bool run_path(const Drift& b, const IncrementSampler& sampler, std::uint64_t stream_id, std::uint64_t p,
              std::span<const double> x0, std::size_t K, double h, ScalarObs& sobs, VectorObs& vobs,
              std::vector<double>& inc, std::vector<double>& scratch) {
  PhiloxStream rng(sampler.spec().seed, stream_id, p);
  if (x0.size() == 1 && sampler.dimension() == 1) {
    return std::visit([&](const auto& kern) { return scalar_path(kern, sampler, rng, x0[0], K, h, sobs, inc, scratch); },
                      b.kernel);
  }
  return vector_path(b, sampler, rng, x0, K, h, vobs);
}

inline void check_compatible(const Drift& b, const SamplerSpec& spec, std::size_t d0) {
  if (b.dimension != spec.measure.dimension()) throw DomainError("drift and measure dimensions differ");
  if (d0 != static_cast<std::size_t>(b.dimension)) throw DomainError("initial point has wrong dimension");
}

inline void check_invalid(std::size_t invalid, std::size_t n) {
  if (static_cast<double>(invalid) > kMaxInvalidFraction * static_cast<double>(n))
    throw SimulationError("too many non-finite paths: " + std::to_string(invalid) + " of " + std::to_string(n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Path ensembles

struct PathEnsemble {
  std::size_t N = 0;
  std::size_t K = 0;  // steps; K + 1 states per path
  std::size_t d = 1;
  double h = 0.0;
  double T = 0.0;
  std::vector<std::vector<double>> initial_points;
  std::vector<double> states;  // [path][time][coordinate]
  std::vector<unsigned char> valid;
  std::size_t invalid_count = 0;
  std::string drift_name;
  SamplerSpec sampler;

  double time(std::size_t k) const { return static_cast<double>(k) * h; }
  std::span<const double> state(std::size_t path, std::size_t k) const {
    return std::span<const double>(states).subspan((path * (K + 1) + k) * d, d);
  }
};

/// N paths on [0, T]; path p starts at x0s[p mod x0s.size()] and uses substream p.
inline PathEnsemble euler_paths(const std::vector<std::vector<double>>& x0s, const Drift& drift, const SamplerSpec& spec,
                                double T, double h, std::size_t N) {
  if (x0s.empty()) throw DomainError("need at least one initial point");
  if (N < 1) throw DomainError("need at least one path");
  const std::size_t K = step_count(T, h);
  const double h_eff = T / static_cast<double>(K);
  for (const auto& x0 : x0s) detail::check_compatible(drift, spec, x0.size());
  const IncrementSampler sampler(spec, h_eff);

  PathEnsemble e;
  e.N = N;
  e.K = K;
  e.d = x0s[0].size();
  e.h = h_eff;
  e.T = T;
  e.initial_points = x0s;
  e.states.assign(N * (K + 1) * e.d, 0.0);
  e.valid.assign(N, 1);
  e.drift_name = drift.name;
  e.sampler = spec;

  std::vector<std::size_t> invalid(chunk_count(N, kPathChunk), 0);
  parallel_chunks(N, kPathChunk, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    std::vector<double> inc, scratch;
    for (std::size_t p = lo; p < hi; ++p) {
      double* row = e.states.data() + p * (K + 1) * e.d;
      auto sobs = [row](std::size_t k, double x) { row[k] = x; };
      auto vobs = [row, d = e.d](std::size_t k, std::span<const double> x) { std::copy(x.begin(), x.end(), row + k * d); };
      const bool ok = detail::run_path(drift, sampler, spec.stream_id, p, x0s[p % x0s.size()], K, h_eff, sobs, vobs, inc, scratch);
      if (!ok) {
        e.valid[p] = 0;
        ++invalid[c];
      }
    }
  });
  for (std::size_t v : invalid) e.invalid_count += v;
  detail::check_invalid(e.invalid_count, N);
  return e;
}

/// Final states X_T of N one-dimensional paths (invalid paths dropped).
inline std::vector<double> terminal_values(double x0, const Drift& drift, const SamplerSpec& spec, double T, double h,
                                           std::size_t N) {
  detail::check_compatible(drift, spec, 1);
  const std::size_t K = step_count(T, h);
  const double h_eff = T / static_cast<double>(K);
  const IncrementSampler sampler(spec, h_eff);
  std::vector<double> out(N);
  std::vector<std::size_t> invalid(chunk_count(N, kPathChunk), 0);
  const std::vector<double> start{x0};
  parallel_chunks(N, kPathChunk, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    std::vector<double> inc, scratch;
    for (std::size_t p = lo; p < hi; ++p) {
      double last = x0;
      auto sobs = [&last](std::size_t, double x) { last = x; };
      auto vobs = [&last](std::size_t, std::span<const double> x) { last = x[0]; };
      if (!detail::run_path(drift, sampler, spec.stream_id, p, start, K, h_eff, sobs, vobs, inc, scratch)) ++invalid[c];
      out[p] = last;
    }
  });
  std::size_t bad = 0;
  for (std::size_t v : invalid) bad += v;
  detail::check_invalid(bad, N);
  std::erase_if(out, [](double x) { return !std::isfinite(x); });
  return out;
}

/// Fraction of valid paths with max_{t_k <= T} |X_k - X_0| >= R.
inline double exit_probability(const PathEnsemble& e, double R, double T) {
  if (!(R >= 0.0)) throw DomainError("radius must be nonnegative");
  if (T > e.T * (1.0 + 1e-12)) throw DomainError("horizon exceeds the ensemble");
  const auto k_max = std::min(e.K, static_cast<std::size_t>(std::floor(T / e.h + 1e-9)));
  std::size_t exits = 0, n = 0;
  for (std::size_t p = 0; p < e.N; ++p) {
    if (!e.valid[p]) continue;
    ++n;
    const auto x0 = e.state(p, 0);
    for (std::size_t k = 0; k <= k_max; ++k) {
      const auto x = e.state(p, k);
      double r2 = 0.0;
      for (std::size_t i = 0; i < e.d; ++i) r2 += (x[i] - x0[i]) * (x[i] - x0[i]);
      if (std::sqrt(r2) >= R) {
        ++exits;
        break;
      }
    }
  }
  return n ? static_cast<double>(exits) / static_cast<double>(n) : 0.0;
}

struct ExitEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t N = 0;
};

/// Same statistic without storing paths.
inline ExitEstimate simulate_exit_probability(const std::vector<double>& x0, const Drift& drift, const SamplerSpec& spec,
                                              double R, double T, double h, std::size_t N) {
  if (!(R >= 0.0)) throw DomainError("radius must be nonnegative");
  detail::check_compatible(drift, spec, x0.size());
  const std::size_t K = step_count(T, h);
  const double h_eff = T / static_cast<double>(K);
  const IncrementSampler sampler(spec, h_eff);
  std::vector<unsigned char> exited(N, 0), ok(N, 1);
  parallel_chunks(N, kPathChunk, [&](std::size_t, std::size_t lo, std::size_t hi) {
    std::vector<double> inc, scratch;
    for (std::size_t p = lo; p < hi; ++p) {
      bool out = false;
      auto sobs = [&](std::size_t, double x) { out = out || std::abs(x - x0[0]) >= R; };
      auto vobs = [&](std::size_t, std::span<const double> x) {
        double r2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - x0[i]) * (x[i] - x0[i]);
        out = out || std::sqrt(r2) >= R;
      };
      ok[p] = detail::run_path(drift, sampler, spec.stream_id, p, x0, K, h_eff, sobs, vobs, inc, scratch);
      exited[p] = out;
    }
  });
  std::size_t n = 0, exits = 0;
  for (std::size_t p = 0; p < N; ++p)
    if (ok[p]) {
      ++n;
      exits += exited[p];
    }
  detail::check_invalid(N - n, N);
  ExitEstimate est;
  est.N = n;
  est.probability = n ? static_cast<double>(exits) / static_cast<double>(n) : 0.0;
  est.std_error = binomial_std_error(est.probability, static_cast<double>(n));
  return est;
}

// ---------------------------------------------------------------------------
// Resolvent functional

struct ResolventEstimate {
  std::vector<double> x;
  double lambda = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  double tail_bias_bound = 0.0;
  std::size_t N = 0;
  double h = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

/// Per-path left-endpoint sums h sum_{k<K} e^{-lambda k h} f(x_i + Y_k) for every start
/// point x_i, where Y is the path started at `base`. With b = 0 one path serves all points.
inline std::vector<std::vector<double>> resolvent_path_sums(const std::vector<std::vector<double>>& offsets,
                                                            const std::vector<double>& base, double lambda,
                                                            const TestFunction& f, const Drift& drift,
                                                            const IncrementSampler& sampler, std::uint64_t stream_id,
                                                            std::size_t K, double h, std::size_t N, std::size_t& invalid_total) {
  const std::size_t npts = offsets.size();
  std::vector<double> weight(K);
  for (std::size_t k = 0; k < K; ++k) weight[k] = h * std::exp(-lambda * static_cast<double>(k) * h);
  std::vector<std::vector<double>> sums(npts, std::vector<double>(N, 0.0));
  std::vector<std::size_t> invalid(chunk_count(N, kPathChunk), 0);
  parallel_chunks(N, kPathChunk, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    std::vector<double> inc, scratch, acc(npts), y(base.size());
    for (std::size_t p = lo; p < hi; ++p) {
      std::fill(acc.begin(), acc.end(), 0.0);
      auto sobs = [&](std::size_t k, double x) {
        if (k >= K) return;
        for (std::size_t i = 0; i < npts; ++i) acc[i] += weight[k] * f.scalar(x + offsets[i][0]);
      };
      auto vobs = [&](std::size_t k, std::span<const double> x) {
        if (k >= K) return;
        for (std::size_t i = 0; i < npts; ++i) {
          for (std::size_t j = 0; j < y.size(); ++j) y[j] = x[j] + offsets[i][j];
          acc[i] += weight[k] * f(y);
        }
      };
      bool finite = run_path(drift, sampler, stream_id, p, base, K, h, sobs, vobs, inc, scratch);
      for (double a : acc) finite = finite && std::isfinite(a);
      if (!finite) ++invalid[c];
      for (std::size_t i = 0; i < npts; ++i) sums[i][p] = finite ? acc[i] : std::numeric_limits<double>::quiet_NaN();
    }
  });
  invalid_total = 0;
  for (std::size_t v : invalid) invalid_total += v;
  return sums;
}

inline ResolventEstimate summarize(const std::vector<double>& x, double lambda, std::vector<double> sums, double T_eff,
                                   const TestFunction& f, std::size_t N, double h, std::uint64_t seed) {
  std::erase_if(sums, [](double v) { return !std::isfinite(v); });
  const auto mw = batch_mean(sums);
  ResolventEstimate r;
  r.x = x;
  r.lambda = lambda;
  r.value = mw.mean;
  r.std_error = mw.std_error;
  r.tail_bias_bound = std::exp(-lambda * T_eff) * f.sup() / lambda;
  r.N = N;
  r.h = h;
  r.seed = seed;
  return r;
}

}  // namespace detail

/// value = (1/N) sum_paths h sum_{k<K} e^{-lambda t_k} f(X_{t_k}), K = ceil(T/h), on [0, K h].
/// std_error comes from 40 contiguous batches of paths.
inline ResolventEstimate mc_resolvent(const std::vector<double>& x, double lambda, const TestFunction& f,
                                      const Drift& drift, const SamplerSpec& spec, const TruncationParams& trunc,
                                      double h, std::size_t N) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (!(h > 0.0)) throw DomainError("h must be positive");
  if (N < 1) throw DomainError("need at least one path");
  detail::check_compatible(drift, spec, x.size());
  const auto K = static_cast<std::size_t>(std::max(1.0, std::ceil(trunc.T / h - 1e-12)));
  const double T_eff = static_cast<double>(K) * h;
  if (f.is_zero()) return detail::summarize(x, lambda, std::vector<double>(N, 0.0), T_eff, f, N, h, spec.seed);
  const IncrementSampler sampler(spec, h);
  std::size_t invalid = 0;
  auto sums = detail::resolvent_path_sums({std::vector<double>(x.size(), 0.0)}, x, lambda, f, drift, sampler,
                                          spec.stream_id, K, h, N, invalid);
  detail::check_invalid(invalid, N);
  return detail::summarize(x, lambda, std::move(sums[0]), T_eff, f, N, h, spec.seed);
}

/// mc_resolvent at several start points. With b = 0 one noise path serves every
/// point (X = x + Z exactly); otherwise point i uses stream_id + i.
inline std::vector<ResolventEstimate> mc_resolvent_points(const std::vector<std::vector<double>>& xs, double lambda,
                                                          const TestFunction& f, const Drift& drift,
                                                          const SamplerSpec& spec, const TruncationParams& trunc,
                                                          double h, std::size_t N) {
  if (!drift.is_zero()) {
    std::vector<ResolventEstimate> out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      SamplerSpec s = spec;
      s.stream_id = spec.stream_id + i;
      out.push_back(mc_resolvent(xs[i], lambda, f, drift, s, trunc, h, N));
    }
    return out;
  }
  if (xs.empty()) return {};
  if (!(lambda > 0.0) || !(h > 0.0) || N < 1) throw DomainError("need lambda > 0, h > 0, N >= 1");
  detail::check_compatible(drift, spec, xs[0].size());
  const auto K = static_cast<std::size_t>(std::max(1.0, std::ceil(trunc.T / h - 1e-12)));
  const double T_eff = static_cast<double>(K) * h;
  const IncrementSampler sampler(spec, h);
  std::size_t invalid = 0;
  auto sums = detail::resolvent_path_sums(xs, std::vector<double>(xs[0].size(), 0.0), lambda, f, drift, sampler,
                                          spec.stream_id, K, h, N, invalid);
  detail::check_invalid(invalid, N);
  std::vector<ResolventEstimate> out;
  for (std::size_t i = 0; i < xs.size(); ++i)
    out.push_back(detail::summarize(xs[i], lambda, std::move(sums[i]), T_eff, f, N, h, spec.seed));
  return out;
}

// ---------------------------------------------------------------------------
// Non-uniqueness experiment

struct BifurcationRow {
  double epsilon = 0.0;
  double p_plus = 0.0;
  double p_minus = 0.0;
  double gap = 0.0;
  double std_error = 0.0;
};

struct BifurcationOptions {
  double noise_weight = 0.01;  // Levy density w |z|^{-1-alpha}
  std::uint64_t seed = 0;
};

/// gap(eps) = P(X_T > c | X_0 = +eps) - P(X_T > c | X_0 = -eps) under the drift
/// sign(x)(1 ^ |x|^beta). The two start points use independent streams
/// (2i and 2i+1 for the i-th epsilon).
inline std::vector<BifurcationRow> bifurcation_gap(double beta, double alpha, const std::vector<double>& epsilons,
                                                   double T, double h, std::size_t N, double c,
                                                   BifurcationOptions opts = {}) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("threshold must lie in (0,1)");
  for (double e : epsilons)
    if (!(e >= 0.0)) throw DomainError("epsilons must be nonnegative");
  const Drift b = tanaka_drift(beta);
  const SpectralMeasure mu = two_point_measure(alpha, opts.noise_weight);
  std::vector<BifurcationRow> rows;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    auto above = [&](double x0, std::uint64_t stream) {
      SamplerSpec spec{mu, SamplerMethod::ray_sum, 1.0, opts.seed, stream};
      const auto xs = terminal_values(x0, b, spec, T, h, N);
      std::size_t k = 0;
      for (double x : xs) k += x > c;
      return std::pair{static_cast<double>(k) / static_cast<double>(xs.size()), static_cast<double>(xs.size())};
    };
    const auto [pp, np] = above(epsilons[i], 2 * i);
    const auto [pm, nm] = above(-epsilons[i], 2 * i + 1);
    BifurcationRow row;
    row.epsilon = epsilons[i];
    row.p_plus = pp;
    row.p_minus = pm;
    row.gap = pp - pm;
    row.std_error = std::hypot(binomial_std_error(pp, np), binomial_std_error(pm, nm));
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output formats

/// "PATHENS1", then N, K+1, d as little-endian uint64, then states row-major float64.
inline void write_ensemble(const std::string& path, const PathEnsemble& e) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.write("PATHENS1", 8);
  write_u64(os, e.N);
  write_u64(os, e.K + 1);
  write_u64(os, e.d);
  for (double x : e.states) write_f64(os, x);
}

/// Reads the states written by write_ensemble; returns (N, K+1, d, states).
struct RawEnsemble {
  std::uint64_t N = 0, steps = 0, d = 0;
  std::vector<double> states;
};

inline RawEnsemble read_ensemble(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != "PATHENS1") throw std::runtime_error("not a path ensemble file");
  RawEnsemble r;
  r.N = read_u64(is);
  r.steps = read_u64(is);
  r.d = read_u64(is);
  r.states.resize(r.N * r.steps * r.d);
  for (double& x : r.states) x = read_f64(is);
  return r;
}

inline const char* kEstimateCsvHeader = "x,lambda,value,std_error,tail_bias,N,h,seed";

inline std::string csv_row(const ResolventEstimate& r) {
  std::string x;
  for (std::size_t i = 0; i < r.x.size(); ++i) x += (i ? " " : "") + format_double(r.x[i]);
  return x + "," + format_double(r.lambda) + "," + format_double(r.value) + "," + format_double(r.std_error) + "," +
         format_double(r.tail_bias_bound) + "," + std::to_string(r.N) + "," + format_double(r.h) + "," +
         std::to_string(r.seed);
}

}  // namespace stablesde
