#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace stablesde {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test with the effective-size correction
/// lambda = (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) D.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

/// Linear-interpolated quantile of an unsorted sample.
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

inline double interquartile_range(const std::vector<double>& x) { return quantile(x, 0.75) - quantile(x, 0.25); }

struct MeanWithError {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean of per-sample values with the standard error of `batches` contiguous batch means.
/// Fewer than two samples give std_error = 0.
inline MeanWithError batch_mean(std::span<const double> values, std::size_t batches = 40) {
  MeanWithError r;
  const std::size_t n = values.size();
  if (n == 0) return r;
  double total = 0.0;
  for (double v : values) total += v;
  r.mean = total / static_cast<double>(n);
  if (n < 2) return r;
  const std::size_t b = std::min(batches, n);
  std::vector<double> means(b, 0.0);
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t lo = k * n / b, hi = (k + 1) * n / b;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    means[k] = s / static_cast<double>(hi - lo);
  }
  double var = 0.0;
  for (double m : means) var += (m - r.mean) * (m - r.mean);
  var /= static_cast<double>(b - 1);
  r.std_error = std::sqrt(var / static_cast<double>(b));
  return r;
}

/// Binomial standard error sqrt(p(1-p)/n).
inline double binomial_std_error(double p, double n) { return n > 0.0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / n) : 0.0; }

}  // namespace stablesde
