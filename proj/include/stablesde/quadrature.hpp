#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace stablesde {

/// Tanh-sinh (double exponential) quadrature on [a, b]. Tolerates integrable
/// endpoint singularities; the integrand is never evaluated at a or b.
template <class F>
double tanh_sinh(F&& f, double a, double b, double rel_tol = 1e-14, int max_level = 10) {
  if (a == b) return 0.0;
  if (b < a) return -tanh_sinh(f, b, a, rel_tol, max_level);
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  constexpr double kHalfPi = 0.5 * std::numbers::pi;
  constexpr double kTMax = 3.5;

  // Sum of weighted samples at +-t for t > 0.
  auto pair = [&](double t) {
    const double s = kHalfPi * std::sinh(t);
    const double e2 = std::exp(2.0 * s);
    const double delta = 2.0 * r / (e2 + 1.0);  // distance to the nearest endpoint
    if (delta <= 0.0) return 0.0;
    const double ch = std::cosh(s);
    const double w = r * kHalfPi * std::cosh(t) / (ch * ch);
    if (!(w > 0.0)) return 0.0;
    return w * (f(b - delta) + f(a + delta));
  };

  double h = 1.0;
  double sum = r * kHalfPi * f(c);
  for (double t = h; t <= kTMax; t += h) sum += pair(t);
  double estimate = h * sum;
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    for (double t = h; t <= kTMax; t += 2.0 * h) sum += pair(t);
    const double next = h * sum;
    if (std::abs(next - estimate) <= rel_tol * std::abs(next)) return next;
    estimate = next;
  }
  return estimate;
}

/// Closed form of the one-sided symbol integral
///   K(alpha) = int_0^inf (1 - cos u) u^{-1-alpha} du = Gamma(2-alpha) cos(pi alpha/2) / (alpha (1-alpha)).
inline double stable_symbol_constant(double alpha) {
  return std::tgamma(2.0 - alpha) * std::cos(0.5 * std::numbers::pi * alpha) /
         (alpha * (1.0 - alpha));
}

/// The same integral evaluated numerically, independent of the closed form:
/// integration by parts gives (1/alpha) int_0^inf sin(u) u^{-alpha} du, an
/// alternating series over half periods whose partial sums are Euler-averaged.
inline double stable_symbol_constant_quadrature(double alpha) {
  constexpr double kPi = std::numbers::pi;
  auto g = [alpha](double u) { return std::sin(u) * std::pow(u, -alpha); };
  constexpr int kTerms = 240;
  constexpr int kAveraging = 40;
  std::vector<double> partial;
  partial.reserve(kTerms);
  double s = 0.0;
  for (int k = 0; k < kTerms; ++k) {
    s += tanh_sinh(g, k * kPi, (k + 1) * kPi);
    partial.push_back(s);
  }
  for (int round = 0; round < kAveraging; ++round) {
    for (std::size_t i = 0; i + 1 < partial.size(); ++i) partial[i] = 0.5 * (partial[i] + partial[i + 1]);
    partial.pop_back();
  }
  return partial.back() / alpha;
}

/// Closed form cross-checked against quadrature; a mismatch above 1e-10 is a
/// programming error and throws std::logic_error.
inline double checked_stable_symbol_constant(double alpha) {
  const double closed = stable_symbol_constant(alpha);
  const double numeric = stable_symbol_constant_quadrature(alpha);
  if (!(std::abs(closed - numeric) <= 1e-10 * std::abs(closed))) {
    throw std::logic_error("stable symbol constant mismatch between closed form and quadrature");
  }
  return closed;
}

/// Surface measure of S^{k} (the unit sphere in R^{k+1}); |S^0| = 2.
inline double unit_sphere_area(int k) {
  const double n = k + 1;
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace stablesde
