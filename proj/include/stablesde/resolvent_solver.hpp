#pragma once

// Monotone finite-difference scheme for lambda u - L u - b u' = f on a centred 1D
// grid with u = 0 outside, a spectral (b = 0) reference solution, and discrete
// comparison diagnostics.
//
// Nonlocal part at node x_j:
//   |z| >= D : int (u(x_j + z) - u(x_j)) mu(dz) with u(x_j + z) replaced by its
//              piecewise-linear interpolant, giving hat weights W_k on u_{j+k} - u_j;
//   |z| <  D : (1/2) int_{|z|<D} z^2 mu(dz) times the central second difference.
// Every off-diagonal entry is <= 0 and each row is dominated by at least lambda,
// so the matrix is an M-matrix and the scheme satisfies a discrete comparison principle.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <nlohmann/json.hpp>

#include "stablesde/drift.hpp"
#include "stablesde/errors.hpp"
#include "stablesde/levy_measure.hpp"
#include "stablesde/parallel.hpp"

namespace stablesde {

struct GridSpec {
  double half_width = 0.0;  // X
  double step = 0.0;        // Delta
  std::size_t nodes = 0;    // J, odd

  double x(std::size_t j) const { return -half_width + static_cast<double>(j) * step; }
  std::vector<double> points() const {
    std::vector<double> p(nodes);
    for (std::size_t j = 0; j < nodes; ++j) p[j] = x(j);
    return p;
  }
  /// Index of the node nearest to x.
  std::size_t index_of(double xv) const {
    const double t = std::round((xv + half_width) / step);
    return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(nodes - 1)));
  }
  bool operator==(const GridSpec& o) const {
    return nodes == o.nodes && step == o.step && half_width == o.half_width;
  }
};

/// Grid with step `step` and half width rounded to a whole number of steps.
inline GridSpec make_grid(double half_width, double step) {
  if (!(half_width > 0.0 && step > 0.0)) throw DomainError("grid half width and step must be positive");
  const auto half = static_cast<std::size_t>(std::llround(half_width / step));
  if (half < 1) throw DomainError("grid needs at least three nodes");
  return {step * static_cast<double>(half), step, 2 * half + 1};
}

struct OperatorDiagnostics {
  double max_off_diagonal = 0.0;     // must be <= 0
  double min_dominance_margin = 0.0; // diag - sum |off|, must be >= lambda
  double min_row_sum = 0.0;
  bool m_matrix = false;
};

struct AssembledOperator {
  Eigen::MatrixXd matrix;
  OperatorDiagnostics diagnostics;
  double lambda = 0.0;
};

struct GridSolution {
  GridSpec grid;
  std::vector<double> u;
  double residual_norm = 0.0;
  OperatorDiagnostics matrix_diagnostics;
  double lambda = 0.0;
};

namespace detail {

/// Radial weights of a one-dimensional measure: mu(dz) = w_plus z^{-1-alpha} dz on z > 0
/// and w_minus |z|^{-1-alpha} dz on z < 0.
inline std::array<double, 2> one_sided_weights(const SpectralMeasure& m) {
  if (m.dimension() != 1) throw UnsupportedDimension("the grid solver is one-dimensional");
  if (m.kind() == MeasureKind::isotropic) return {m.isotropic_constant(), m.isotropic_constant()};
  std::array<double, 2> w{0.0, 0.0};
  for (const auto& a : m.atoms()) w[a.direction[0] > 0.0 ? 0 : 1] += a.weight;
  return w;
}

/// int phi_k(z) z^{-1-alpha} dz over z >= D for the hat phi_k centred at k D, k >= 1.
inline std::vector<double> hat_integrals(double alpha, double D, std::size_t kmax) {
  // 8-point Gauss-Legendre on [-1, 1].
  static constexpr std::array<double, 8> node{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                              -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                              0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, 8> weight{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                0.2223810344533745, 0.1012285362903763};
  auto cell = [&](double a, double b, auto&& phi) {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      const double z = c + r * node[i];
      s += weight[i] * phi(z) * std::pow(z, -1.0 - alpha);
    }
    return r * s;
  };
  std::vector<double> w(kmax + 1, 0.0);
  if (kmax >= 1) {
    // Falling half hat on [D, 2D]: int (2 - z/D) z^{-1-alpha} dz in closed form.
    const double a = 1.0 - alpha;
    w[1] = std::pow(D, -alpha) * (2.0 * (1.0 - std::pow(2.0, -alpha)) / alpha - (std::pow(2.0, a) - 1.0) / a);
  }
  for (std::size_t k = 2; k <= kmax; ++k) {
    const double kd = static_cast<double>(k);
    w[k] = cell((kd - 1.0) * D, kd * D, [&](double z) { return z / D - kd + 1.0; }) +
           cell(kd * D, (kd + 1.0) * D, [&](double z) { return kd + 1.0 - z / D; });
  }
  return w;
}

}  // namespace detail

/// lambda I - (nonlocal operator + upwind drift) on the grid, with u = 0 outside.
/// Throws std::logic_error if the M-matrix certificate fails.
inline AssembledOperator assemble_operator(const GridSpec& grid, const SpectralMeasure& measure, const Drift& drift,
                                           double lambda) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  if (drift.dimension != 1) throw UnsupportedDimension("the grid solver is one-dimensional");
  const auto [wp, wm] = detail::one_sided_weights(measure);
  const std::size_t J = grid.nodes;
  const double D = grid.step;
  const double alpha = measure.alpha();
  const auto hats = detail::hat_integrals(alpha, D, J - 1);
  const double near = 0.5 * (wp + wm) * std::pow(D, 2.0 - alpha) / (2.0 - alpha) / (D * D);
  const double far_mass = (wp + wm) * std::pow(D, -alpha) / alpha;

  AssembledOperator op;
  op.lambda = lambda;
  op.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J));
  auto& A = op.matrix;
  std::vector<double> bvals(J);
  for (std::size_t j = 0; j < J; ++j) bvals[j] = drift.scalar(grid.x(j));

  parallel_chunks(J, 256, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      for (std::size_t c = 0; c < J; ++c) {
        if (c == j) continue;
        const std::size_t k = c > j ? c - j : j - c;
        A(r, static_cast<Eigen::Index>(c)) = -(c > j ? wp : wm) * hats[k];
      }
      if (j + 1 < J) A(r, r + 1) -= near;
      if (j >= 1) A(r, r - 1) -= near;
      const double b = bvals[j];
      const double upwind = std::abs(b) / D;
      if (b > 0.0 && j + 1 < J) A(r, r + 1) -= upwind;
      if (b < 0.0 && j >= 1) A(r, r - 1) -= upwind;
      A(r, r) = lambda + 2.0 * near + far_mass + upwind;
    }
  });

  OperatorDiagnostics& dg = op.diagnostics;
  dg.max_off_diagonal = -std::numeric_limits<double>::infinity();
  dg.min_dominance_margin = std::numeric_limits<double>::infinity();
  dg.min_row_sum = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    double off_abs = 0.0, row = 0.0;
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      row += A(r, c);
      if (c == r) continue;
      dg.max_off_diagonal = std::max(dg.max_off_diagonal, A(r, c));
      off_abs += std::abs(A(r, c));
    }
    dg.min_dominance_margin = std::min(dg.min_dominance_margin, A(r, r) - off_abs);
    dg.min_row_sum = std::min(dg.min_row_sum, row);
  }
  if (J == 1) dg.max_off_diagonal = 0.0;
  dg.m_matrix = dg.max_off_diagonal <= 0.0 && dg.min_dominance_margin >= lambda * (1.0 - 1e-12);
  if (!dg.m_matrix) throw std::logic_error("assembled operator is not an M-matrix");
  return op;
}

/// Solves the assembled system by LU with one step of iterative refinement.
/// Throws SolverError if the residual exceeds 1e-10 |f|_inf.
inline GridSolution solve_resolvent(const GridSpec& grid, const SpectralMeasure& measure, const Drift& drift,
                                    double lambda, const std::vector<double>& f) {
  if (f.size() != grid.nodes) throw DomainError("right-hand side has wrong length");
  const auto op = assemble_operator(grid, measure, drift, lambda);
  const Eigen::Map<const Eigen::VectorXd> rhs(f.data(), static_cast<Eigen::Index>(f.size()));
  GridSolution sol;
  sol.grid = grid;
  sol.lambda = lambda;
  sol.matrix_diagnostics = op.diagnostics;
  const double fnorm = rhs.lpNorm<Eigen::Infinity>();
  if (fnorm == 0.0) {
    sol.u.assign(grid.nodes, 0.0);
    return sol;
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(op.matrix);
  Eigen::VectorXd u = lu.solve(rhs);
  u += lu.solve(rhs - op.matrix * u);
  sol.residual_norm = (op.matrix * u - rhs).lpNorm<Eigen::Infinity>();
  if (!std::isfinite(sol.residual_norm) || sol.residual_norm > 1e-10 * fnorm) {
    throw SolverError("resolvent solve residual " + std::to_string(sol.residual_norm) +
                      " exceeds tolerance; reciprocal condition estimate " + std::to_string(lu.rcond()));
  }
  sol.u.assign(u.data(), u.data() + u.size());
  return sol;
}

template <class F>
std::vector<double> sample_on_grid(const GridSpec& grid, F&& f) {
  std::vector<double> v(grid.nodes);
  for (std::size_t j = 0; j < grid.nodes; ++j) v[j] = f(grid.x(j));
  return v;
}

// ---------------------------------------------------------------------------
// Spectral reference solution (b = 0)

/// Grid with step `step`, a power-of-three node count and half width at least
/// `min_half_width`. Odd sizes with large prime factors make the FFT quadratic.
inline GridSpec periodic_oracle_grid(double min_half_width, double step) {
  if (!(min_half_width > 0.0 && step > 0.0)) throw DomainError("grid half width and step must be positive");
  std::size_t J = 3;
  while (static_cast<double>(J - 1) * 0.5 * step < min_half_width) J *= 3;
  return {step * static_cast<double>((J - 1) / 2), step, J};
}

/// The periodic solution exceeds the whole-line one by the wrapped images,
/// about 2 w int f zeta(1+alpha) L^{-1-alpha} / lambda^2 for a period L and density w |z|^{-1-alpha}.
inline double periodic_wrap_estimate(double lambda, double alpha, double density_weight, double f_integral,
                                     double period) {
  double zeta = 0.0;
  for (int n = 1; n <= 100000; ++n) zeta += std::pow(n, -1.0 - alpha);
  zeta += std::pow(100000.5, -alpha) / alpha;
  return 2.0 * density_weight * std::abs(f_integral) * zeta * std::pow(period, -1.0 - alpha) / (lambda * lambda);
}

/// u_hat = f_hat / (lambda + s |xi|^alpha) on the periodic grid with spacing `step`.
inline std::vector<double> fft_oracle(double lambda, double alpha, double symbol_scale, const std::vector<double>& f,
                                      double step) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const std::size_t n = f.size();
  if (n == 0) return {};
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fh;
  fft.fwd(fh, f);
  const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(n) * step);
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    fh[k] /= lambda + symbol_scale * std::pow(std::abs(kk * dxi), alpha);
  }
  std::vector<double> u;
  fft.inv(u, fh);
  return u;
}

/// Relative defect of lambda |u|^2 + sum psi |u_hat|^2 = Re sum f_hat conj(u_hat) (frequency domain).
inline double plancherel_defect(double lambda, double alpha, double symbol_scale, const std::vector<double>& f,
                                const std::vector<double>& u, double step) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fh, uh;
  fft.fwd(fh, f);
  fft.fwd(uh, u);
  const std::size_t n = f.size();
  const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(n) * step);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    const double psi = symbol_scale * std::pow(std::abs(kk * dxi), alpha);
    lhs += (lambda + psi) * std::norm(uh[k]);
    rhs += (fh[k] * std::conj(uh[k])).real();
  }
  return std::abs(lhs - rhs) / std::max(std::abs(rhs), std::numeric_limits<double>::min());
}

// ---------------------------------------------------------------------------
// Comparison diagnostics

struct ComparisonResult {
  bool holds = false;
  double max_violation = 0.0;  // max_j (u1_j - u2_j), clipped at 0
};

/// u1 <= u2 + 1e-10 at every node.
inline ComparisonResult comparison_check(const GridSolution& s1, const GridSolution& s2) {
  if (!(s1.grid == s2.grid) || s1.u.size() != s2.u.size()) throw DomainError("solutions live on different grids");
  ComparisonResult r;
  for (std::size_t j = 0; j < s1.u.size(); ++j) r.max_violation = std::max(r.max_violation, s1.u[j] - s2.u[j]);
  r.holds = r.max_violation <= 1e-10;
  return r;
}

/// sup_{j,k} (u_j - v_k - L |x_j - x_k|^gamma) - max_j (u_j - v_j).
inline double doubling_gap(const GridSolution& u, const GridSolution& v, double L, double gamma) {
  if (!(u.grid == v.grid)) throw DomainError("solutions live on different grids");
  const std::size_t J = u.u.size();
  double diag = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j) diag = std::max(diag, u.u[j] - v.u[j]);
  std::vector<double> pw(J);
  for (std::size_t k = 0; k < J; ++k) pw[k] = L * std::pow(static_cast<double>(k) * u.grid.step, gamma);
  double sup = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < J; ++k) sup = std::max(sup, u.u[j] - v.u[k] - pw[j > k ? j - k : k - j]);
  return sup - diag;
}

/// Smallest L >= 0 with doubling_gap(u, v, L, gamma) <= 0.
inline double minimal_doubling_constant(const GridSolution& u, const GridSolution& v, double gamma) {
  if (!(u.grid == v.grid)) throw DomainError("solutions live on different grids");
  const std::size_t J = u.u.size();
  double M = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j) M = std::max(M, u.u[j] - v.u[j]);
  std::vector<double> pw(J, 1.0);
  for (std::size_t k = 1; k < J; ++k) pw[k] = std::pow(static_cast<double>(k) * u.grid.step, gamma);
  double L = 0.0;
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t k = 0; k < J; ++k)
      if (j != k) L = std::max(L, (u.u[j] - v.u[k] - M) / pw[j > k ? j - k : k - j]);
  return L;
}

inline nlohmann::json to_json(const OperatorDiagnostics& d) {
  return {{"max_off_diagonal", d.max_off_diagonal}, {"min_dominance_margin", d.min_dominance_margin},
          {"min_row_sum", d.min_row_sum}, {"m_matrix", d.m_matrix}};
}

}  // namespace stablesde
