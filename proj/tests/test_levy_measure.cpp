#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "stablesde/levy_measure.hpp"
#include "stablesde/rng.hpp"

using namespace stablesde;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

double angle_to_nearest_diagonal(const std::vector<double>& v) {
  const double a = std::atan2(v[1], v[0]);
  double best = 10.0;
  for (int k = 0; k < 4; ++k) best = std::min(best, std::abs(std::remainder(a - (kPi / 4 + k * kPi / 2), 2 * kPi)));
  return best;
}

}  // namespace

TEST(SpectralMeasure, RejectsInvalidInput) {
  EXPECT_THROW(SpectralMeasure::discrete(1, 0.5, {{{1.0}, 1.0}}), DomainError);                 // not symmetric
  EXPECT_THROW(SpectralMeasure::discrete(1, 0.5, {{{1.0}, 1.0}, {{-1.0}, 2.0}}), DomainError);  // unequal weights
  EXPECT_THROW(SpectralMeasure::discrete(2, 0.5, {{{1.0, 1.0}, 1.0}, {{-1.0, -1.0}, 1.0}}), DomainError);
  EXPECT_THROW(SpectralMeasure::discrete(1, 0.5, {{{1.0}, 0.0}, {{-1.0}, 0.0}}), DomainError);
  EXPECT_THROW(two_point_measure(1.0), DomainError);
  EXPECT_THROW(two_point_measure(0.0), DomainError);
  EXPECT_THROW(SpectralMeasure::isotropic(2, 0.5, -1.0), DomainError);
}

TEST(SpectralMeasure, MassesAndMoments) {
  const auto m = two_point_measure(0.5, 1.5);
  EXPECT_DOUBLE_EQ(m.total_mass(), 3.0);
  EXPECT_NEAR(m.tail_mass(4.0), 3.0 * 0.5 / 0.5, 1e-15);
  EXPECT_NEAR(m.truncated_second_moment(1.0), 3.0 / 1.5, 1e-15);
  EXPECT_NEAR(SpectralMeasure::isotropic(2, 0.5, 1.0).total_mass(), 2 * kPi, 1e-14);
  EXPECT_TRUE(SpectralMeasure::discrete(2, 0.5, {}).is_zero());
}

TEST(SpectralMeasure, JsonRoundTrip) {
  const auto m = lattice_of_rays_measure(0.5, 0.3);
  const auto back = measure_from_json(to_json(m));
  ASSERT_EQ(back.atoms().size(), m.atoms().size());
  for (std::size_t i = 0; i < m.atoms().size(); ++i) {
    EXPECT_EQ(back.atoms()[i].direction, m.atoms()[i].direction);
    EXPECT_EQ(back.atoms()[i].weight, m.atoms()[i].weight);
  }
  const auto iso = measure_from_json(nlohmann::json{{"d", 2}, {"alpha", 0.5}, {"kind", "isotropic"}, {"c", 1.0}});
  EXPECT_EQ(iso.kind(), MeasureKind::isotropic);
  EXPECT_THROW(measure_from_json(nlohmann::json{{"kind", "bogus"}, {"alpha", 0.5}}), ConfigError);
  EXPECT_THROW(measure_from_json(nlohmann::json{{"alpha", 0.5}}), ConfigError);
}

TEST(SpectralMeasure, LatticeHasElevenLines) {
  // Lines at i * 0.3 for i * 0.3 < pi: i = 0..10.
  EXPECT_EQ(lattice_of_rays_measure(0.5, 0.3).atoms().size(), 22u);
}

TEST(Cone, Membership) {
  const Cone c({1.0, 0.0}, kPi / 2);
  EXPECT_TRUE(c.contains(std::vector<double>{1.0, 0.0}));
  EXPECT_FALSE(c.contains(std::vector<double>{-1.0, 0.0}));
  EXPECT_TRUE(c.contains(unit(kPi / 4 - 1e-9)));
  EXPECT_FALSE(c.contains(unit(kPi / 4 + 1e-9)));
  EXPECT_FALSE(c.contains(std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(Cone({2.0, 0.0}, 1.0), DomainError);
  EXPECT_THROW(Cone({1.0, 0.0}, kPi), DomainError);
}

TEST(ConeSecondMoment, TwoPointLine) {
  const auto m = two_point_measure(0.5);
  EXPECT_NEAR(cone_second_moment(m, Cone({1.0}, kPi / 2), 1.0), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(cone_second_moment(m, Cone({1.0}, kPi / 2), 0.0), DomainError);
  EXPECT_THROW(cone_second_moment(m, Cone({1.0}, kPi / 2), 1.5), DomainError);
}

TEST(ConeSecondMoment, IndependentCoordinatesMissDiagonalCone) {
  const auto m = independent_coordinates_measure(2, 0.5);
  const Cone c({std::sqrt(0.5), std::sqrt(0.5)}, kPi / 4);
  for (double delta : {1.0, 0.3, 1e-4}) EXPECT_EQ(cone_second_moment(m, c, delta), 0.0);
}

TEST(ConeSecondMoment, IsotropicPlanarClosedForm) {
  const auto m = SpectralMeasure::isotropic(2, 0.5, 1.0);
  const double expected = (2.0 * (kPi / 6.0) / 1.5) * std::pow(0.5, 1.5);
  EXPECT_NEAR(cone_second_moment(m, Cone({1.0, 0.0}, kPi / 3), 0.5), expected, 1e-13);
}

// Rejection-sampling oracle: I = int_{B_delta cap S} |y|^2 c |y|^{-2-alpha} dy.
TEST(ConeSecondMoment, IsotropicPlanarMonteCarloOracle) {
  const double alpha = 0.5, delta = 0.5, theta = kPi / 3;
  const auto m = SpectralMeasure::isotropic(2, alpha, 1.0);
  const Cone cone({1.0, 0.0}, theta);
  PhiloxStream rng(2024, 1);
  const long n = 10'000'000;
  double s = 0.0, s2 = 0.0;
  std::vector<double> y(2);
  for (long i = 0; i < n; ++i) {
    y[0] = delta * (2.0 * rng.uniform() - 1.0);
    y[1] = delta * (2.0 * rng.uniform() - 1.0);
    const double r = std::hypot(y[0], y[1]);
    double v = 0.0;
    if (r <= delta && cone.contains(y)) v = std::pow(r, -alpha);
    s += v;
    s2 += v * v;
  }
  const double area = 4.0 * delta * delta;
  const double mean = s / n;
  const double se = area * std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(cone_second_moment(m, cone, delta), area * mean, 5.0 * se);
}

TEST(ConeSecondMoment, ScalingAndMonotonicity) {
  const auto iso = SpectralMeasure::isotropic(3, 0.7, 2.0);
  const auto lat = lattice_of_rays_measure(0.3, 0.4);
  for (const auto* m : {&iso, &lat}) {
    const int d = m->dimension();
    std::vector<double> axis(d, 0.0);
    axis[0] = 1.0;
    const Cone c(axis, 1.0);
    const double one = cone_second_moment(*m, c, 1.0);
    for (double delta : {0.5, 1e-3, 1e-6})
      EXPECT_NEAR(cone_second_moment(*m, c, delta), std::pow(delta, 2.0 - m->alpha()) * one, 1e-10 * one);
    double prev = 0.0;
    for (double th = 0.1; th < 3.0; th += 0.2) {
      const double v = cone_second_moment(*m, Cone(axis, th), 0.25);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(CheckConeCondition, TwoPointLine) {
  const auto grid = default_delta_grid();
  const auto r = check_cone_condition(two_point_measure(0.5), 0.5, 8, grid);
  EXPECT_TRUE(r.satisfied);
  EXPECT_NEAR(r.kappa_hat, 2.0 / 3.0, 1e-14);
  ASSERT_EQ(r.per_direction_table.size(), 2u);
}

TEST(CheckConeCondition, Preconditions) {
  const auto m = two_point_measure(0.5);
  EXPECT_THROW(check_cone_condition(m, 0.5, 8, std::vector<double>{}), DomainError);
  EXPECT_THROW(check_cone_condition(m, 0.5, 4, default_delta_grid()), DomainError);
  EXPECT_THROW(check_cone_condition(m, 0.0, 8, default_delta_grid()), DomainError);
}

TEST(CheckConeCondition, LatticeOfRaysIsCovered) {
  const auto grid = default_delta_grid();
  for (double alpha : {0.3, 0.5, 0.7}) {
    const double upper = admissible_theta_interval(alpha).feasible_upper;
    ASSERT_LT(0.3, 2.0 * upper);
    const double theta = 0.5 * (0.15 + upper);
    const auto r = check_cone_condition(lattice_of_rays_measure(alpha, 0.3), theta, 720, grid);
    EXPECT_TRUE(r.satisfied) << alpha;
    EXPECT_GT(r.kappa_hat, 0.0);
  }
}

TEST(CheckConeCondition, IndependentCoordinatesFailNearDiagonal) {
  const auto grid = default_delta_grid();
  const auto m = independent_coordinates_measure(2, 0.5);
  for (double theta : {0.2, 0.5, 0.7, kPi / 4}) {
    const auto r = check_cone_condition(m, theta, 720, grid);
    EXPECT_FALSE(r.satisfied) << theta;
    EXPECT_EQ(r.kappa_hat, 0.0);
    EXPECT_LT(angle_to_nearest_diagonal(r.worst_direction), 2.0 * kPi / 180.0) << theta;
  }
}

// Above pi/4 every direction lies within theta of some coordinate axis, so
// the two-axis measure does satisfy the cone condition.
TEST(CheckConeCondition, IndependentCoordinatesCoveredForWideCones) {
  const auto r = check_cone_condition(independent_coordinates_measure(2, 0.5), 1.0, 720, default_delta_grid());
  EXPECT_TRUE(r.satisfied);
}

TEST(CheckConeCondition, InvariantUnderNegation) {
  const auto grid = default_delta_grid();
  const auto m = SpectralMeasure::discrete(2, 0.5, {{unit(0.2), 1.0}, {unit(0.2 + kPi), 1.0}, {unit(1.4), 2.0},
                                                    {unit(1.4 + kPi), 2.0}});
  const auto a = check_cone_condition(m, 1.3, 360, grid);
  const auto b = check_cone_condition(m.negated(), 1.3, 360, grid);
  EXPECT_EQ(a.satisfied, b.satisfied);
  EXPECT_DOUBLE_EQ(a.kappa_hat, b.kappa_hat);
}

TEST(CheckConeCondition, IsotropicIsCoveredInEveryDimension) {
  const auto grid = default_delta_grid();
  for (int d : {1, 2, 3}) {
    const auto m = SpectralMeasure::isotropic(d, 0.5, 1.0);
    const auto r = check_cone_condition(m, 0.4, 64, grid);
    EXPECT_TRUE(r.satisfied) << d;
    // Every cone carries the same cap mass, so kappa equals the cone moment ratio.
    std::vector<double> axis(d, 0.0);
    axis[0] = 1.0;
    EXPECT_NEAR(r.kappa_hat, cone_second_moment(m, Cone(axis, 0.4), 1.0), 1e-12);
  }
}

TEST(CheckConeCondition, ThreeDimensionalCoordinatesFail) {
  const auto r = check_cone_condition(independent_coordinates_measure(3, 0.5), 0.5, 400, default_delta_grid());
  EXPECT_FALSE(r.satisfied);
}

TEST(ThetaInterval, PrintedAndFeasible) {
  const auto iv = admissible_theta_interval(0.5);
  EXPECT_NEAR(iv.printed_lower, 0.61547970867038734, 1e-15);
  EXPECT_NEAR(iv.printed_upper, kPi / 4, 1e-15);
  EXPECT_FALSE(iv.printed_has_feasible_theta);
  EXPECT_EQ(iv.feasible_lower, 0.0);
  EXPECT_NEAR(iv.feasible_upper, 0.61547970867038734, 1e-15);
  EXPECT_NEAR(admissible_theta_interval(0.9).feasible_upper, 0.30627736916966958, 1e-15);
  EXPECT_LT(admissible_theta_interval(1.0 - 1e-9).printed_lower, 1e-4);
  EXPECT_THROW(admissible_theta_interval(1.0), DomainError);
  EXPECT_THROW(admissible_theta_interval(0.0), DomainError);
}

TEST(Epsilon0, RegressionBaseline) {
  const auto r = compute_epsilon0(2.0 / 3.0, 0.5, 0.2);
  ASSERT_TRUE(r.feasible);
  // Supremum sits on the edge gamma -> alpha.
  EXPECT_NEAR(r.epsilon0, 0.0023125644179600247, 1e-12);
  EXPECT_NEAR(r.gamma_star, 0.5, 1e-9);
  EXPECT_NEAR(r.eta_star, 0.0729095093716, 1e-8);
  // A 500 x 500 interior grid cannot exceed the refined optimum.
  EXPECT_GE(r.epsilon0, 0.0023077380509466646);
  EXPECT_GT(epsilon0_positivity_factor(r.gamma_star, r.eta_star, std::pow(std::cos(0.2), 2)), 0.0);
  EXPECT_LT(r.gamma_star, 2.0 - 1.0 / std::pow(std::cos(0.2), 2));
}

TEST(Epsilon0, StableUnderGridRefinement) {
  const double a = compute_epsilon0(2.0 / 3.0, 0.5, 0.2, {50, 50}).epsilon0;
  const double b = compute_epsilon0(2.0 / 3.0, 0.5, 0.2, {500, 500}).epsilon0;
  EXPECT_NEAR(a, b, 1e-6 * b);
}

TEST(Epsilon0, InfeasibleAndLinear) {
  const double edge = admissible_theta_interval(0.5).feasible_upper;
  for (double theta : {edge, edge + 1e-9, 0.7, 1.2}) {
    const auto r = compute_epsilon0(1.0, 0.5, theta);
    EXPECT_FALSE(r.feasible);
    EXPECT_EQ(r.epsilon0, 0.0);
  }
  const auto one = compute_epsilon0(0.4, 0.3, 0.3);
  const auto two = compute_epsilon0(0.8, 0.3, 0.3);
  EXPECT_NEAR(two.epsilon0, 2.0 * one.epsilon0, 1e-12 * two.epsilon0);
  EXPECT_EQ(two.gamma_star, one.gamma_star);
  EXPECT_THROW(compute_epsilon0(0.0, 0.5, 0.2), DomainError);
  EXPECT_THROW(compute_epsilon0(1.0, 1.5, 0.2), DomainError);
}

TEST(Epsilon0, NondecreasingInKappa) {
  double prev = 0.0;
  for (double k = 0.1; k < 3.0; k += 0.3) {
    const double e = compute_epsilon0(k, 0.5, 0.3).epsilon0;
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(LevySymbol, TwoPointLine) {
  const auto m = two_point_measure(0.5);
  EXPECT_EQ(levy_symbol(m, std::vector<double>{0.0}), 0.0);
  // 2 int_0^inf (1 - cos u) u^{-3/2} du = 2 sqrt(2 pi).
  EXPECT_NEAR(levy_symbol(m, std::vector<double>{1.0}), 5.013256549262001, 1e-14);
  EXPECT_NEAR(levy_symbol(m, std::vector<double>{-1.0}), 5.013256549262001, 1e-14);
}

TEST(LevySymbol, HomogeneousAndEven) {
  const auto m = lattice_of_rays_measure(0.7, 0.5);
  for (double a : {0.0, 0.7, 2.0}) {
    const std::vector<double> xi{std::cos(a), std::sin(a)}, xi2{2 * xi[0], 2 * xi[1]}, neg{-xi[0], -xi[1]};
    const double p = levy_symbol(m, xi);
    EXPECT_GT(p, 0.0);
    EXPECT_NEAR(levy_symbol(m, xi2), std::pow(2.0, 0.7) * p, 1e-13 * p);
    EXPECT_DOUBLE_EQ(levy_symbol(m, neg), p);
  }
}

TEST(LevySymbol, IsotropicSphereMoment) {
  // int_{S^{d-1}} |theta_1|^alpha = 2 pi^{(d-1)/2} Gamma((alpha+1)/2) / Gamma((d+alpha)/2).
  const double expected[] = {2.0, 4.79256093894236883, 8.37758040957278197};
  for (int d = 1; d <= 3; ++d) {
    EXPECT_NEAR(sphere_abs_moment(d, 0.5), expected[d - 1], 1e-12);
    const auto m = SpectralMeasure::isotropic(d, 0.5, 0.7);
    std::vector<double> xi(d, 0.0);
    xi[d - 1] = 3.0;
    EXPECT_NEAR(levy_symbol(m, xi), 0.7 * stable_symbol_constant(0.5) * expected[d - 1] * std::sqrt(3.0), 1e-11);
  }
}
