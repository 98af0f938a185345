#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stablesde/quadrature.hpp"

using namespace stablesde;

TEST(TanhSinh, PolynomialAndSingularEndpoint) {
  EXPECT_NEAR(tanh_sinh([](double x) { return x * x; }, 0.0, 3.0), 9.0, 1e-13);
  EXPECT_NEAR(tanh_sinh([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0), 2.0, 1e-9);
  EXPECT_NEAR(tanh_sinh([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), 2.0, 1e-13);
}

TEST(SymbolConstant, FrozenValues) {
  // K(1/2) = sqrt(2 pi).
  EXPECT_NEAR(stable_symbol_constant(0.5), 2.5066282746310005, 1e-15);
  EXPECT_NEAR(stable_symbol_constant(0.3), 3.8552525671549204, 1e-14);
  EXPECT_NEAR(stable_symbol_constant(0.7), 1.9402055710365992, 1e-14);
}

TEST(SymbolConstant, ClosedFormMatchesQuadrature) {
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
    const double closed = stable_symbol_constant(a);
    EXPECT_NEAR(stable_symbol_constant_quadrature(a), closed, 1e-12 * closed) << "alpha=" << a;
    EXPECT_DOUBLE_EQ(checked_stable_symbol_constant(a), closed);
  }
}

TEST(SphereArea, LowDimensions) {
  EXPECT_DOUBLE_EQ(unit_sphere_area(0), 2.0);
  EXPECT_NEAR(unit_sphere_area(1), 2.0 * std::numbers::pi, 1e-14);
  EXPECT_NEAR(unit_sphere_area(2), 4.0 * std::numbers::pi, 1e-13);
}
