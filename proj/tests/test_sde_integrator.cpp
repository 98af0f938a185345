#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <vector>

#include "stablesde/sde_integrator.hpp"
#include "stablesde/stats.hpp"

using namespace stablesde;

namespace {

std::string temp_file(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST(Truncation, BaselineFromDirectFormulas) {
  const auto p = select_truncation(0.01, 1.0, 1.0, 1.0, two_point_measure(0.5));
  // |log(0.0025)| = 5.99; the first 1.1-power above it is 1.1^19.
  EXPECT_NEAR(p.T_bound, 5.991464547107982, 1e-13);
  EXPECT_NEAR(p.T, 6.115909044841464, 1e-13);
  EXPECT_NEAR(p.m / 95755119.21862051, 1.0, 1e-12);
  EXPECT_NEAR(p.R / 132838362.16178185, 1.0, 1e-12);

  EXPECT_GT(p.T, p.T_bound);
  EXPECT_LE(p.T / 1.1, p.T_bound);
  EXPECT_LE(p.T * two_point_measure(0.5).tail_mass(p.m), 0.01 / 4.0 * (1 + 1e-12));
  EXPECT_GT(p.R, p.R_bound);
  EXPECT_NEAR(exit_probability_bound(p, 1.0), 0.0075, 1e-16);
  const auto j = to_json(p);
  EXPECT_EQ(j.at("T").get<double>(), p.T);
  EXPECT_EQ(j.at("g_profile").at("grad_norm").get<double>(), 15.0 / 8.0);
}

TEST(Truncation, QuinticBumpProfile) {
  EXPECT_EQ(quintic_bump(0.0), 0.0);
  EXPECT_EQ(quintic_bump(1.0), 1.0);
  EXPECT_EQ(quintic_bump(3.0), 1.0);
  double grad = 0.0, hess = 0.0;
  const double dr = 1e-4;
  for (double r = dr; r < 1.0; r += dr) {
    grad = std::max(grad, std::abs(quintic_bump(r + dr) - quintic_bump(r - dr)) / (2 * dr));
    hess = std::max(hess, std::abs(quintic_bump(r + dr) - 2 * quintic_bump(r) + quintic_bump(r - dr)) / (dr * dr));
  }
  const BumpProfile g;
  EXPECT_NEAR(grad, g.grad_norm, 1e-6);
  EXPECT_NEAR(hess, g.hess_norm, 1e-5);
}

TEST(Truncation, LargerBumpNormsNeverShrinkBounds) {
  const auto mu = two_point_measure(0.5);
  const auto base = select_truncation(0.01, 1.0, 1.0, 1.0, mu);
  const auto twice = select_truncation(0.01, 1.0, 1.0, 1.0, mu, BumpProfile{2.0, 2 * 15.0 / 8.0, 2 * 10.0 / std::sqrt(3.0)});
  EXPECT_EQ(twice.T, base.T);
  EXPECT_GT(twice.m, base.m);
  EXPECT_GT(twice.R, base.R);
}

TEST(Truncation, TimeFloorWhenBoundVanishes) {
  // lambda eps = 4 |f|: the logarithm is zero.
  const auto p = select_truncation(4.0, 1.0, 1.0, 0.0, two_point_measure(0.5), {}, 1e-3);
  EXPECT_EQ(p.T_bound, 0.0);
  EXPECT_EQ(p.T, 1e-3);
  EXPECT_THROW(select_truncation(0.0, 1.0, 1.0, 1.0, two_point_measure(0.5)), DomainError);
}

TEST(EulerPaths, DeterministicLimit) {
  const auto zero = SpectralMeasure::discrete(1, 0.5, {});
  const auto e = euler_paths({{0.25}}, constant_drift({-0.7}), default_sampler(zero), 2.0, 1e-3, 3);
  EXPECT_EQ(e.K, 2000u);
  EXPECT_NEAR(e.K * e.h, 2.0, 1e-12);
  for (std::size_t p = 0; p < 3; ++p) {
    EXPECT_EQ(e.state(p, 0)[0], 0.25);
    EXPECT_NEAR(e.state(p, e.K)[0], 0.25 - 0.7 * 2.0, 1e-12);
  }
  const auto z2 = SpectralMeasure::discrete(2, 0.5, {});
  const auto e2 = euler_paths({{1.0, 2.0}}, zero_drift(2), default_sampler(z2), 1.0, 0.1, 1);
  EXPECT_EQ(e2.state(0, e2.K)[1], 2.0);
}

TEST(EulerPaths, OneStepIsOneIncrement) {
  const std::size_t n = 100000;
  const auto mu = two_point_measure(0.5);
  const double h = 0.01;
  auto spec = default_sampler(mu, 5, 0);
  std::vector<double> a = terminal_values(0.0, zero_drift(), spec, h, h, n);
  spec.stream_id = 99;
  auto unit = sample_increments(spec, 1.0, n);
  for (double& x : unit) x *= std::pow(h, 2.0);
  EXPECT_GT(ks_two_sample(a, unit).p_value, 0.01);
}

TEST(EulerPaths, InitialPointsCycleAndMetadata) {
  const auto mu = two_point_measure(0.5);
  const auto e = euler_paths({{-1.0}, {1.0}}, tanaka_drift(0.5), default_sampler(mu, 3, 7), 0.5, 0.1, 5);
  EXPECT_EQ(e.state(0, 0)[0], -1.0);
  EXPECT_EQ(e.state(1, 0)[0], 1.0);
  EXPECT_EQ(e.state(4, 0)[0], -1.0);
  EXPECT_EQ(e.drift_name, "tanaka");
  EXPECT_EQ(e.sampler.stream_id, 7u);
  EXPECT_EQ(e.invalid_count, 0u);
  EXPECT_THROW(euler_paths({{0.0, 0.0}}, tanaka_drift(0.5), default_sampler(mu), 1.0, 0.1, 1), DomainError);
  EXPECT_THROW(euler_paths({{0.0}}, tanaka_drift(0.5), default_sampler(mu), 0.05, 0.1, 1), DomainError);
}

TEST(EulerPaths, OverflowAborts) {
  // Increments of scale (h w C)^{1/alpha} overflow; every path is flagged.
  const auto mu = two_point_measure(0.3, 1e300);
  EXPECT_THROW(euler_paths({{0.0}}, zero_drift(), default_sampler(mu), 1.0, 0.1, 10), SimulationError);
  EXPECT_THROW(terminal_values(0.0, zero_drift(), default_sampler(mu), 1.0, 0.1, 10), SimulationError);
}

TEST(EulerPaths, TanakaTerminalLawIsSymmetric) {
  const auto mu = two_point_measure(0.5);
  const auto a = terminal_values(0.0, tanaka_drift(0.25), default_sampler(mu, 8, 0), 1.0, 1e-4, 3000);
  auto b = terminal_values(0.0, tanaka_drift(0.25), default_sampler(mu, 8, 1), 1.0, 1e-4, 3000);
  for (double& x : b) x = -x;
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}

TEST(EulerPaths, ThreadCountDoesNotChangeResults) {
  const auto spec = default_sampler(two_point_measure(0.5), 12, 0);
  ::setenv("STABLESDE_THREADS", "1", 1);
  const auto one = terminal_values(0.1, tanaka_drift(0.25), spec, 1.0, 1e-2, 3000);
  ::setenv("STABLESDE_THREADS", "4", 1);
  const auto four = terminal_values(0.1, tanaka_drift(0.25), spec, 1.0, 1e-2, 3000);
  ::unsetenv("STABLESDE_THREADS");
  EXPECT_EQ(one, four);
}

TEST(ExitProbability, EdgeCasesAndStreamingAgreement) {
  const auto spec = default_sampler(two_point_measure(0.5), 4, 2);
  const auto e = euler_paths({{0.3}}, example1_drift(0.5, 1.0), spec, 1.0, 0.01, 2000);
  EXPECT_EQ(exit_probability(e, 0.0, 1.0), 1.0);
  double max_disp = 0.0;
  for (std::size_t p = 0; p < e.N; ++p)
    for (std::size_t k = 0; k <= e.K; ++k) max_disp = std::max(max_disp, std::abs(e.state(p, k)[0] - 0.3));
  EXPECT_EQ(exit_probability(e, std::nextafter(max_disp, 1e300), 1.0), 0.0);
  EXPECT_GT(exit_probability(e, max_disp, 1.0), 0.0);
  EXPECT_LE(exit_probability(e, 1.0, 0.5), exit_probability(e, 1.0, 1.0));
  EXPECT_THROW(exit_probability(e, 1.0, 2.0), DomainError);

  for (double R : {0.5, 2.0, 10.0}) {
    const auto s = simulate_exit_probability({0.3}, example1_drift(0.5, 1.0), spec, R, 1.0, 0.01, 2000);
    EXPECT_EQ(s.probability, exit_probability(e, R, 1.0)) << R;
    EXPECT_EQ(s.N, 2000u);
    EXPECT_DOUBLE_EQ(s.std_error, binomial_std_error(s.probability, 2000.0));
  }
}

TEST(Resolvent, ZeroTestFunction) {
  const auto trunc = select_truncation(0.01, 1.0, 1.0, 1.0, two_point_measure(0.5));
  const auto r = mc_resolvent({0.0}, 1.0, smooth_bump(1.0, 0.0), tanaka_drift(0.25),
                              default_sampler(two_point_measure(0.5)), trunc, 1e-2, 100);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(Resolvent, ReproducibleAndShareable) {
  const auto mu = SpectralMeasure::isotropic(1, 0.5, 1.0);
  const auto f = smooth_bump();
  const auto trunc = select_truncation(0.05, 1.0, f.sup(), 0.0, mu);
  const auto spec = default_sampler(mu, 77, 0);
  const auto a = mc_resolvent({0.2}, 1.0, f, zero_drift(), spec, trunc, 1e-2, 2000);
  const auto b = mc_resolvent({0.2}, 1.0, f, zero_drift(), spec, trunc, 1e-2, 2000);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_GT(a.value, 0.0);
  EXPECT_GT(a.std_error, 0.0);
  // Shared noise paths give the same estimate at each point as a dedicated run.
  const auto pts = mc_resolvent_points({{-0.4}, {0.2}}, 1.0, f, zero_drift(), spec, trunc, 1e-2, 2000);
  EXPECT_NEAR(pts[1].value, a.value, 1e-14);
  const double K = std::ceil(trunc.T / 1e-2 - 1e-12);
  EXPECT_DOUBLE_EQ(a.tail_bias_bound, std::exp(-K * 1e-2));
  EXPECT_EQ(csv_row(a).substr(0, 4), "0.2,");
  EXPECT_EQ(std::string(kEstimateCsvHeader), "x,lambda,value,std_error,tail_bias,N,h,seed");
}

TEST(Resolvent, StepRefinementIsConsistent) {
  const auto mu = two_point_measure(0.5, 0.5);
  const auto f = smooth_bump();
  const auto trunc = select_truncation(0.05, 1.0, 1.0, 1.0, mu);
  const auto spec = default_sampler(mu, 5, 0);
  const auto coarse = mc_resolvent({0.3}, 1.0, f, tanaka_drift(0.25), spec, trunc, 2e-3, 3000);
  const auto fine = mc_resolvent({0.3}, 1.0, f, tanaka_drift(0.25), spec, trunc, 1e-3, 3000);
  EXPECT_LT(std::abs(coarse.value - fine.value), 3.0 * std::hypot(coarse.std_error, fine.std_error) + 2e-3);
}

TEST(Resolvent, FarStartIsNegligible) {
  const auto mu = two_point_measure(0.5);
  const auto f = smooth_bump();
  const auto trunc = select_truncation(0.01, 1.0, 1.0, 1.0, mu);
  const double x = f.support_radius() + trunc.R + 1.0;
  const auto r = mc_resolvent({x}, 1.0, f, example1_drift(0.5, 1.0), default_sampler(mu, 1), trunc, 1e-2, 500);
  EXPECT_LT(std::abs(r.value), trunc.epsilon + 3.0 * r.std_error);
}

TEST(Bifurcation, EqualStartsGiveNoGap) {
  const auto rows = bifurcation_gap(0.25, 0.5, {0.0}, 1.0, 1e-3, 20000, 0.5);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LT(std::abs(rows[0].gap), 3.0 * rows[0].std_error);
  EXPECT_GT(rows[0].p_plus, 0.0);
  EXPECT_THROW(bifurcation_gap(0.25, 0.5, {0.1}, 1.0, 1e-3, 10, 1.5), DomainError);
}

TEST(Bifurcation, LargeStartSeparates) {
  const auto rows = bifurcation_gap(0.25, 0.5, {0.1}, 1.0, 1e-3, 5000, 0.5);
  EXPECT_GT(rows[0].gap, 0.5);
  EXPECT_NEAR(rows[0].gap, rows[0].p_plus - rows[0].p_minus, 0.0);
}

TEST(EnsembleFile, RoundTrip) {
  const auto e = euler_paths({{0.0, 1.0}}, zero_drift(2), default_sampler(lattice_of_rays_measure(0.5, 1.0), 2), 0.3, 0.1, 4);
  const auto path = temp_file("stablesde_ens_test.bin");
  write_ensemble(path, e);
  const auto r = read_ensemble(path);
  EXPECT_EQ(r.N, 4u);
  EXPECT_EQ(r.steps, 4u);
  EXPECT_EQ(r.d, 2u);
  EXPECT_EQ(r.states, e.states);
  EXPECT_EQ(std::filesystem::file_size(path), 8u + 24u + 8u * e.states.size());
  std::remove(path.c_str());
}
