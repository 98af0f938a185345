#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stablesde/drift.hpp"
#include "stablesde/rng.hpp"

using namespace stablesde;

TEST(Example1Drift, Values) {
  const auto b = example1_drift(0.5, 1.0);
  // |x|^{1/2} / |log|x|| at |x| = e^{-4} is e^{-2}/4.
  EXPECT_NEAR(b.scalar(std::exp(-4.0)), std::exp(-2.0) / 4.0, 1e-15);
  EXPECT_NEAR(b.scalar(-std::exp(-4.0)), std::exp(-2.0) / 4.0, 1e-15);
  EXPECT_EQ(b.scalar(0.0), 0.0);
  EXPECT_EQ(b.scalar(1.0), 1.0);
  EXPECT_EQ(b.scalar(-1.0), 1.0);
  EXPECT_EQ(b.sup_bound, 1.0);
  EXPECT_EQ(b.params.at("value_at_unit_radius"), 1.0);
  EXPECT_EQ(example1_drift(0.5, 3.0).scalar(1.0), 3.0);
}

TEST(Example1Drift, PointsAlongFirstAxis) {
  const auto b = example1_drift(0.5, 2.0, 3);
  const std::vector<double> x{0.0, std::exp(-4.0), 0.0};
  const auto v = b(x);
  EXPECT_NEAR(v[0], 2.0 * std::exp(-2.0) / 4.0, 1e-15);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_EQ(v[2], 0.0);
}

TEST(TanakaDrift, Values) {
  const auto b = tanaka_drift(0.25);
  EXPECT_NEAR(b.scalar(0.5), 0.8408964152537145, 1e-15);
  EXPECT_EQ(b.scalar(-2.0), -1.0);
  EXPECT_EQ(b.scalar(0.0), 0.0);
  EXPECT_EQ(b.sup_bound, 1.0);
  EXPECT_EQ(b.params.at("beta"), 0.25);
  EXPECT_THROW(tanaka_drift(0.25, 2), UnsupportedDimension);
  EXPECT_THROW(tanaka_drift(1.5), DomainError);
}

TEST(TanakaDrift, FastPowersMatchPow) {
  for (double beta : {0.25, 0.5, 0.75, 0.4}) {
    const auto b = tanaka_drift(beta);
    for (double x : {1e-12, 1e-5, 0.01, 0.3, 0.999}) EXPECT_NEAR(b.scalar(x), std::pow(x, beta), 4e-16 * std::pow(x, beta) + 1e-300);
  }
}

TEST(Drifts, OddnessAndBoundedness) {
  PhiloxStream rng(5, 5);
  const auto t = tanaka_drift(0.25);
  const std::vector<Drift> all{t, tanaka_drift(0.75), example1_drift(0.7, 1.0), power_drift(0.5), zero_drift(),
                               constant_drift({0.3})};
  for (int i = 0; i < 1'000'000; ++i) {
    const double x = std::tan(3.14159 * (rng.uniform() - 0.5));
    ASSERT_EQ(t.scalar(-x), -t.scalar(x));
    for (const auto& b : all) ASSERT_LE(std::abs(b.scalar(x)), b.sup_bound);
  }
}

TEST(Drifts, JsonConstruction) {
  EXPECT_EQ(drift_from_json(nlohmann::json{{"drift", "tanaka"}, {"beta", 0.25}}).name, "tanaka");
  EXPECT_EQ(drift_from_json(nlohmann::json{{"drift", "example1"}, {"alpha", 0.5}}).sup_bound, 1.0);
  EXPECT_TRUE(drift_from_json(nlohmann::json{{"drift", "zero"}}).is_zero());
  EXPECT_THROW(drift_from_json(nlohmann::json{{"drift", "nope"}}), ConfigError);
  EXPECT_THROW(drift_from_json(nlohmann::json{{"drift", "tanaka"}}), ConfigError);
}

TEST(HolderSeminorm, PowerDriftApproachesOne) {
  const auto est = holder_seminorm_estimate(power_drift(0.5), 0.5, 2.0, 20000);
  EXPECT_LE(est.global_estimate, 1.0 + 1e-12);
  EXPECT_GT(est.global_estimate, 0.98);
}

TEST(HolderSeminorm, Example1LocalProfileVanishes) {
  const auto est = holder_seminorm_estimate(example1_drift(0.5, 1.0), 0.5, 2.0, 200000);
  ASSERT_EQ(est.local_profile.size(), 13u);
  for (std::size_t k = 1; k < est.local_profile.size(); ++k)
    EXPECT_LE(est.local_profile[k].second, est.local_profile[k - 1].second);
  // Pairs (0, s) give 1/|log s|, so the windowed sup is close to 1/|log delta|.
  for (const auto& [delta, ratio] : est.local_profile) {
    if (delta < 0.5e-8) {
      EXPECT_LT(ratio, 0.05) << delta;
    }
    if (delta < 0.1) {
      EXPECT_GT(ratio, 0.8 / std::abs(std::log(delta))) << delta;
    }
  }
}

TEST(HolderSeminorm, TanakaProfileDiverges) {
  // Pairs (0, s) give s^{beta - (1 - alpha)}, unbounded when beta < 1 - alpha.
  const auto est = holder_seminorm_estimate(tanaka_drift(0.25), 0.5, 2.0, 20000);
  for (std::size_t k = 2; k < est.scale_profile.size(); ++k) {
    const double delta = est.scale_profile[k].first;
    EXPECT_GE(est.scale_profile[k].second, std::pow(delta, 0.25 - 0.5));
    // Straddling pairs (-s/2, s/2) give 2^{1-beta} s^{beta-1/2}, the largest ratio at separation s.
    EXPECT_LE(est.scale_profile[k].second, std::pow(2.0, 0.75) * std::pow(0.1 * delta, 0.25 - 0.5) * (1 + 1e-12));
    EXPECT_GT(est.scale_profile[k].second, est.scale_profile[k - 1].second);
    // The windowed sup dominates every finer scale, hence is at least the finest one.
    EXPECT_GE(est.local_profile[k].second, est.scale_profile.back().second);
  }
}

TEST(HolderSeminorm, LargerBudgetNeverDecreases) {
  const auto b = example1_drift(0.5, 1.0, 2);
  double prev = 0.0;
  for (long n : {10000L, 20000L, 40000L, 80000L}) {
    const double g = holder_seminorm_estimate(b, 0.5, 3.0, n).global_estimate;
    EXPECT_GE(g, prev);
    prev = g;
  }
}
