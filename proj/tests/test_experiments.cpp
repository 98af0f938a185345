#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "stablesde/stablesde.hpp"

using namespace stablesde;
using namespace stablesde::experiments;
using nlohmann::json;

namespace {

std::vector<std::string> errors_of(const std::string& command, const json& j) {
  try {
    canonical_config(command, j);
  } catch (const ConfigErrors& e) {
    return e.errors();
  }
  return {};
}

bool mentions(const std::vector<std::string>& errs, const std::string& needle) {
  for (const auto& e : errs)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Table, CsvHasHeaderAndQuotes) {
  Table t;
  t.header = {"a", "b"};
  t.add({"1", "x,y"});
  t.add({"say \"hi\"", ""});
  EXPECT_EQ(t.to_csv(), "a,b\n1,\"x,y\"\n\"say \"\"hi\"\"\",\n");
}

TEST(Config, DefaultsRoundTripForEveryCommand) {
  for (const auto& cmd : command_names()) {
    const json first = canonical_config(cmd, json::object());
    const json second = canonical_config(cmd, first);
    EXPECT_EQ(first, second) << cmd;
    if (cmd != "epsilon0") EXPECT_TRUE(first.contains("seed")) << cmd;
    // Serialized text is stable too, which the run manifest hash relies on.
    EXPECT_EQ(first.dump(), canonical_config(cmd, json::parse(first.dump())).dump()) << cmd;
  }
}

TEST(Config, NonDefaultValuesSurvive) {
  const json in{{"kappa", 0.25}, {"alpha", 0.7}, {"theta", 0.1}, {"gamma_points", 33}, {"expect_feasible", true}};
  const auto out = canonical_config("epsilon0", in);
  for (const auto& [k, v] : in.items()) EXPECT_EQ(out.at(k), v) << k;

  const json hk{{"measure", {{"kind", "independent"}, {"alpha", 0.3}, {"d", 2}}}, {"thetas", {0.2, 0.5}},
                {"expect_satisfied", false}};
  const auto hk_out = canonical_config("hk-check", hk);
  EXPECT_EQ(hk_out.at("measure"), hk.at("measure"));
  EXPECT_EQ(hk_out.at("thetas"), hk.at("thetas"));
}

TEST(Config, CollectsEveryError) {
  const auto errs = errors_of("epsilon0", {{"kappa", -1.0}, {"alpha", "half"}, {"bogus", 1}});
  EXPECT_GE(errs.size(), 3u);
  EXPECT_TRUE(mentions(errs, "kappa"));
  EXPECT_TRUE(mentions(errs, "'alpha' has the wrong type"));
  EXPECT_TRUE(mentions(errs, "unknown key 'bogus'"));
}

TEST(Config, RejectsBadMeasureAndDrift) {
  EXPECT_TRUE(mentions(errors_of("hk-check", {{"measure", {{"kind", "nonsense"}}}}), "measure"));
  EXPECT_TRUE(mentions(errors_of("decay-check", {{"drift", {{"drift", "nonsense"}}}}), "drift"));
  EXPECT_TRUE(mentions(errors_of("sampler-validate", {{"method", "nonsense"}}), "method"));
}

TEST(Config, RejectsPreconditionViolations) {
  EXPECT_FALSE(errors_of("bifurcation", {{"epsilons", {0.01, 0.1}}}).empty());
  EXPECT_FALSE(errors_of("bifurcation", {{"betas", {1.5}}}).empty());
  EXPECT_FALSE(errors_of("resolvent-compare", {{"points", {20.0}}}).empty());
  EXPECT_FALSE(errors_of("resolvent-compare", {{"fft_half_width", 1.0}}).empty());
  EXPECT_FALSE(errors_of("hk-check", {{"thetas", json::array()}}).empty());
  EXPECT_FALSE(errors_of("decay-check", {{"measure", {{"kind", "isotropic"}, {"d", 2}, {"alpha", 0.5}, {"c", 1.0}}}})
                   .empty());
  EXPECT_FALSE(errors_of("comparison-check", {{"trials", 0}}).empty());
  EXPECT_FALSE(errors_of("epsilon0", json::array()).empty());
}

TEST(Config, UnknownCommand) { EXPECT_THROW(canonical_config("frobnicate", json::object()), ConfigErrors); }

TEST(Frequencies, HitLogSpacedExponents) {
  for (const auto& m : {two_point_measure(0.5), SpectralMeasure::isotropic(2, 0.3, 1.0), lattice_of_rays_measure(0.7, 0.3)}) {
    const auto xs = cf_frequencies(m, 0.5, 20, 0.02, 4.0);
    ASSERT_EQ(xs.size(), 20u);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double target = 0.02 * std::pow(200.0, k / 19.0);
      EXPECT_NEAR(0.5 * levy_symbol(m, xs[k]) / target, 1.0, 1e-10);
    }
  }
}

TEST(CompoundPoissonCutoff, MeetsBiasTarget) {
  const auto m = SpectralMeasure::isotropic(2, 0.5, 1.0);
  const double rho = compound_poisson_cutoff(m, 1.0, 30.0, 5e-4);
  ASSERT_LT(rho, 1.0);
  EXPECT_NEAR(0.5 * 30.0 * 30.0 * m.truncated_second_moment(rho), 5e-4, 1e-12);
  EXPECT_EQ(compound_poisson_cutoff(m, 1e-9, 1.0, 5e-4), 1.0);
}

TEST(Monotone, AllowsNoiseOnly) {
  std::vector<BifurcationRow> rows(3);
  rows[0].gap = 0.5, rows[1].gap = 0.3, rows[2].gap = 0.31;
  for (auto& r : rows) r.std_error = 0.01;
  EXPECT_TRUE(statistically_nonincreasing(rows));
  rows[2].gap = 0.4;
  EXPECT_FALSE(statistically_nonincreasing(rows));
}

TEST(HkCheck, LatticeAndIndependent) {
  HkCheckConfig c;
  c.thetas = {0.4};
  c.expect_satisfied = true;
  auto o = run_hk_check(c);
  EXPECT_TRUE(o.pass());
  EXPECT_EQ(o.table.rows.size(), 720u);

  c.measure = {{"kind", "independent"}, {"alpha", 0.5}, {"d", 2}};
  c.thetas = {0.3, 0.6};
  c.expect_satisfied = false;
  o = run_hk_check(c);
  EXPECT_TRUE(o.pass());
  EXPECT_EQ(o.result["reports"].size(), 2u);

  c.expect_satisfied = true;
  o = run_hk_check(c);
  EXPECT_FALSE(o.pass());
  EXPECT_EQ(o.assertions.front().name, "theta=0.3 satisfied");
}

TEST(Epsilon0, FeasibleAndInfeasible) {
  Epsilon0Config c;
  c.expect_feasible = true;
  auto o = run_epsilon0(c);
  EXPECT_TRUE(o.pass());
  EXPECT_NEAR(o.result.at("epsilon0").get<double>(), 0.0023125644179600247, 1e-15);
  c.theta = 1.2;
  c.expect_feasible = false;
  o = run_epsilon0(c);
  EXPECT_TRUE(o.pass());
  EXPECT_EQ(o.table.rows.front().back(), "false");
}

TEST(SamplerValidate, SmallRunPasses) {
  SamplerValidateConfig c;
  c.N = 20000;
  c.ks_samples = 5000;
  for (const std::string method : {"ray_sum", "compound_poisson"}) {
    c.method = method;
    const auto o = run_sampler_validate(c);
    EXPECT_TRUE(o.pass()) << method;
    EXPECT_EQ(o.table.rows.size(), 20u);
  }
}

TEST(SamplerValidate, IsDeterministic) {
  SamplerValidateConfig c;
  c.measure = {{"kind", "isotropic"}, {"alpha", 0.7}, {"d", 2}, {"c", 1.0}};
  c.N = 5000;
  c.ks_samples = 1000;
  EXPECT_EQ(run_sampler_validate(c).table.to_csv(), run_sampler_validate(c).table.to_csv());
}

TEST(ResolventCompare, SmallRunAgrees) {
  ResolventCompareConfig c;
  c.N = 4000;
  c.h = 1e-2;
  c.grid_half_width = 8.0;
  c.grid_step = 0.125;
  c.fft_half_width = 200.0;
  c.points = {-1.0, 0.0, 1.0};
  const auto o = run_resolvent_compare(c);
  EXPECT_TRUE(o.pass()) << o.result.dump();
  EXPECT_EQ(o.table.rows.size(), 3u);
  EXPECT_EQ(o.extra_tables.at("grid_solution").rows.size(), 129u);
  EXPECT_EQ(o.extra_tables.at("mc_estimates").rows.size(), 3u);
  EXPECT_TRUE(o.extra_json.at("operator_diagnostics").at("diagnostics").at("m_matrix").get<bool>());
}

TEST(ResolventCompare, AllowanceCoversSmallerAndLargerDomains) {
  ResolventCompareConfig c;
  c.grid_half_width = 8.0;
  c.grid_step = 0.125;
  c.points = {0.0, 2.0};
  const auto a = calibrate_fd_allowance(c);
  EXPECT_GT(a.domain_change, a.step_change);
  EXPECT_GT(a.allowance, a.domain_change);
}

TEST(DecayCheck, SmallRunPasses) {
  DecayCheckConfig c;
  c.exit_N = 2000;
  c.far_N = 200;
  const auto o = run_decay_check(c);
  EXPECT_TRUE(o.pass());
  EXPECT_EQ(o.table.rows.size(), 3u);
  EXPECT_NEAR(o.result["truncation"]["T"].get<double>(), 6.115909044841464, 1e-12);
}

TEST(Bifurcation, SmallRunShapeAndDeterminism) {
  BifurcationConfig c;
  c.N = 400;
  c.h = 1e-3;
  c.epsilons = {0.1, 0.01};
  c.floor = 0.0;
  const auto o = run_bifurcation(c);
  EXPECT_EQ(o.table.rows.size(), 4u);
  EXPECT_EQ(o.result["tables"].size(), 2u);
  EXPECT_EQ(o.result["tables"][0]["regime"], "non-unique");
  EXPECT_EQ(o.result["tables"][1]["regime"], "unique");
  EXPECT_EQ(run_bifurcation(c).table.to_csv(), o.table.to_csv());
}

TEST(ComparisonCheck, FewTrialsHold) {
  ComparisonCheckConfig c;
  c.trials = 6;
  const auto o = run_comparison_check(c);
  EXPECT_TRUE(o.pass());
  EXPECT_EQ(o.table.rows.size(), 6u);
}

TEST(RegressionManifest, ShippedFileHasCalibratedConstants) {
  const auto m = load_regression_manifest(STABLESDE_TEST_DATA_DIR "/regression_manifest.json");
  ASSERT_TRUE(m.fd_allowance.has_value());
  ASSERT_TRUE(m.bifurcation_floor.has_value());
  EXPECT_GT(*m.fd_allowance, 0.0);
  EXPECT_LT(*m.fd_allowance, 0.01);
  EXPECT_GT(*m.bifurcation_floor, 0.0);
  EXPECT_EQ(m.document.at("bifurcation").at("oracle_h").get<double>(), 1e-5);
}

TEST(RegressionManifest, MissingFileIsEmpty) {
  const auto m = load_regression_manifest("/nonexistent/manifest.json");
  EXPECT_FALSE(m.fd_allowance.has_value());
  EXPECT_FALSE(criterion5(m).pass());
}

TEST(Criteria, FastOnesPass) {
  for (const auto& r : {criterion1(), criterion3(), criterion7()}) EXPECT_TRUE(r.pass()) << r.line();
  const auto line = criterion1().line();
  EXPECT_EQ(line.rfind("CRITERION 1 PASS", 0), 0u) << line;
}
