#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "transop/experiments/runner.hpp"

using namespace transop;
using namespace transop::experiments;

namespace {

json shipped(const std::string& name) {
  std::ifstream in(std::string(TRANSOP_CONFIG_DIR) + "/" + name + ".json");
  if (!in) throw std::runtime_error("missing config " + name);
  return json::parse(in);
}

ScenarioReport run_json(const json& j, unsigned threads = 1) { return run_scenario(parse_config(j), RunOptions{threads}); }

void expect_all_pass(const ScenarioReport& rep) {
  EXPECT_FALSE(rep.assertions().empty());
  for (const auto& a : rep.assertions())
    EXPECT_TRUE(a.pass) << a.name << ": " << a.value << " " << a.comparison << " " << a.threshold;
}

bool has_warning_containing(const ScenarioReport& rep, const std::string& needle) {
  for (const auto& w : rep.warnings())
    if (w.find(needle) != std::string::npos) return true;
  return false;
}

template <class F> std::string config_error_message(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

json minimal(const std::string& scenario) {
  return {{"scenario", scenario},
          {"grid", {{"ell", 1.0}, {"T", 1.0}, {"n_x", 17}, {"n_t", 17}}},
          {"equation", json::object()},
          {"data", json::object()},
          {"assertions", json::object()},
          {"output", json::object()}};
}

} // namespace

TEST(Config, RejectsStructuralProblems) {
  auto j = minimal("theorem1_case1");
  EXPECT_NO_THROW(parse_config(j));
  auto missing = j;
  missing.erase("output");
  EXPECT_NE(config_error_message([&] { parse_config(missing); }).find("output"), std::string::npos);
  auto unknown = j;
  unknown["scenario"] = "theorem9";
  EXPECT_NE(config_error_message([&] { parse_config(unknown); }).find("unknown scenario"), std::string::npos);
  auto coarse = j;
  coarse["grid"]["n_x"] = 3;
  EXPECT_NE(config_error_message([&] { parse_config(coarse); }).find("grid.n_x"), std::string::npos);
  auto zero_sigma = j;
  zero_sigma["equation"]["sigma"] = 0.0;
  EXPECT_THROW(parse_config(zero_sigma), ConfigError);
  auto complex_sigma = j;
  complex_sigma["equation"]["sigma"] = {0.0, 1.0};
  EXPECT_EQ(parse_config(complex_sigma).sigma, cplx(0.0, 1.0));
  EXPECT_THROW(parse_config(json::array()), ConfigError);
}

TEST(Config, ScenarioNamesRoundTrip) {
  for (const auto& [s, name] : kScenarioNames) {
    EXPECT_EQ(scenario_from_name(name), s);
    EXPECT_EQ(scenario_name(s), name);
  }
  EXPECT_FALSE(scenario_from_name("nope"));
}

TEST(Config, LevelsHalveBothSteps) {
  GridConfig g;
  g.n_x = 9;
  g.n_t = 17;
  const auto [xm, tm] = g.meshes(2);
  EXPECT_EQ(xm.size(), 33u);
  EXPECT_EQ(tm.size(), 65u);
}

TEST(FunctionSpecs, BuiltInFamiliesEvaluate) {
  EXPECT_EQ(parse_function(json(2.5), "f")(0.3), cplx(2.5));
  EXPECT_EQ(parse_function(json::array({1.0, -2.0}), "f")(0.3), cplx(1.0, -2.0));
  const auto poly = parse_function(json{{"type", "polynomial"}, {"coeffs", {1.0, 0.0, 3.0}}}, "f");
  EXPECT_NEAR(poly(2.0).real(), 13.0, 1e-14);
  const auto bump = parse_function(json{{"type", "bump"}, {"from", 0.2}, {"to", 0.6}}, "f");
  EXPECT_EQ(bump(0.1), cplx(0.0));
  EXPECT_NEAR(bump(0.4).real(), 1.0, 1e-14);
  const auto flat = parse_function(json{{"type", "flat_exp"}}, "f");
  EXPECT_EQ(flat(0.0), cplx(0.0));
  EXPECT_NEAR(flat(1.0).real(), std::exp(-1.0), 1e-15);
  const auto ramp = parse_function(json{{"type", "ramp_from"}, {"start", 0.5}, {"power", 3}}, "f");
  EXPECT_EQ(ramp(0.4), cplx(0.0));
  EXPECT_NEAR(ramp(0.7).real(), 0.008, 1e-15);
  const auto sum = parse_function(json{{"type", "sum"}, {"terms", {1.0, {{"type", "exponential"}, {"rate", 2.0}}}}}, "f");
  EXPECT_NEAR(sum(0.5).real(), 1.0 + std::exp(1.0), 1e-14);
  const auto cs = parse_function(json{{"type", "cosine_series"}, {"coeffs", {1.0, 0.5}}}, "f", SpecContext{2.0, 0});
  EXPECT_NEAR(cs(2.0).real(), 0.5, 1e-14);
}

TEST(FunctionSpecs, RandomCosineIsSeeded) {
  const json spec{{"type", "random_cosine"}, {"terms", 5}};
  const auto a = parse_function(spec, "f", SpecContext{1.0, 3}), b = parse_function(spec, "f", SpecContext{1.0, 3});
  const auto c = parse_function(spec, "f", SpecContext{1.0, 4});
  for (double x : {0.0, 0.3, 0.9}) EXPECT_EQ(a(x), b(x));
  EXPECT_NE(a(0.3), c(0.3));
}

TEST(FunctionSpecs, ErrorsNameTheKey) {
  EXPECT_NE(config_error_message([] { parse_function(json{{"type", "wavelet"}}, "equation.P"); }).find("equation.P"),
            std::string::npos);
  EXPECT_THROW(parse_function(json{{"type", "bump"}, {"from", 0.6}, {"to", 0.2}}, "f"), ConfigError);
  EXPECT_THROW(parse_function(json("text"), "f"), ConfigError);
  EXPECT_THROW(parse_function(json{{"type", "matrix"}}, "f"), ConfigError);
}

TEST(FunctionSpecs, MatrixAndVectorForms) {
  const json m{{"type", "matrix"}, {"entries", {{1.0, 0.0}, {{{"type", "polynomial"}, {"coeffs", {0.0, 1.0}}}, 2.0}}}};
  const auto M = parse_matrix_function(m, 2, "P");
  EXPECT_NEAR(M(0.5).a[2].real(), 0.5, 1e-15);
  EXPECT_THROW(parse_matrix_function(m, 3, "P"), ConfigError);
  const auto scaled = parse_matrix_function(json(3.0), 2, "P")(0.1);
  EXPECT_EQ(scaled.a[0], cplx(3.0));
  EXPECT_EQ(scaled.a[1], cplx(0.0));
  const auto v = parse_vector_function(json::array({1.0, 2.0}), 2, "data.initial[0]");
  EXPECT_EQ(v.sample(SpatialMesh(1.0, 5))[1], cplx(2.0));
}

TEST(Parallel, ResultsKeepIndexOrder) {
  const auto out = parallel_map(50, 4, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], i * i);
  EXPECT_TRUE(parallel_map(0, 4, [](std::size_t i) { return i; }).empty());
}

TEST(Parallel, LowestFailingIndexWins) {
  std::atomic<int> calls{0};
  try {
    parallel_map(20, 3, [&](std::size_t i) -> int {
      ++calls;
      if (i == 7 || i == 13) throw std::runtime_error("job " + std::to_string(i));
      return 0;
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "job 7");
  }
  EXPECT_EQ(calls.load(), 20);
}

TEST(Splines, PartitionOfUnityAndCubicReproduction) {
  for (std::size_t count : {4u, 6u, 12u}) {
    const ClampedCubicBasis basis(2.0, count);
    for (double x = 0.0; x <= 2.0; x += 0.0137) {
      const auto b = basis.evaluate(x);
      double s = 0.0;
      for (double v : b) {
        EXPECT_GE(v, -1e-15);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-13);
    }
    const SpatialMesh xm(2.0, 41);
    auto cubic = [](double x) { return cplx(1.0 - x + 0.5 * x * x * x); };
    const auto c = basis.fit(cubic, xm);
    for (double x : {0.0, 0.77, 2.0}) EXPECT_NEAR(basis.combine(c, x), cubic(x).real(), 1e-11);
  }
  EXPECT_THROW(ClampedCubicBasis(1.0, 3), std::invalid_argument);
}

// Both drift pairs must produce the same P + r^2/4 - r'/2.
TEST(DriftPairs, RiccatiPartnerSharesEffectivePotential) {
  const SpatialMesh xm(1.0, 201);
  auto P = [](double) { return cplx(0.0); };
  auto r = [](double x) { return cplx(x); };
  auto Q = [](double x) { return cplx(0.3 + 0.2 * x); };
  const auto rt = experiments::detail::riccati_partner(P, r, Q, xm);
  EXPECT_EQ(rt[0], r(0.0));
  const auto drt = first_derivative<cplx>(rt, xm.step());
  for (std::size_t i = 1; i + 1 < xm.size(); ++i) {
    const double x = xm.node(i);
    const cplx lhs = Q(x) + 0.25 * rt[i] * rt[i] - 0.5 * drt[i];
    EXPECT_NEAR(std::abs(lhs - (x * x / 4 - 0.5)), 0.0, 1e-4) << "x = " << x;
  }
}

TEST(Scenarios, ScalarUniquenessSplitPasses) { expect_all_pass(run_json(shipped("theorem1_case1"))); }

TEST(Scenarios, SystemUniquenessSplitPasses) { expect_all_pass(run_json(shipped("theorem1_case1_system"))); }

TEST(Scenarios, FinalDataVariantPasses) { expect_all_pass(run_json(shipped("theorem1_case2"))); }

TEST(Scenarios, SchrodingerSplitPasses) { expect_all_pass(run_json(shipped("corollary3_schrodinger"))); }

TEST(Scenarios, FlatInputCounterexamplePasses) { expect_all_pass(run_json(shipped("remark_counterexample"))); }

TEST(Scenarios, InitialDataVariantPasses) { expect_all_pass(run_json(shipped("corollary2"))); }

TEST(Scenarios, DriftEquivalencePasses) { expect_all_pass(run_json(shipped("corollary4_drift"))); }

TEST(Scenarios, KnownNearZeroLightTrianglePasses) { expect_all_pass(run_json(shipped("theorem6_known_near_zero"))); }

TEST(Scenarios, BoundaryDeconvolutionPassesOnCoarseGrid) {
  auto j = shipped("theorem3_zero_init");
  j["equation"].erase("Delta_inner");
  j["equation"].erase("Delta_outer");
  const auto rep = run_json(j);
  expect_all_pass(rep);
  EXPECT_NE(rep.find_assertion("z0_plus_K_over_sigma.min_observed_order"), nullptr);
}

TEST(Scenarios, ReportsAreDeterministicAcrossThreadCounts) {
  const auto j = shipped("corollary2");
  const auto a = run_json(j, 1).to_json(), b = run_json(j, 1).to_json(), c = run_json(j, 4).to_json();
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a.dump(), c.dump());
  const auto p = provenance(parse_config(j));
  EXPECT_EQ(p["transop_version"], kVersion);
  EXPECT_EQ(p["config"], j);
}

TEST(ScenarioErrors, SingularInitialDataRefused) {
  auto j = shipped("theorem1_case1_system");
  j["data"]["initial"] = {{1.0, 1.0}, {1.0, 1.0}};
  EXPECT_NE(config_error_message([&] { run_json(j); }).find("determinant condition"), std::string::npos);
}

TEST(ScenarioErrors, CounterexampleNeedsFlatBoundaryInput) {
  auto j = shipped("remark_counterexample");
  j["data"]["g"] = {{"type", "polynomial"}, {"coeffs", {0.0, 1.0}}};
  EXPECT_NE(config_error_message([&] { run_json(j); }).find("not flat"), std::string::npos);
}

TEST(ScenarioErrors, FlatFluxDriveViolatesNondegeneracy) {
  auto j = shipped("theorem3_zero_init");
  j["data"]["flux"] = {{"type", "flat_exp"}};
  j["grid"]["n_t"] = 257;
  EXPECT_NE(config_error_message([&] { run_json(j); }).find("nondegeneracy"), std::string::npos);
  auto none = shipped("theorem3_zero_init");
  for (const char* k : {"Q", "Delta_inner", "Delta_outer"}) none["equation"].erase(k);
  EXPECT_THROW(run_json(none), ConfigError);
}

TEST(ScenarioErrors, DriftPairsRequireMatchingDriftAtZero) {
  auto j = shipped("corollary4_drift");
  j["equation"]["r_tilde"] = 1.0;
  EXPECT_NE(config_error_message([&] { run_json(j); }).find("r(0) = r~(0)"), std::string::npos);
}

TEST(ScenarioErrors, KnownNearZeroValidatesEps0AndWarnsOutsideRange) {
  auto j = shipped("theorem6_known_near_zero");
  j["data"]["eps0"] = 0.0;
  EXPECT_THROW(run_json(j), ConfigError);
  j["data"]["eps0"] = 1.5;
  EXPECT_THROW(run_json(j), ConfigError);
  auto outside = shipped("theorem6_known_near_zero");
  outside["data"]["x0"] = 0.6;
  outside["grid"]["levels"] = 2;
  const auto rep = run_json(outside);
  EXPECT_FALSE(rep.warnings().empty());
  EXPECT_EQ(rep.find_assertion("light_triangle_sup"), nullptr);
}

TEST(Reconstruct, ExactStartNeedsNoIterations) {
  auto j = shipped("reconstruct");
  j["grid"]["n_x"] = 33;
  j["grid"]["n_t"] = 65;
  j["equation"]["Q_init"] = 1.0;
  j["data"]["data_refinement"] = 1;
  const auto rep = run_json(j);
  EXPECT_EQ(rep.metric_or("iterations", -1.0), 0.0);
  EXPECT_LT(rep.metric_or("recovery_error_sup", 1.0), 1e-10);
  EXPECT_TRUE(has_warning_containing(rep, "inverse crime"));
}

TEST(Reconstruct, RejectsBadKnobs) {
  auto j = shipped("reconstruct");
  j["data"]["n_coeffs"] = 3;
  EXPECT_THROW(run_json(j), ConfigError);
  j = shipped("reconstruct");
  j["data"]["data_refinement"] = 3;
  EXPECT_THROW(run_json(j), ConfigError);
  j = shipped("reconstruct");
  j["data"]["noise"] = -1.0;
  EXPECT_THROW(run_json(j), ConfigError);
}

TEST(Report, TableCsvAndVerdict) {
  ScenarioReport rep("demo");
  rep.check_le("small", 1.0, 2.0);
  EXPECT_TRUE(rep.passed());
  rep.check_ge("nan_never_passes", std::nan(""), 0.0);
  EXPECT_FALSE(rep.passed());
  EXPECT_EQ(rep.to_json()["verdict"], "fail");
  EXPECT_EQ(rep.to_json()["assertions"][1]["value"], "nan");
  Table t{{"a", "b"}, {{1.0, 2.0}}};
  std::ostringstream os;
  t.write_csv(os);
  EXPECT_EQ(os.str().substr(0, 4), "a,b\n");
}
