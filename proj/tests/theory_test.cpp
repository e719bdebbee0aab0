// Copyright 2026 The MIA Frontier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mia/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace mia {
namespace {

const BiLevelSpec kWideSharp{1.0 / 6.0, 3.0, 1.0, 50.0, 0.1};

FixedPointState solved(const BiLevelSpec& spec) { return solve(spec).state; }

// Intervals holding essentially all mass of both densities for one probe:
// m +- 14 sigma for the test output and its image under the prox for the
// train output.
struct Window {
  std::vector<std::pair<double, double>> pieces;
};

Window window_for(const FixedPointState& s, const SampleContext& c) {
  const double m = s.alpha * c.z_star;
  const double a = m - 14 * s.sigma, b = m + 14 * s.sigma;
  const double pa = testing::prox_by_bisection(s.gamma, c.y, a);
  const double pb = testing::prox_by_bisection(s.gamma, c.y, b);
  if (pb < a || pa > b) {
    return {{{std::min(a, pa), std::min(b, pb)}, {std::max(a, pa), std::max(b, pb)}}};
  }
  return {{{std::min(a, pa), std::max(b, pb)}}};
}

template <typename F>
double integrate_window(F&& f, const Window& w, long cells = 400000) {
  double acc = 0.0;
  for (const auto& [lo, hi] : w.pieces) acc += testing::trapezoid(f, lo, hi, cells);
  return acc;
}

std::vector<FixedPointState> sample_states() {
  std::vector<FixedPointState> out;
  for (const BiLevelSpec& spec : {kWideSharp, BiLevelSpec{0.5, 5.0, 1.0, 10.0, 1.0},
                                  BiLevelSpec{0.05, 10.0, 1.0, 1.0, 0.01},
                                  BiLevelSpec{1.0, 2.0, 1.0, 50.0, 100.0}}) {
    out.push_back(solved(spec));
  }
  return out;
}

std::vector<SampleContext> sample_probes() {
  return {{0.0, 1}, {0.0, 0}, {3.0, 1}, {-20.0, 1}, {45.0, 0}};
}

TEST(DensityTest, TestDensityPeaksAtTheSignalAndIsSymmetric) {
  const FixedPointState s = solved(kWideSharp);
  const SampleContext c{2.0, 1};
  const double m = s.alpha * c.z_star;
  EXPECT_NEAR(density_test(s, c, m), 1.0 / (s.sigma * std::sqrt(2 * M_PI)), 1e-15);
  for (double d : {0.1, 1.0, 3.0}) {
    EXPECT_DOUBLE_EQ(density_test(s, c, m + d), density_test(s, c, m - d));
    EXPECT_LT(density_test(s, c, m + d), density_test(s, c, m));
  }
}

TEST(DensityTest, ZeroGammaCollapsesTrainOntoTest) {
  FixedPointState s{0.3, 1.2, 0.0, 0.2, 1.0, 0.5};
  for (int y : {0, 1}) {
    for (double z = -6; z <= 6; z += 0.25) {
      EXPECT_DOUBLE_EQ(density_train(s, {1.0, y}, z), density_test(s, {1.0, y}, z));
    }
    EXPECT_EQ(advantage_sample(s, {1.0, y}), 0.0);
  }
  EXPECT_EQ(advantage_average(s, 10.0), 0.0);
}

TEST(DensityTest, NormalizedAgainstTrapezoidOracle) {
  for (const FixedPointState& s : sample_states()) {
    for (const SampleContext& c : sample_probes()) {
      const Window w = window_for(s, c);
      const double train = integrate_window([&](double z) { return density_train(s, c, z); }, w);
      const double test = integrate_window([&](double z) { return density_test(s, c, z); }, w);
      EXPECT_NEAR(train, 1.0, 1e-8) << c.z_star << ' ' << c.y;
      EXPECT_NEAR(test, 1.0, 1e-8);
      EXPECT_NEAR(density_mass(s, c, true), 1.0, 1e-8);
      EXPECT_NEAR(density_mass(s, c, false), 1.0, 1e-8);
    }
  }
}

TEST(DensityTest, TrainDensityIsTheDerivativeOfItsCdf) {
  const FixedPointState s = solved(kWideSharp);
  for (const SampleContext& c : sample_probes()) {
    const double m = s.alpha * c.z_star;
    for (double z = m - 5; z <= m + 5; z += 0.37) {
      const double h = 1e-5;
      const double fd = (cdf_train(s, c, z + h) - cdf_train(s, c, z - h)) / (2 * h);
      EXPECT_NEAR(density_train(s, c, z), fd, 1e-6 * std::max(1.0, fd));
    }
  }
}

TEST(DensityTest, TrainCdfMatchesProxOfGaussianDraws) {
  const FixedPointState s = solved(kWideSharp);
  const SampleContext c{0.0, 1};
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  const int n = 20000;
  std::vector<double> draws(n);
  for (double& d : draws) d = testing::prox_by_bisection(s.gamma, c.y, s.sigma * normal(gen));
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = cdf_train(s, c, draws[i]);
    ks = std::max({ks, std::abs(f - i / double(n)), std::abs(f - (i + 1) / double(n))});
  }
  EXPECT_LT(ks, 1.63 / std::sqrt(double(n)));  // 1% level
}

TEST(DensityTest, PositiveLabelShiftsTrainMassUpward) {
  const FixedPointState s = solved(kWideSharp);
  const SampleContext c{0.0, 1};
  const Window w = window_for(s, c);
  const double train_mean =
      integrate_window([&](double z) { return z * density_train(s, c, z); }, w);
  const double test_mean =
      integrate_window([&](double z) { return z * density_test(s, c, z); }, w);
  EXPECT_GT(train_mean, test_mean + 1.0);
}

TEST(AdvantageTest, EqualsTotalVariation) {
  for (const FixedPointState& s : sample_states()) {
    for (const SampleContext& c : sample_probes()) {
      const double adv = advantage_sample(s, c);
      EXPECT_NEAR(adv, total_variation(s, c), 1e-8) << c.z_star << ' ' << c.y;
      const Window w = window_for(s, c);
      const double oracle = 0.5 * integrate_window(
          [&](double z) { return std::abs(density_train(s, c, z) - density_test(s, c, z)); }, w);
      EXPECT_NEAR(adv, oracle, 1e-7);
      EXPECT_GE(adv, 0.0);
      EXPECT_LE(adv, 1.0);
    }
  }
}

TEST(AdvantageTest, NoThresholdRuleBeatsTheLikelihoodRatio) {
  for (const FixedPointState& s : sample_states()) {
    for (const SampleContext& c : sample_probes()) {
      const double adv = advantage_sample(s, c);
      const double m = s.alpha * c.z_star;
      for (double t = m - 10 * s.sigma - s.gamma; t <= m + 10 * s.sigma + s.gamma;
           t += (20 * s.sigma + 2 * s.gamma) / 997) {
        EXPECT_LE(threshold_rule_advantage(s, c, t, true), adv + 1e-8);
        EXPECT_LE(threshold_rule_advantage(s, c, t, false), adv + 1e-8);
      }
    }
  }
}

TEST(AdvantageTest, GrowsTowardOneWithGamma) {
  FixedPointState s{0.2, 1.0, 0.0, 0.2, 1.0, 0.5};
  double previous = 0.0;
  for (double gamma : {0.01, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4}) {
    s.gamma = gamma;
    const double adv = advantage_sample(s, {0.5, 1});
    EXPECT_GT(adv, previous) << gamma;
    previous = adv;
  }
  EXPECT_GT(previous, 0.99);
}

TEST(AdvantageTest, AverageMatchesDenseOuterOracle) {
  const BiLevelSpec spec{0.5, 5.0, 1.0, 10.0, 1.0};
  const FixedPointState s = solved(spec);
  // E over Z' ~ N(0, sigma_beta^2) on a uniform grid, label weights from rho'.
  const double oracle = testing::trapezoid(
      [&](double u) {
        const double z = spec.sigma_beta * u;
        const double p = testing::sigmoid(z);
        return std::exp(-0.5 * u * u) / std::sqrt(2 * M_PI) *
               (p * advantage_sample(s, {z, 1}) + (1 - p) * advantage_sample(s, {z, 0}));
      },
      -9.0, 9.0, 1800);
  EXPECT_NEAR(advantage_average(s, spec.sigma_beta), oracle, 1e-5);
}

TEST(AdvantageTest, LabelWeightingIdentity) {
  // adv(z, 0) = adv(-z, 1), so the average is 2 E[rho'(Z') adv(Z', 1)].
  const BiLevelSpec spec{0.5, 5.0, 1.0, 10.0, 1.0};
  const FixedPointState s = solved(spec);
  for (double z : {-7.0, -1.3, 0.0, 0.4, 12.0}) {
    EXPECT_NEAR(advantage_sample(s, {z, 0}), advantage_sample(s, {-z, 1}), 1e-10) << z;
  }
  const double oracle = testing::trapezoid(
      [&](double u) {
        const double z = spec.sigma_beta * u;
        return std::exp(-0.5 * u * u) / std::sqrt(2 * M_PI) * 2 * testing::sigmoid(z) *
               advantage_sample(s, {z, 1});
      },
      -9.0, 9.0, 1800);
  EXPECT_NEAR(advantage_average(s, spec.sigma_beta), oracle, 1e-5);
}

TEST(AdvantageTest, GlobalThresholdNeverBeatsTheAverageOptimum) {
  for (const BiLevelSpec& spec : {kWideSharp, BiLevelSpec{0.5, 5.0, 1.0, 10.0, 1.0}}) {
    const FixedPointState s = solved(spec);
    const GlobalThresholdTheory g = global_threshold_advantage(s, spec.sigma_beta);
    EXPECT_GT(g.advantage, 0.0);
    EXPECT_LE(g.advantage, advantage_average(s, spec.sigma_beta) + 1e-6);
  }
}

TEST(AdvantageTest, TheoreticalSamplesFollowTheDensities) {
  const FixedPointState s = solved(kWideSharp);
  const SampleContext c{-10.0, 0};
  const TheoreticalOutputs o = sample_theoretical_outputs(s, c, 20000, 17);
  auto ks = [](std::vector<double> x, auto cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double f = cdf(x[i]);
      d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    return d;
  };
  const double bound = 1.63 / std::sqrt(20000.0);
  EXPECT_LT(ks(o.train, [&](double z) { return cdf_train(s, c, z); }), bound);
  EXPECT_LT(ks(o.test, [&](double z) { return cdf_test(s, c, z); }), bound);
}

TEST(TestErrorTest, RandomGuessingWithoutSignal) {
  for (double sb : {1.0, 10.0, 50.0}) {
    EXPECT_NEAR(test_error({0.0, 1.0, 1.0, 0.2, 1.0, 0.5}, sb), 0.5, 1e-12);
  }
}

TEST(TestErrorTest, PerfectDirectionLeavesOnlyLabelNoise) {
  for (double sb : {1.0, 10.0, 50.0}) {
    // 2 E[sigmoid(-Z) 1{Z > 0}] = 2 E[sigmoid(-sb U) 1{U > 0}], U ~ N(0, 1).
    const double oracle = 2 * testing::trapezoid(
        [&](double u) { return testing::sigmoid(-sb * u) * std::exp(-0.5 * u * u); }, 0.0, 12.0,
        2000000) / std::sqrt(2 * M_PI);
    EXPECT_NEAR(test_error({1e9, 1.0, 1.0, 0.2, 1.0, 0.5}, sb), oracle, 1e-7) << sb;
  }
}

TEST(TestErrorTest, HalfFormIsExactlyHalf) {
  for (const BiLevelSpec& spec : {kWideSharp, BiLevelSpec{0.5, 5.0, 1.0, 10.0, 1.0},
                                  BiLevelSpec{0.05, 10.0, 1.0, 1.0, 0.01}}) {
    const FixedPointState s = solved(spec);
    const double e = test_error(s, spec.sigma_beta);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 0.5);
    EXPECT_NEAR(test_error_half_form(s, spec.sigma_beta), 0.5 * e, 1e-12);
  }
}

TEST(TestErrorTest, WiderIsBetterInTheHeavyRidgeLimit) {
  // Fixed samples per signal feature n / d = 2.
  double previous = 1.0;
  for (double phi : {1.5, 2.0, 4.0, 8.0, 16.0}) {
    const BiLevelSpec spec{2.0 / phi, phi, 1.0, 10.0, 1e4};
    const LambdaInfinityLimit lim = closed_form_lambda_inf(spec);
    const double err =
        test_error({std::sqrt(lim.alpha_over_sigma_sq), 1.0, 0.0, lim.theta, 0.0, 0.5}, 10.0);
    EXPECT_LT(err, previous) << phi;
    previous = err;
  }
}

TEST(EvaluatePointTest, ReportsAConvergedState) {
  const TradeoffPoint p = evaluate_point(kWideSharp);
  EXPECT_LE(p.solve_residual, 1e-9);
  EXPECT_NEAR(p.test_error, test_error(p.state, kWideSharp.sigma_beta), 0.0);
  EXPECT_GT(p.advantage, 0.5);
  PointOptions quick;
  quick.with_advantage = false;
  EXPECT_TRUE(std::isnan(evaluate_point(kWideSharp, quick).advantage));
}

TEST(SweepTest, EmptyGridGivesEmptyList) {
  EXPECT_TRUE(sweep(kWideSharp, SweepAxis::kLambda, {}).empty());
}

TEST(SweepTest, KeepsGridOrderAndRecordsFailures) {
  const std::vector<double> grid{0.1, 1.0, -1.0, 10.0};
  const auto out = sweep(kWideSharp, SweepAxis::kLambda, grid);
  ASSERT_EQ(out.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(out[i].axis_value, grid[i]);
  EXPECT_TRUE(out[0].point && out[1].point && out[3].point);
  EXPECT_FALSE(out[2].point);
  EXPECT_FALSE(out[2].failure.empty());
}

TEST(SweepTest, AdvantageFallsAsLambdaGrows) {
  const BiLevelSpec family{0.2, 5.0, 1.0, 10.0, 1.0};
  const auto out = sweep(family, SweepAxis::kLambda, {0.01, 0.1, 1.0, 10.0, 100.0});
  for (std::size_t i = 1; i < out.size(); ++i) {
    ASSERT_TRUE(out[i].point && out[i - 1].point);
    EXPECT_LE(out[i].point->advantage, out[i - 1].point->advantage + 1e-4);
  }
}

TEST(SweepTest, AxisSubstitution) {
  EXPECT_EQ(with_axis(kWideSharp, SweepAxis::kPhi, 7.0).phi, 7.0);
  EXPECT_EQ(with_axis(kWideSharp, SweepAxis::kDelta, 0.3).delta, 0.3);
  EXPECT_EQ(with_axis(kWideSharp, SweepAxis::kLambda, 2.0).lambda, 2.0);
  EXPECT_STREQ(axis_name(SweepAxis::kPhi), "phi");
}

TEST(TuneLambdaTest, SingleElementGrid) {
  const TuneResult r = tune_lambda(kWideSharp, {}, {0.7});
  EXPECT_EQ(r.lambda, 0.7);
}

TEST(TuneLambdaTest, RejectsBadGrids) {
  EXPECT_THROW(tune_lambda(kWideSharp, {}, {}), InvalidArgument);
  EXPECT_THROW(tune_lambda(kWideSharp, {}, {1.0, 0.1}), InvalidArgument);
}

TEST(TuneLambdaTest, ZeroAdvantageTargetPicksTheLargestLambda) {
  TuneRequest req;
  req.objective = TuneObjective::kTargetAdvantage;
  req.target = 0.0;
  const TuneResult r = tune_lambda({0.2, 5.0, 1.0, 10.0, 1.0}, req, {0.1, 10.0, 1e3, 1e5});
  EXPECT_EQ(r.lambda, 1e5);
}

TEST(TuneLambdaTest, WiderModelsTradeLowerErrorForHigherAdvantage) {
  // Fixed samples per signal feature n / d = 5, so delta = 5 / phi.
  std::vector<double> grid;
  for (int i = 0; i < 25; ++i) grid.push_back(0.01 * std::pow(1e4, i / 24.0));
  const TuneResult narrow = tune_lambda({2.5, 2.0, 1.0, 10.0, 1.0}, {}, grid);
  const TuneResult wide = tune_lambda({0.5, 10.0, 1.0, 10.0, 1.0}, {}, grid);
  EXPECT_LT(wide.point.test_error, narrow.point.test_error);
  EXPECT_GT(wide.point.advantage, narrow.point.advantage);
}

TEST(TuneLambdaTest, RefinementHitsAnErrorTarget) {
  std::vector<double> grid;
  for (int i = 0; i < 9; ++i) grid.push_back(0.01 * std::pow(1e4, i / 8.0));
  TuneRequest req;
  req.objective = TuneObjective::kTargetError;
  req.refine_tolerance = 1e-4;
  const BiLevelSpec family{0.2, 5.0, 1.0, 10.0, 1.0};
  const auto pts = sweep(family, SweepAxis::kLambda, {grid.front(), grid.back()});
  req.target = 0.5 * (pts[0].point->test_error + pts[1].point->test_error);
  const TuneResult r = tune_lambda(family, req, grid);
  EXPECT_NEAR(r.point.test_error, req.target, 1e-4);
  EXPECT_TRUE(r.warnings.empty());
}

}  // namespace
}  // namespace mia
