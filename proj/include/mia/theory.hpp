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

#ifndef MIA_THEORY_HPP_
#define MIA_THEORY_HPP_

// Asymptotic test error and membership-inference advantage computed from a
// converged FixedPointState.
//
// For a probe with clean margin Z' and label y, the model output is
//   test point:     zhat ~ alpha Z' + sigma W
//   training point: zhat ~ prox_{gamma l(y, .)}(alpha Z' + sigma W)
// so the training density is the test density pulled back through
// g_y(z) = z + gamma (rho'(z) - y).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mia/bilevel.hpp"
#include "mia/error.hpp"
#include "mia/parallel.hpp"
#include "mia/quadrature.hpp"
#include "mia/scalar.hpp"
#include "mia/solver.hpp"

namespace mia {

struct SampleContext {
  double z_star = 0.0;  // x'^T beta*
  int y = 1;            // observed label
};

inline double density_test(const FixedPointState& s, const SampleContext& c, double zhat) {
  return gaussian_pdf((zhat - s.alpha * c.z_star) / s.sigma) / s.sigma;
}

inline double density_train(const FixedPointState& s, const SampleContext& c, double zhat) {
  const double g = prox_inverse(s.gamma, c.y, zhat);
  return gaussian_pdf((g - s.alpha * c.z_star) / s.sigma) * prox_inverse_slope(s.gamma, zhat) /
         s.sigma;
}

inline double cdf_test(const FixedPointState& s, const SampleContext& c, double zhat) {
  return gaussian_cdf((zhat - s.alpha * c.z_star) / s.sigma);
}

// Exact, since g_y is increasing.
inline double cdf_train(const FixedPointState& s, const SampleContext& c, double zhat) {
  return gaussian_cdf((prox_inverse(s.gamma, c.y, zhat) - s.alpha * c.z_star) / s.sigma);
}

// Integration window [m - 12 s, m + 12 s] with m = alpha Z' and s = sigma + gamma,
// cut at the edges of both densities' bulk (10 sigma around m, and its image
// under the prox) so that the adaptive rule never steps over a narrow peak.
inline std::vector<double> density_breakpoints(const FixedPointState& s, const SampleContext& c) {
  const double m = s.alpha * c.z_star;
  const double width = s.sigma + s.gamma;
  const double lo = m - 12.0 * width, hi = m + 12.0 * width;
  std::vector<double> pts{lo,
                          hi,
                          m - 10.0 * s.sigma,
                          m,
                          m + 10.0 * s.sigma,
                          prox_logistic(s.gamma, c.y, m - 10.0 * s.sigma),
                          prox_logistic(s.gamma, c.y, m),
                          prox_logistic(s.gamma, c.y, m + 10.0 * s.sigma)};
  for (double& p : pts) p = std::clamp(p, lo, hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

template <typename F>
IntegrationResult integrate_pieces(F&& f, const std::vector<double>& breakpoints, double abs_tol) {
  IntegrationResult total;
  if (breakpoints.size() < 2) return total;
  const double piece_tol = abs_tol / static_cast<double>(breakpoints.size() - 1);
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const IntegrationResult part =
        integrate_adaptive(f, breakpoints[k], breakpoints[k + 1], piece_tol, 16);
    total.value += part.value;
    total.error_estimate += part.error_estimate;
    total.evaluations += part.evaluations;
    total.converged = total.converged && part.converged;
  }
  return total;
}

constexpr double kDensityTolerance = 1e-9;

inline double integrate_density_difference(const FixedPointState& s, const SampleContext& c,
                                           bool absolute) {
  auto f = [&](double z) {
    const double d = density_train(s, c, z) - density_test(s, c, z);
    return absolute ? std::abs(d) : std::max(d, 0.0);
  };
  const IntegrationResult res = integrate_pieces(f, density_breakpoints(s, c), kDensityTolerance);
  if (!res.converged) {
    throw NumericDomainError("advantage integral did not converge (estimate " +
                                 std::to_string(res.value) + ", error " +
                                 std::to_string(res.error_estimate) + ")",
                             res.value, res.error_estimate);
  }
  return res.value;
}

// Mass of a density over the integration window; 1 up to quadrature error.
inline double density_mass(const FixedPointState& s, const SampleContext& c, bool train) {
  auto f = [&](double z) { return train ? density_train(s, c, z) : density_test(s, c, z); };
  return integrate_pieces(f, density_breakpoints(s, c), kDensityTolerance).value;
}

// Advantage of the likelihood-ratio adversary 1{mu_train > mu_test} for one
// probe: integral of max(mu_train - mu_test, 0).
inline double advantage_sample(const FixedPointState& s, const SampleContext& c) {
  if (s.gamma == 0) return 0.0;
  return std::clamp(integrate_density_difference(s, c, false), 0.0, 1.0);
}

// Half the L1 distance between the two densities (equal to advantage_sample).
inline double total_variation(const FixedPointState& s, const SampleContext& c) {
  if (s.gamma == 0) return 0.0;
  return 0.5 * integrate_density_difference(s, c, true);
}

// Advantage of a single-threshold rule on the output: predict "member" when
// zhat > threshold (member_above) or zhat < threshold.
inline double threshold_rule_advantage(const FixedPointState& s, const SampleContext& c,
                                       double threshold, bool member_above) {
  const double diff = cdf_test(s, c, threshold) - cdf_train(s, c, threshold);
  return member_above ? diff : -diff;
}

// E over Z' ~ N(0, sigma_beta^2) and y | Z' ~ Bernoulli(rho'(Z')) of the
// per-probe optimal advantage.
inline double advantage_average(const FixedPointState& s, double sigma_beta) {
  if (s.gamma == 0) return 0.0;
  const QuadratureRule rule = signal_axis_rule(sigma_beta, 64);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double z = sigma_beta * rule.nodes[i];
    const double p1 = rho_prime(z);
    acc += rule.weights[i] * (p1 * advantage_sample(s, {z, 1}) +
                              (1.0 - p1) * advantage_sample(s, {z, 0}));
  }
  return std::clamp(acc, 0.0, 1.0);
}

namespace detail {

// The error integrands switch on at the origin over 1/sigma_beta (the label
// sigmoid) and over sigma / (alpha sigma_beta) (the output CDF).
inline QuadratureRule error_rule(const FixedPointState& s, double sigma_beta) {
  const double ratio = std::abs(s.alpha / s.sigma);
  const double sharpness = sigma_beta * std::max(1.0, ratio);
  if (sharpness <= 1.0) return gauss_hermite(80);
  return composite_gaussian(1.0 / sharpness, 8, 9.0);
}

}  // namespace detail

// Misclassification error 2 E[rho'(-Z) Phi(alpha Z / sigma)], Z ~ N(0, sigma_beta^2):
// the probability of label 0 with a positive output, doubled by symmetry.
inline double test_error(const FixedPointState& s, double sigma_beta) {
  const QuadratureRule rule = detail::error_rule(s, sigma_beta);
  const double ratio = s.alpha / s.sigma;
  return std::clamp(2.0 * rule.expect([&](double z) {
    const double t = sigma_beta * z;
    return rho_prime(-t) * gaussian_cdf(ratio * t);
  }), 0.0, 0.5);
}

// E[rho'(Z) Phi(-alpha Z / sigma)]; exactly half of test_error.
inline double test_error_half_form(const FixedPointState& s, double sigma_beta) {
  const QuadratureRule rule = detail::error_rule(s, sigma_beta);
  const double ratio = s.alpha / s.sigma;
  return rule.expect([&](double z) {
    const double t = sigma_beta * z;
    return rho_prime(t) * gaussian_cdf(-ratio * t);
  });
}

struct GlobalThresholdTheory {
  double advantage = 0.0;
  double loss_threshold = 0.0;
};

// Best single loss threshold applied to every probe: predict "member" when
// l(y, zhat) < t. Averaged over probes like advantage_average. In output
// space, with c = rho^{-1}(t), a y = 0 probe is flagged when zhat < c and a
// y = 1 probe when zhat > -c.
inline GlobalThresholdTheory global_threshold_advantage(const FixedPointState& s,
                                                        double sigma_beta) {
  const QuadratureRule rule = signal_axis_rule(sigma_beta, 64);
  auto gain = [&](double c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double z = sigma_beta * rule.nodes[i];
      const double p1 = rho_prime(z);
      const SampleContext one{z, 1}, zero{z, 0};
      const double adv1 = threshold_rule_advantage(s, one, -c, true);
      const double adv0 = threshold_rule_advantage(s, zero, c, false);
      acc += rule.weights[i] * (p1 * adv1 + (1.0 - p1) * adv0);
    }
    return acc;
  };
  const double reach = 6.0 * s.alpha * sigma_beta + 8.0 * s.sigma + s.gamma + 5.0;
  constexpr int kScan = 800;
  double best_c = -reach, best = -std::numeric_limits<double>::infinity();
  const double h = 2.0 * reach / kScan;
  for (int k = 0; k <= kScan; ++k) {
    const double c = -reach + k * h;
    const double v = gain(c);
    if (v > best) {
      best = v;
      best_c = c;
    }
  }
  // Golden-section polish inside the best scan cell.
  double a = best_c - h, b = best_c + h;
  const double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = gain(x1), f2 = gain(x2);
  for (int it = 0; it < 60 && b - a > 1e-10 * std::max(1.0, reach); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = gain(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = gain(x1);
    }
  }
  const double c = f1 > f2 ? x1 : x2;
  const double v = std::max(f1, f2);
  GlobalThresholdTheory out;
  if (v >= best) {
    out.advantage = v;
    out.loss_threshold = rho(c);
  } else {
    out.advantage = best;
    out.loss_threshold = rho(best_c);
  }
  return out;
}

struct TheoreticalOutputs {
  std::vector<double> train;
  std::vector<double> test;
};

// Independent draws from mu_train and mu_test for one probe.
inline TheoreticalOutputs sample_theoretical_outputs(const FixedPointState& s,
                                                     const SampleContext& c, std::size_t count,
                                                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  TheoreticalOutputs out;
  out.train.reserve(count);
  out.test.reserve(count);
  const double m = s.alpha * c.z_star;
  for (std::size_t i = 0; i < count; ++i) {
    out.test.push_back(m + s.sigma * normal(gen));
    out.train.push_back(prox_logistic(s.gamma, c.y, m + s.sigma * normal(gen)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trade-off points, sweeps and lambda tuning.

struct TradeoffPoint {
  BiLevelSpec spec;
  FixedPointState state;
  double test_error = 0.0;
  double advantage = 0.0;
  double solve_residual = 0.0;
};

struct PointOptions {
  SolveOptions solve;
  bool with_advantage = true;
};

inline TradeoffPoint evaluate_point(const BiLevelSpec& spec, const PointOptions& options = {}) {
  const SolveReport report = solve(spec, options.solve);
  TradeoffPoint point;
  point.spec = spec;
  point.state = report.state;
  point.solve_residual = report.residual;
  point.test_error = test_error(report.state, spec.sigma_beta);
  point.advantage = options.with_advantage ? advantage_average(report.state, spec.sigma_beta)
                                           : std::numeric_limits<double>::quiet_NaN();
  return point;
}

enum class SweepAxis { kLambda, kPhi, kDelta };

inline const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kLambda:
      return "lambda";
    case SweepAxis::kPhi:
      return "phi";
    case SweepAxis::kDelta:
      return "delta";
  }
  return "?";
}

inline BiLevelSpec with_axis(BiLevelSpec spec, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::kLambda:
      spec.lambda = value;
      break;
    case SweepAxis::kPhi:
      spec.phi = value;
      break;
    case SweepAxis::kDelta:
      spec.delta = value;
      break;
  }
  return spec;
}

struct SweepEntry {
  double axis_value = 0.0;
  std::optional<TradeoffPoint> point;
  std::string failure;  // empty on success
};

// One entry per grid value, in grid order. Failures are recorded, not thrown.
inline std::vector<SweepEntry> sweep(const BiLevelSpec& family, SweepAxis axis,
                                     const std::vector<double>& grid,
                                     const PointOptions& options = {}) {
  std::vector<SweepEntry> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    out[i].axis_value = grid[i];
    try {
      out[i].point = evaluate_point(with_axis(family, axis, grid[i]), options);
    } catch (const std::exception& e) {
      out[i].failure = e.what();
    }
  });
  return out;
}

enum class TuneObjective { kMinError, kTargetAdvantage, kTargetError };

struct TuneRequest {
  TuneObjective objective = TuneObjective::kMinError;
  double target = 0.0;
  // For the target modes: after the grid pass, bisect in log(lambda) between
  // the bracketing grid neighbours (largest-lambda bracket) to this accuracy.
  std::optional<double> refine_tolerance;
};

struct TuneResult {
  double lambda = 0.0;
  TradeoffPoint point;
  std::vector<std::string> warnings;
};

// Picks lambda from an ascending grid. Ties between equally good grid values
// go to the larger lambda (the more private model).
inline TuneResult tune_lambda(const BiLevelSpec& family, const TuneRequest& request,
                              const std::vector<double>& grid, const PointOptions& options = {}) {
  if (grid.empty()) throw InvalidArgument("tune_lambda: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw InvalidArgument("tune_lambda: grid must be sorted ascending");
  }
  PointOptions grid_options = options;
  grid_options.with_advantage =
      options.with_advantage || request.objective == TuneObjective::kTargetAdvantage;
  const std::vector<SweepEntry> entries = sweep(family, SweepAxis::kLambda, grid, grid_options);

  TuneResult result;
  auto score = [&](const TradeoffPoint& p) {
    switch (request.objective) {
      case TuneObjective::kMinError:
        return p.test_error;
      case TuneObjective::kTargetAdvantage:
        return std::abs(p.advantage - request.target);
      case TuneObjective::kTargetError:
        return std::abs(p.test_error - request.target);
    }
    return 0.0;
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].point) {
      result.warnings.push_back("lambda=" + std::to_string(grid[i]) +
                                " skipped: " + entries[i].failure);
      continue;
    }
    if (!best || score(*entries[i].point) <= score(*entries[*best].point)) best = i;
  }
  if (!best) throw Error("tune_lambda: every grid point failed to solve");
  result.lambda = grid[*best];
  result.point = *entries[*best].point;

  if (!request.refine_tolerance || request.objective == TuneObjective::kMinError) {
    return result;
  }
  auto signed_gap = [&](const TradeoffPoint& p) {
    return request.objective == TuneObjective::kTargetError ? p.test_error - request.target
                                                            : p.advantage - request.target;
  };
  if (std::abs(signed_gap(result.point)) <= *request.refine_tolerance) return result;

  std::optional<std::size_t> bracket;
  for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
    if (!entries[i].point || !entries[i + 1].point) continue;
    if (signed_gap(*entries[i].point) * signed_gap(*entries[i + 1].point) <= 0) bracket = i;
  }
  if (!bracket) {
    result.warnings.push_back("tune_lambda: target not bracketed by the grid");
    return result;
  }
  PointOptions refine_options = options;
  refine_options.with_advantage = request.objective == TuneObjective::kTargetAdvantage;
  double lo = std::log(grid[*bracket]), hi = std::log(grid[*bracket + 1]);
  double gap_lo = signed_gap(*entries[*bracket].point);
  TradeoffPoint mid_point = result.point;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    mid_point = evaluate_point(with_axis(family, SweepAxis::kLambda, std::exp(mid)),
                               refine_options);
    const double gap = signed_gap(mid_point);
    if (std::abs(gap) <= *request.refine_tolerance) break;
    if (gap * gap_lo > 0) {
      lo = mid;
      gap_lo = gap;
    } else {
      hi = mid;
    }
  }
  if (options.with_advantage && !refine_options.with_advantage) {
    mid_point.advantage = advantage_average(mid_point.state, family.sigma_beta);
  }
  result.lambda = mid_point.spec.lambda;
  result.point = mid_point;
  return result;
}

}  // namespace mia

#endif  // MIA_THEORY_HPP_
