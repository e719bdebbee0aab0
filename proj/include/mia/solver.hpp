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

#ifndef MIA_SOLVER_HPP_
#define MIA_SOLVER_HPP_

// Fixed-point solver for the six order parameters (alpha, sigma, gamma, theta,
// tau, r) of ridge logistic regression on the bi-level ensemble.
//
// The three "head" equations are the bi-level closed forms of the
// regularizer-side equations; the three "tail" equations are Gaussian
// expectations of the logistic prox and are evaluated by quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mia/bilevel.hpp"
#include "mia/error.hpp"
#include "mia/quadrature.hpp"
#include "mia/scalar.hpp"

namespace mia {

struct HeadUpdate {
  double alpha = 0.0;
  double gamma = 0.0;
  double sigma = 0.0;
};

struct TailUpdate {
  double r = 0.0;
  double theta = 0.0;
  double sigma_tau = 0.0;
};

// Head equations with u = sigma * tau:
//   alpha = u theta / (1 + lambda u / phi)
//   gamma = (u / delta) [1 / (phi + lambda u) + (phi - 1) / (phi + lambda u (phi - 1) / eta)]
//   kappa^2 alpha^2 + sigma^2 = ((u theta phi kappa)^2 + u^2 r^2 phi / delta) / (phi + lambda u)^2
//                               + u^2 r^2 (phi / delta)(phi - 1) / (phi + lambda u (phi - 1) / eta)^2
// The signal term of the last line is exactly kappa^2 alpha^2, so sigma is
// taken from the remaining r^2 terms directly.
inline HeadUpdate rhs_head(const BiLevelSpec& spec, double sigma_tau, double theta, double r) {
  const double u = sigma_tau;
  const double phi = spec.phi, lam = spec.lambda, delta = spec.delta, eta = spec.eta;
  const double head_den = phi + lam * u;
  const double tail_den = phi + lam * u * (phi - 1.0) / eta;

  HeadUpdate out;
  out.alpha = u * theta * phi / head_den;
  out.gamma = (u / delta) * (1.0 / head_den + (phi - 1.0) / tail_den);
  const double noise = u * u * r * r * (phi / delta) *
                       (1.0 / (head_den * head_den) + (phi - 1.0) / (tail_den * tail_den));
  if (!(noise > 0) || !std::isfinite(noise)) {
    throw DegenerateStateError(DegenerateStateError::Which::kSigma,
                               "rhs_head: noise variance is not positive");
  }
  out.sigma = std::sqrt(noise);
  return out;
}

inline HeadUpdate rhs_head(const BiLevelSpec& spec, const FixedPointState& s) {
  return rhs_head(spec, s.sigma_tau(), s.theta, s.r);
}

// Right-hand side of the third head equation, kappa^2 alpha^2 + sigma^2, in
// its literal form. Used for self-consistency checks.
inline double head_output_variance(const BiLevelSpec& spec, double sigma_tau, double theta,
                                   double r) {
  const double u = sigma_tau;
  const double phi = spec.phi, lam = spec.lambda, delta = spec.delta, eta = spec.eta;
  const double kappa = spec.kappa();
  const double head_den = phi + lam * u;
  const double tail_den = phi + lam * u * (phi - 1.0) / eta;
  const double signal = u * theta * phi * kappa;
  return (signal * signal + u * u * r * r * phi / delta) / (head_den * head_den) +
         u * u * r * r * (phi / delta) * (phi - 1.0) / (tail_den * tail_den);
}

// Evaluates the tail equations
//   r^2   = 2 E[rho'(-k Z1) rho'(p)^2]
//   theta = 2 E[rho''(-k Z1) rho'(p)]
//   sigma tau = gamma / (1 - E[2 rho'(-k Z1) / (1 + gamma rho''(p))])
// where p = prox_{gamma rho}(k alpha Z1 + sigma Z2). Since E[2 rho'(-k Z1)] = 1,
// the last denominator equals E[2 rho'(-k Z1) gamma rho''(p) / (1 + gamma rho''(p))]
// and gamma cancels; that form has no cancellation when gamma is small.
//
// Keeps the prox values from the previous call as Newton starting points, so
// repeated calls during a solve are cheap. Not thread-safe; use one per solve.
class TailEvaluator {
 public:
  TailEvaluator(TensorRule rule, double kappa) : rule_(std::move(rule)), kappa_(kappa) {
    const std::size_t n1 = rule_.z1.size();
    weight_prime_.resize(n1);
    weight_second_.resize(n1);
    for (std::size_t i = 0; i < n1; ++i) {
      const double t = -kappa_ * rule_.z1.nodes[i];
      weight_prime_[i] = rule_.z1.weights[i] * rho_prime(t);
      weight_second_[i] = rule_.z1.weights[i] * rho_second(t);
    }
    hints_.assign(rule_.size(), std::numeric_limits<double>::quiet_NaN());
  }

  const TensorRule& rule() const { return rule_; }

  TailUpdate operator()(double alpha, double sigma, double gamma) {
    if (!(gamma > 0) || !std::isfinite(gamma) || !std::isfinite(alpha) ||
        !std::isfinite(sigma)) {
      throw InvalidArgument("rhs_tail: gamma must be > 0 and the state finite");
    }
    const std::size_t n1 = rule_.z1.size(), n2 = rule_.z2.size();
    double e_r = 0.0, e_theta = 0.0, e_st = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
      const double wp = weight_prime_[i], ws = weight_second_[i];
      if (wp == 0.0 && ws == 0.0) continue;
      const double shift = kappa_ * alpha * rule_.z1.nodes[i];
      double in_r = 0.0, in_theta = 0.0, in_st = 0.0;
      for (std::size_t j = 0; j < n2; ++j) {
        const double v = shift + sigma * rule_.z2.nodes[j];
        double& hint = hints_[i * n2 + j];
        const double p = std::isnan(hint) ? prox_logistic(gamma, 0, v)
                                          : prox_logistic(gamma, 0, v, hint);
        hint = p;
        const double s1 = rho_prime(p);
        const double s2 = rho_second(p);
        const double w2 = rule_.z2.weights[j];
        in_r += w2 * s1 * s1;
        in_theta += w2 * s1;
        in_st += w2 * s2 / (1.0 + gamma * s2);
      }
      e_r += wp * in_r;
      e_theta += ws * in_theta;
      e_st += wp * in_st;
    }
    TailUpdate out;
    out.r = std::sqrt(2.0 * e_r);
    out.theta = 2.0 * e_theta;
    const double denom = 2.0 * e_st;
    if (!(denom > 0) || !std::isfinite(denom)) {
      throw DegenerateStateError(DegenerateStateError::Which::kSigmaTau,
                                 "rhs_tail: 1 - E6 is not positive");
    }
    out.sigma_tau = 1.0 / denom;
    if (!std::isfinite(out.r) || !std::isfinite(out.theta) || !std::isfinite(out.sigma_tau)) {
      throw NumericDomainError("rhs_tail: non-finite expectation", alpha, sigma);
    }
    return out;
  }

 private:
  TensorRule rule_;
  double kappa_;
  std::vector<double> weight_prime_;
  std::vector<double> weight_second_;
  std::vector<double> hints_;
};

inline TailUpdate rhs_tail(const BiLevelSpec& spec, const FixedPointState& s,
                           const TensorRule& rule) {
  TailEvaluator eval(rule, spec.kappa());
  return eval(s.alpha, s.sigma, s.gamma);
}

// The tail rule used unless the caller supplies one: a composite rule on the
// Z1 axis resolved down to the 1/kappa width of rho'(-kappa Z1), and
// Gauss-Hermite on Z2.
inline TensorRule default_tail_rule(double kappa, int hermite_nodes = 80) {
  TensorRule rule;
  rule.z1 = signal_axis_rule(kappa, hermite_nodes);
  rule.z2 = gauss_hermite(hermite_nodes);
  return rule;
}

struct SolveOptions {
  double tolerance = 1e-9;
  long max_iterations = 10000;
  double damping = 0.5;
  double min_damping = 1.0 / 64.0;
  int anderson_depth = 5;  // 0 gives plain damped Picard
  // Extra iterations after the tolerance is first met; the lowest-residual
  // iterate is returned.
  long polish_iterations = 2;
  std::optional<TensorRule> quadrature;  // default_tail_rule(kappa) when empty
  std::optional<FixedPointState> initial;
};

struct SolveReport {
  FixedPointState state;
  long iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  double damping_used = 1.0;
};

// One sweep of the fixed-point map: tail equations at the current
// (alpha, sigma, gamma), then head equations with the fresh (sigma tau, theta, r).
inline FixedPointState fixed_point_map(const BiLevelSpec& spec, const FixedPointState& s,
                                       TailEvaluator& tail) {
  const TailUpdate t = tail(s.alpha, s.sigma, s.gamma);
  const HeadUpdate h = rhs_head(spec, t.sigma_tau, t.theta, t.r);
  FixedPointState out;
  out.alpha = h.alpha;
  out.sigma = h.sigma;
  out.gamma = h.gamma;
  out.theta = t.theta;
  out.tau = t.sigma_tau / h.sigma;
  out.r = t.r;
  return out;
}

inline std::array<double, 6> as_array(const FixedPointState& s) {
  return {s.alpha, s.sigma, s.gamma, s.theta, s.tau, s.r};
}

inline FixedPointState from_array(const std::array<double, 6>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5]};
}

// max_i |next_i - prev_i| / max(1, |prev_i|)
inline double state_distance(const FixedPointState& prev, const FixedPointState& next) {
  const auto a = as_array(prev), b = as_array(next);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(b[i] - a[i]) / std::max(1.0, std::abs(a[i])));
  }
  return worst;
}

namespace detail {

// Type-II Anderson mixing over the last few (x, F(x) - x) pairs. Returns
// nothing when the history is too short or the least-squares system is
// singular.
class AndersonMixer {
 public:
  explicit AndersonMixer(int depth) : depth_(depth) {}

  void reset() {
    xs_.clear();
    gs_.clear();
  }

  std::optional<std::array<double, 6>> push(const std::array<double, 6>& x,
                                            const std::array<double, 6>& g, double omega) {
    if (depth_ <= 0) return std::nullopt;
    xs_.push_back(x);
    gs_.push_back(g);
    if (static_cast<int>(xs_.size()) > depth_ + 1) {
      xs_.pop_front();
      gs_.pop_front();
    }
    const int m = static_cast<int>(xs_.size()) - 1;
    if (m < 1) return std::nullopt;
    Eigen::Matrix<double, 6, Eigen::Dynamic> dx(6, m), dg(6, m);
    Eigen::Matrix<double, 6, 1> gk;
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < 6; ++i) {
        const double scale = std::max(1.0, std::abs(xs_[m][i]));
        dx(i, j) = xs_[j + 1][i] - xs_[j][i];
        dg(i, j) = (gs_[j + 1][i] - gs_[j][i]) / scale;
      }
    }
    for (int i = 0; i < 6; ++i) gk(i) = gs_[m][i] / std::max(1.0, std::abs(xs_[m][i]));
    const auto qr = dg.colPivHouseholderQr();
    if (qr.rank() < m) {
      xs_.pop_front();
      gs_.pop_front();
      return std::nullopt;
    }
    const Eigen::VectorXd c = qr.solve(gk);
    std::array<double, 6> out;
    for (int i = 0; i < 6; ++i) {
      const double scale = std::max(1.0, std::abs(xs_[m][i]));
      double v = x[i] + omega * g[i];
      for (int j = 0; j < m; ++j) v -= c(j) * (dx(i, j) + omega * dg(i, j) * scale);
      out[i] = v;
    }
    return out;
  }

 private:
  int depth_;
  std::deque<std::array<double, 6>> xs_, gs_;
};

inline bool admissible(const std::array<double, 6>& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i])) return false;
    if (i > 0 && !(a[i] > 0)) return false;
  }
  return true;
}

}  // namespace detail

// Damped Picard iteration x <- (1 - w) x + w F(x) with Anderson mixing on
// top. The damping w is halved (down to min_damping) on a degenerate map
// evaluation or when the residual grows twice in a row; either event also
// clears the Anderson history. Mixed iterates that leave the domain fall
// back to the plain damped step.
inline SolveReport solve(const BiLevelSpec& spec, const SolveOptions& options = {}) {
  spec.validate();
  if (!(options.tolerance > 0)) throw InvalidArgument("solve: tolerance must be > 0");
  if (!(options.damping > 0 && options.damping <= 1)) {
    throw InvalidArgument("solve: damping must be in (0, 1]");
  }
  if (options.anderson_depth < 0) throw InvalidArgument("solve: anderson_depth must be >= 0");
  if (options.polish_iterations < 0) {
    throw InvalidArgument("solve: polish_iterations must be >= 0");
  }
  TailEvaluator tail(options.quadrature ? *options.quadrature : default_tail_rule(spec.kappa()),
                     spec.kappa());

  double omega = options.damping;
  const double min_omega = std::min(options.min_damping, omega);
  FixedPointState x = options.initial.value_or(FixedPointState{});
  std::optional<FixedPointState> last_x, last_fx;
  double best = std::numeric_limits<double>::infinity();
  double last_residual = std::numeric_limits<double>::infinity();
  int rises = 0;
  detail::AndersonMixer mixer(options.anderson_depth);
  bool was_mixed = false;
  std::optional<SolveReport> accepted;
  long accepted_at = -1;

  auto step = [&](const FixedPointState& from, const FixedPointState& to) {
    auto a = as_array(from);
    const auto b = as_array(to);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = (1.0 - omega) * a[i] + omega * b[i];
    return from_array(a);
  };

  for (long it = 1; it <= options.max_iterations; ++it) {
    FixedPointState fx;
    try {
      fx = fixed_point_map(spec, x, tail);
    } catch (const DegenerateStateError&) {
      if (accepted) return *accepted;
      if (!last_x || (!was_mixed && omega <= min_omega)) throw;
      if (!was_mixed) omega = std::max(0.5 * omega, min_omega);
      mixer.reset();
      was_mixed = false;
      x = step(*last_x, *last_fx);
      continue;
    }
    const double residual = state_distance(x, fx);
    best = std::min(best, residual);
    if (residual <= options.tolerance) {
      if (!accepted || residual < accepted->residual) {
        accepted = SolveReport{x, it, residual, true, omega};
      }
      if (accepted_at < 0) accepted_at = it;
    }
    if (accepted && it - accepted_at >= options.polish_iterations) return *accepted;
    rises = residual > last_residual ? rises + 1 : 0;
    if (rises >= 2) {
      omega = std::max(0.5 * omega, min_omega);
      rises = 0;
      mixer.reset();
    }
    last_residual = residual;
    last_x = x;
    last_fx = fx;
    const auto xa = as_array(x), fa = as_array(fx);
    std::array<double, 6> g;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = fa[i] - xa[i];
    const auto mixed = mixer.push(xa, g, omega);
    was_mixed = mixed && detail::admissible(*mixed);
    x = was_mixed ? from_array(*mixed) : step(x, fx);
  }
  if (accepted) return *accepted;
  throw ConvergenceError("solve: no convergence after " +
                             std::to_string(options.max_iterations) + " iterations",
                         best, options.max_iterations);
}

struct LambdaInfinityLimit {
  double alpha_over_sigma_sq = 0.0;
  double theta = 0.0;
};

// lambda -> infinity limit of the bi-level system: sigma tau -> 4, r^2 -> 1/4,
// theta -> E[rho''(-kappa Z)], and
//   alpha^2 / sigma^2 -> 4 theta^2 (delta phi) / (1 + eta^2 / (phi - 1)),
// where delta * phi = n / d.
inline LambdaInfinityLimit closed_form_lambda_inf(const BiLevelSpec& spec) {
  if (!(spec.phi > 1)) throw InvalidArgument("closed_form_lambda_inf: phi must be > 1");
  const double kappa = spec.kappa();
  const QuadratureRule rule = signal_axis_rule(kappa);
  LambdaInfinityLimit out;
  out.theta = rule.expect([&](double z) { return rho_second(-kappa * z); });
  out.alpha_over_sigma_sq = 4.0 * out.theta * out.theta * spec.delta * spec.phi /
                            (1.0 + spec.eta * spec.eta / (spec.phi - 1.0));
  return out;
}

}  // namespace mia

#endif  // MIA_SOLVER_HPP_
