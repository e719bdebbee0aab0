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

#ifndef MIA_QUADRATURE_HPP_
#define MIA_QUADRATURE_HPP_

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mia/error.hpp"
#include "mia/scalar.hpp"

namespace mia {

enum class RuleKind {
  kGaussHermite,         // probabilists' Gauss-Hermite, weights sum to 1
  kCompositeGaussian,    // Gauss-Legendre panels under the N(0,1) density
  kGaussLegendre,        // plain [-1, 1] rule
};

// A 1-D rule. For the Gaussian kinds, sum_i w_i f(x_i) approximates E[f(Z)]
// with Z ~ N(0, 1).
struct QuadratureRule {
  RuleKind kind = RuleKind::kGaussHermite;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <typename F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

// Tensor product of two 1-D Gaussian rules, for E[f(Z1, Z2)] with Z1, Z2
// independent standard normals.
struct TensorRule {
  QuadratureRule z1;
  QuadratureRule z2;

  std::size_t size() const { return z1.size() * z2.size(); }
};

inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre: need at least one node");
  QuadratureRule rule{RuleKind::kGaussLegendre, std::vector<double>(n),
                      std::vector<double>(n)};
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return rule;
}

// n-point Gauss-Hermite rule for the standard normal measure. Nodes start
// from the Golub-Welsch eigenvalues and are polished by Newton on the
// orthonormal Hermite recurrence, which also yields the weights; the rule is
// then rescaled from the e^{-x^2} weight to the N(0,1) density.
inline QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw InvalidArgument("gauss_hermite: need at least one node");
  constexpr double kPiM4 = 0.7511255444649425;  // pi^(-1/4)
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& guess = eig.eigenvalues();

  QuadratureRule rule{RuleKind::kGaussHermite, std::vector<double>(n),
                      std::vector<double>(n)};
  for (int i = 0; i < n; ++i) {
    double z = guess[i];
    double pp = 1.0;
    for (int it = 0; it < 20; ++it) {
      double p1 = kPiM4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = std::numbers::sqrt2 * z;
    rule.weights[i] = 2.0 / (pp * pp) / std::sqrt(std::numbers::pi);
  }
  // Exact symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

// Composite Gauss-Legendre rule for the standard normal measure on
// [-cutoff, cutoff], with panel edges refined geometrically towards zero down
// to width `feature_width`. Integrands of the form rho'(-k Z) h(Z) switch on a
// length scale 1/k at the origin, which a global Gauss-Hermite rule cannot
// resolve once k is large.
inline QuadratureRule composite_gaussian(double feature_width, int points_per_panel = 12,
                                         double cutoff = 10.0) {
  if (!(feature_width > 0) || !(cutoff > 0)) {
    throw InvalidArgument("composite_gaussian: widths must be positive");
  }
  std::vector<double> edges{0.0};
  double e = std::min(feature_width, 0.5);
  while (e < 1.0) {
    edges.push_back(e);
    e *= 2.0;
  }
  for (double k = 1.0; k <= cutoff; k += 1.0) edges.push_back(k);
  if (edges.back() < cutoff) edges.push_back(cutoff);

  const QuadratureRule gl = gauss_legendre(points_per_panel);
  QuadratureRule rule{RuleKind::kCompositeGaussian, {}, {}};
  std::vector<double> pos_nodes, pos_weights;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k], b = edges[k + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const double z = mid + half * gl.nodes[i];
      pos_nodes.push_back(z);
      pos_weights.push_back(half * gl.weights[i] * gaussian_pdf(z));
    }
  }
  const std::size_t h = pos_nodes.size();
  rule.nodes.resize(2 * h);
  rule.weights.resize(2 * h);
  for (std::size_t i = 0; i < h; ++i) {
    rule.nodes[h - 1 - i] = -pos_nodes[i];
    rule.weights[h - 1 - i] = pos_weights[i];
    rule.nodes[h + i] = pos_nodes[i];
    rule.weights[h + i] = pos_weights[i];
  }
  return rule;
}

// Rule for E[h(Z)] when h contains rho'(+-kappa Z): Gauss-Hermite while the
// sigmoid is no sharper than the Gaussian itself, composite panels otherwise.
inline QuadratureRule signal_axis_rule(double kappa, int hermite_nodes = 80) {
  if (kappa <= 1.0) return gauss_hermite(hermite_nodes);
  return composite_gaussian(1.0 / kappa, 8, 9.0);
}

inline TensorRule tensor_gauss_hermite(int n) {
  QuadratureRule axis = gauss_hermite(n);
  return {axis, axis};
}

// E[f(Z1, Z2)] under the tensor rule. A non-finite integrand value aborts with
// the offending node attached.
template <typename F>
double expect_2d(const TensorRule& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.z1.size(); ++i) {
    const double z1 = rule.z1.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < rule.z2.size(); ++j) {
      const double z2 = rule.z2.nodes[j];
      const double v = f(z1, z2);
      if (!std::isfinite(v)) {
        throw NumericDomainError("expect_2d: non-finite integrand at node (" +
                                     std::to_string(z1) + ", " + std::to_string(z2) + ")",
                                 z1, z2);
      }
      inner += rule.z2.weights[j] * v;
    }
    acc += rule.z1.weights[i] * inner;
  }
  return acc;
}

struct IntegrationResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
  bool converged = true;
};

namespace detail {

template <typename F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth, IntegrationResult& out) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  out.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) out.converged = false;
    out.error_estimate += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, out) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

// Adaptive Simpson on [a, b], started from `panels` equal subintervals so that
// features narrower than (b - a) are not skipped by the first coarse estimate.
// `abs_tol` is the target for the whole interval.
template <typename F>
IntegrationResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                                     int panels = 64, int max_depth = 40) {
  IntegrationResult out;
  if (!(b > a)) return out;
  const double h = (b - a) / panels;
  const double panel_tol = abs_tol / panels;
  double fa = f(a);
  ++out.evaluations;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * h;
    const double hi = (k + 1 == panels) ? b : a + (k + 1) * h;
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid), fb = f(hi);
    out.evaluations += 2;
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    out.value += detail::simpson_step(f, lo, fa, hi, fb, mid, fm, whole, panel_tol,
                                      max_depth, out);
    fa = fb;
  }
  return out;
}

}  // namespace mia

#endif  // MIA_QUADRATURE_HPP_
