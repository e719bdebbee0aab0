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

#ifndef MIA_SCALAR_HPP_
#define MIA_SCALAR_HPP_

// Scalar primitives shared by the asymptotic theory and the finite-sample lab:
// the logistic link, the standard normal, and the proximal operators.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "mia/error.hpp"

namespace mia {

// rho(z) = log(1 + e^z), written so that |z| up to ~700 neither overflows
// nor loses relative accuracy.
inline double rho(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// The sigmoid.
inline double rho_prime(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// rho'(z)(1 - rho'(z)), evaluated as e^-|z| / (1 + e^-|z|)^2 so that it stays
// accurate in the tails where 1 - rho'(z) would round to zero.
inline double rho_second(double z) {
  const double e = std::exp(-std::abs(z));
  const double d = 1.0 + e;
  return e / (d * d);
}

// Logistic loss for a {0,1} label: l(y, z) = rho(z) - y z.
inline double logistic_loss(int y, double z) {
  return y == 1 ? rho(-z) : rho(z);
}

inline double gaussian_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684759;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double gaussian_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// g_y(z) = z + gamma (rho'(z) - y). Strictly increasing; its inverse is the
// logistic prox below.
inline double prox_inverse(double gamma, int y, double z) {
  return z + gamma * (rho_prime(z) - y);
}

// g_y'(z) = 1 + gamma rho''(z).
inline double prox_inverse_slope(double gamma, double z) {
  return 1.0 + gamma * rho_second(z);
}

// prox_{gamma l(y, .)}(v): the unique w with w + gamma (rho'(w) - y) = v.
//
// Safeguarded Newton on the monotone residual. `hint` is an optional starting
// point (any real is accepted; it is clamped into the bracket).
inline double prox_logistic(double gamma, int y, double v,
                            std::optional<double> hint = std::nullopt) {
  if (!std::isfinite(gamma) || !std::isfinite(v) || gamma < 0) {
    throw InvalidArgument("prox_logistic: gamma must be finite and >= 0, v finite");
  }
  if (y != 0 && y != 1) throw InvalidArgument("prox_logistic: label must be 0 or 1");
  if (gamma == 0) return v;

  // The root lies in (v - gamma (1 - y), v + gamma y); the extra unit of
  // slack keeps both ends strictly on the correct side of the root.
  double lo = v - gamma * std::max(y, 1 - y) - 1.0;
  double hi = v + gamma + 1.0;
  const double tol = 1e-13 * std::max(1.0, std::abs(v));

  double w = hint.value_or(std::clamp(v - gamma * (0.5 - y), lo, hi));
  w = std::clamp(w, lo, hi);
  double last_step = hi - lo;
  for (int it = 0; it < 200; ++it) {
    const double h = prox_inverse(gamma, y, w) - v;
    if (std::abs(h) <= tol) return w;
    if (h > 0) {
      hi = w;
    } else {
      lo = w;
    }
    double next = w - h / prox_inverse_slope(gamma, w);
    // Bisect when Newton leaves the bracket or stops shrinking fast enough;
    // near the sigmoid knee Newton can cycle between the two branches.
    if (!(next > lo && next < hi) || std::abs(next - w) > 0.5 * last_step) {
      next = 0.5 * (lo + hi);
    }
    last_step = std::abs(next - w);
    if (next == w || hi - lo <= 4 * std::numeric_limits<double>::epsilon() *
                                    std::max(1.0, std::abs(w))) {
      return next;
    }
    w = next;
  }
  return w;
}

// prox of t * (a v)^2 / 2 at v.
inline double prox_ridge_scalar(double t, double a, double v) {
  return v / (1.0 + t * a * a);
}

}  // namespace mia

#endif  // MIA_SCALAR_HPP_
