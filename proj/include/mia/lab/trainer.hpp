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

#ifndef MIA_LAB_TRAINER_HPP_
#define MIA_LAB_TRAINER_HPP_

// Ridge logistic regression
//   beta_hat = argmin (1/n) sum_i l(y_i, x_i^T beta) + (lambda / 2p) ||beta||^2
// solved by damped Newton to a certified gradient norm.
//
// When n <= p the minimizer lies in the row space of X, beta = X^T a, and the
// Newton system is n x n in a (only the Gram matrix K = X X^T is needed). The
// leave-one-out experiments exploit this: adding a probe only appends one row
// and column to K.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "mia/error.hpp"
#include "mia/lab/dataset.hpp"
#include "mia/scalar.hpp"

namespace mia::lab {

struct TrainOptions {
  double tolerance = 1e-8;  // on ||grad||_2 of the objective
  int max_iterations = 200;
};

struct TrainedModel {
  Eigen::VectorXd beta_hat;
  double lambda = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

inline double ridge_logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& beta, double lambda) {
  const Eigen::VectorXd z = x * beta;
  double loss = 0.0;
  for (long i = 0; i < z.size(); ++i) loss += logistic_loss(static_cast<int>(y[i]), z[i]);
  return loss / static_cast<double>(x.rows()) +
         lambda / (2.0 * static_cast<double>(x.cols())) * beta.squaredNorm();
}

inline Eigen::VectorXd ridge_logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                               const Eigen::VectorXd& beta, double lambda) {
  const Eigen::VectorXd z = x * beta;
  Eigen::VectorXd resid(z.size());
  for (long i = 0; i < z.size(); ++i) resid[i] = rho_prime(z[i]) - y[i];
  return x.transpose() * resid / static_cast<double>(x.rows()) +
         (lambda / static_cast<double>(x.cols())) * beta;
}

// Result of the row-space solve. `margins` are X beta = K a.
struct KernelFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd margins;
  double gradient_norm = 0.0;
  int iterations = 0;
};

// Minimizes (1/n) sum_i l(y_i, (K a)_i) + (lambda / 2p) a^T K a for a Gram
// matrix K (n x n). The reported gradient norm is that of the primal
// objective at beta = X^T a, i.e. sqrt(r^T K r) with
// r = (1/n)(rho'(K a) - y) + (lambda / p) a.
inline KernelFit fit_kernel(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double lambda,
                            long p, const TrainOptions& options = {}) {
  const long n = gram.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double ridge = lambda / static_cast<double>(p);
  const double c = static_cast<double>(p) / (lambda * static_cast<double>(n));

  KernelFit fit;
  fit.coef = Eigen::VectorXd::Zero(n);
  fit.margins = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r(n), s(n), step(n), step_margins(n);
  Eigen::MatrixXd system(n, n);

  auto objective = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& z) {
    double loss = 0.0;
    for (long i = 0; i < n; ++i) loss += logistic_loss(static_cast<int>(y[i]), z[i]);
    return loss * inv_n + 0.5 * ridge * a.dot(z);
  };
  double f = objective(fit.coef, fit.margins);

  for (int it = 0; it <= options.max_iterations; ++it) {
    for (long i = 0; i < n; ++i) {
      r[i] = inv_n * (rho_prime(fit.margins[i]) - y[i]) + ridge * fit.coef[i];
      s[i] = std::sqrt(rho_second(fit.margins[i]));
    }
    const Eigen::VectorXd kr = gram * r;
    fit.gradient_norm = std::sqrt(std::max(0.0, r.dot(kr)));
    fit.iterations = it;
    if (fit.gradient_norm <= options.tolerance) return fit;
    if (it == options.max_iterations) break;

    // Solve (I + c D K) step = -(p / lambda) r through the SPD form
    // (I + c D K)^{-1} = I - c S (I + c S K S)^{-1} S K, S = D^{1/2}.
    const Eigen::VectorXd rhs = -(1.0 / ridge) * r;
    system.noalias() = c * (s.asDiagonal() * gram * s.asDiagonal());
    system.diagonal().array() += 1.0;
    const Eigen::LLT<Eigen::MatrixXd> llt(system);
    const Eigen::VectorXd k_rhs = gram * rhs;
    step = rhs - c * s.cwiseProduct(llt.solve(s.cwiseProduct(k_rhs)));
    step_margins.noalias() = gram * step;

    // Armijo backtracking; the slope is grad_a^T step = (K r)^T step.
    const double slope = kr.dot(step);
    if (!(slope < 0)) break;
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd a_new = fit.coef + t * step;
      const Eigen::VectorXd z_new = fit.margins + t * step_margins;
      const double f_new = objective(a_new, z_new);
      if (f_new <= f + 1e-4 * t * slope || (ls > 0 && std::abs(t * slope) < 1e-18)) {
        fit.coef = a_new;
        fit.margins = z_new;
        f = f_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  throw TrainingError("fit_kernel: gradient norm " + std::to_string(fit.gradient_norm) +
                          " above tolerance after " + std::to_string(fit.iterations) +
                          " Newton steps",
                      fit.gradient_norm);
}

namespace detail {

inline TrainedModel train_primal(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 double lambda, const TrainOptions& options) {
  const long n = x.rows(), p = x.cols();
  TrainedModel model;
  model.lambda = lambda;
  model.beta_hat = Eigen::VectorXd::Zero(p);
  double f = ridge_logistic_objective(x, y, model.beta_hat, lambda);
  Eigen::MatrixXd hessian(p, p);
  for (int it = 0; it <= options.max_iterations; ++it) {
    const Eigen::VectorXd grad = ridge_logistic_gradient(x, y, model.beta_hat, lambda);
    model.gradient_norm = grad.norm();
    model.iterations = it;
    if (model.gradient_norm <= options.tolerance) return model;
    if (it == options.max_iterations) break;
    const Eigen::VectorXd z = x * model.beta_hat;
    Eigen::VectorXd weights(n);
    for (long i = 0; i < n; ++i) weights[i] = std::sqrt(rho_second(z[i]) / n);
    const Eigen::MatrixXd wx = weights.asDiagonal() * x;
    hessian.setZero();
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(wx.transpose());
    hessian.diagonal().array() += lambda / static_cast<double>(p);
    const Eigen::VectorXd step =
        -hessian.selfadjointView<Eigen::Lower>().llt().solve(grad);
    const double slope = grad.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd candidate = model.beta_hat + t * step;
      const double f_new = ridge_logistic_objective(x, y, candidate, lambda);
      if (f_new <= f + 1e-4 * t * slope || (ls > 0 && std::abs(t * slope) < 1e-18)) {
        model.beta_hat = candidate;
        f = f_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  throw TrainingError("train: gradient norm " + std::to_string(model.gradient_norm) +
                          " above tolerance",
                      model.gradient_norm);
}

}  // namespace detail

// Fits on (x, y). Row-space Newton when n <= p, primal Newton otherwise; in
// both cases the returned gradient norm is recomputed from beta_hat directly.
inline TrainedModel train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                          const TrainOptions& options = {}) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw InvalidArgument("train: lambda must be > 0");
  if (x.rows() != y.size() || x.rows() == 0) throw InvalidArgument("train: shape mismatch");
  if (x.rows() > x.cols()) return detail::train_primal(x, y, lambda, options);

  Eigen::MatrixXd gram(x.rows(), x.rows());
  gram.setZero();
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  TrainOptions inner = options;
  inner.tolerance = 0.25 * options.tolerance;
  const KernelFit fit = fit_kernel(gram, y, lambda, x.cols(), inner);

  TrainedModel model;
  model.lambda = lambda;
  model.beta_hat = x.transpose() * fit.coef;
  model.iterations = fit.iterations;
  model.gradient_norm = ridge_logistic_gradient(x, y, model.beta_hat, lambda).norm();
  if (model.gradient_norm > options.tolerance) {
    throw TrainingError("train: certified gradient norm " + std::to_string(model.gradient_norm) +
                            " above tolerance",
                        model.gradient_norm);
  }
  return model;
}

inline TrainedModel train(const FiniteDataset& data, double lambda,
                          const TrainOptions& options = {}) {
  return train(data.features, data.labels, lambda, options);
}

}  // namespace mia::lab

#endif  // MIA_LAB_TRAINER_HPP_
