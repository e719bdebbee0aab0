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

#ifndef MIA_LAB_DATASET_HPP_
#define MIA_LAB_DATASET_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mia/error.hpp"
#include "mia/scalar.hpp"

namespace mia::lab {

// Dimensions and ensemble parameters of a finite bi-level problem.
struct Dims {
  long n = 0;
  long p = 0;
  long d = 0;
};

struct Ensemble {
  long p = 0;
  long d = 0;
  double eta = 1.0;
  double sigma_beta = 1.0;

  void validate() const {
    if (!(d >= 1 && d < p)) throw InvalidArgument("bi-level ensemble needs 1 <= d < p");
    if (!(eta > 0) || !std::isfinite(eta)) throw InvalidArgument("eta must be > 0");
    if (!(sigma_beta >= 0) || !std::isfinite(sigma_beta)) {
      throw InvalidArgument("sigma_beta must be >= 0");
    }
  }

  // Diagonal of Sigma: p/d on the first d coordinates, eta p/(p - d) after.
  double covariance(long k) const {
    return k < d ? static_cast<double>(p) / d : eta * p / static_cast<double>(p - d);
  }

  // Standard deviation of coordinate k of x ~ N(0, Sigma / p).
  double feature_scale(long k) const { return std::sqrt(covariance(k) / p); }

  // ||Sigma^{1/2} beta||^2 / p for a concrete beta; tends to sigma_beta^2.
  double effective_kappa(const Eigen::VectorXd& beta) const {
    double acc = 0.0;
    for (long k = 0; k < p; ++k) acc += covariance(k) * beta[k] * beta[k];
    return std::sqrt(acc / p);
  }
};

struct FiniteDataset {
  Eigen::MatrixXd features;  // n x p, rows are samples
  Eigen::VectorXd labels;    // {0, 1} stored as doubles
  Eigen::VectorXd beta_star;
  Dims dims;
  double eta = 1.0;
  double sigma_beta = 1.0;
  std::uint64_t seed = 0;

  Ensemble ensemble() const { return {dims.p, dims.d, eta, sigma_beta}; }
};

inline Eigen::VectorXd sample_beta_star(const Ensemble& e, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(e.p);
  for (long k = 0; k < e.d; ++k) beta[k] = e.sigma_beta * normal(gen);
  return beta;
}

// n rows drawn from N(0, Sigma / p).
inline Eigen::MatrixXd sample_features(const Ensemble& e, long n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, e.p);
  const double head = e.feature_scale(0);
  const double tail = e.feature_scale(e.p - 1);
  // Column-major fill; row-by-row draws would be equally valid but slower.
  for (long k = 0; k < e.p; ++k) {
    const double scale = k < e.d ? head : tail;
    for (long i = 0; i < n; ++i) x(i, k) = scale * normal(gen);
  }
  return x;
}

// Labels with Pr(y = 1 | x) = rho'(x^T beta*).
inline Eigen::VectorXd sample_labels(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                                     std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::VectorXd margins = x * beta;
  Eigen::VectorXd y(x.rows());
  for (long i = 0; i < x.rows(); ++i) y[i] = unif(gen) < rho_prime(margins[i]) ? 1.0 : 0.0;
  return y;
}

inline FiniteDataset sample_dataset(long n, long p, long d, double eta, double sigma_beta,
                                    std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_dataset: n must be >= 1");
  const Ensemble e{p, d, eta, sigma_beta};
  e.validate();
  std::mt19937_64 gen(seed);
  FiniteDataset ds;
  ds.beta_star = sample_beta_star(e, gen);
  ds.features = sample_features(e, n, gen);
  ds.labels = sample_labels(ds.features, ds.beta_star, gen);
  ds.dims = {n, p, d};
  ds.eta = eta;
  ds.sigma_beta = sigma_beta;
  ds.seed = seed;
  return ds;
}

}  // namespace mia::lab

#endif  // MIA_LAB_DATASET_HPP_
