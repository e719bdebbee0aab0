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

#ifndef MIA_BILEVEL_HPP_
#define MIA_BILEVEL_HPP_

#include <cmath>
#include <string>

#include "mia/error.hpp"

namespace mia {

// One asymptotic instance of ridge logistic regression on the bi-level
// ensemble: d strong features carrying total variance 1, p - d weak ones
// carrying total variance eta, ground truth supported on the strong block.
struct BiLevelSpec {
  double delta = 1.0;       // n / p
  double phi = 2.0;         // p / d, > 1
  double eta = 1.0;         // tail variance mass
  double sigma_beta = 1.0;  // signal scale
  double lambda = 1.0;      // ridge strength

  // ||Sigma^{1/2} beta*||^2 / p -> sigma_beta^2.
  double kappa() const { return sigma_beta; }

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0; };
    if (!positive(delta)) throw InvalidArgument("delta must be > 0");
    if (!(std::isfinite(phi) && phi > 1)) throw InvalidArgument("phi must be > 1");
    if (!positive(eta)) throw InvalidArgument("eta must be > 0");
    if (!positive(sigma_beta)) throw InvalidArgument("sigma_beta must be > 0");
    if (!positive(lambda)) throw InvalidArgument("lambda must be > 0");
  }
};

// Order parameters of the limiting estimator. Test outputs behave like
// alpha * Z' + sigma * W; gamma is the prox strength pulling a training
// output towards its label.
struct FixedPointState {
  double alpha = 1.0;
  double sigma = 1.0;
  double gamma = 1.0;
  double theta = 0.1;
  double tau = 1.0;
  double r = 1.0;

  double sigma_tau() const { return sigma * tau; }
};

}  // namespace mia

#endif  // MIA_BILEVEL_HPP_
