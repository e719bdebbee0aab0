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

#ifndef MIA_ERROR_HPP_
#define MIA_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mia {

// Root of every error thrown by the library. Callers that only care about
// "did it work" catch this; the subclasses carry diagnostics.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A non-finite value showed up where a finite one was required.
class NumericDomainError : public Error {
 public:
  NumericDomainError(const std::string& what, double at_first, double at_second)
      : Error(what), first_(at_first), second_(at_second) {}

  double first() const { return first_; }
  double second() const { return second_; }

 private:
  double first_;
  double second_;
};

// The fixed-point map left its domain (sigma or sigma*tau not representable).
class DegenerateStateError : public Error {
 public:
  enum class Which { kSigma, kSigmaTau };
  DegenerateStateError(Which which, const std::string& what)
      : Error(what), which_(which) {}
  Which which() const { return which_; }

 private:
  Which which_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual, long iterations)
      : Error(what), best_residual_(best_residual), iterations_(iterations) {}
  double best_residual() const { return best_residual_; }
  long iterations() const { return iterations_; }

 private:
  double best_residual_;
  long iterations_;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, double gradient_norm)
      : Error(what), gradient_norm_(gradient_norm) {}
  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

}  // namespace mia

#endif  // MIA_ERROR_HPP_
