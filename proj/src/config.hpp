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

#ifndef MIA_SRC_CONFIG_HPP_
#define MIA_SRC_CONFIG_HPP_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mia/bilevel.hpp"
#include "mia/error.hpp"

namespace mia::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitCompute = 2,
  kExitPartialSweep = 3,
  kExitValidationMismatch = 4,
  kExitUnderpowered = 5,
};

// Bad flags, config files or parameter values.
class UsageError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

using KeyValues = std::map<std::string, std::string>;

// Lower case, '_' folded into '-', surrounding blanks removed.
std::string normalize_key(const std::string& key);

// Flat key=value lines; '#' starts a comment; blank lines ignored.
KeyValues parse_config(std::istream& in, const std::string& source = "config");
KeyValues read_config_file(const std::string& path);

// "start:stop:count:log|lin"; a bare number is a one-point grid.
struct Grid {
  double start = 0.0;
  double stop = 0.0;
  long count = 1;
  bool log = true;

  std::vector<double> values() const;
};

Grid parse_grid(const std::string& text);

struct RunConfig {
  std::string command;
  std::optional<double> delta, phi, sigma_beta, lambda;
  double eta = 1.0;
  std::string axis = "lambda";
  std::string grid;
  std::string lambda_grid = "0.01:100:25:log";
  std::string tune = "none";  // none | min-error | target-error | target-advantage
  std::optional<double> target;
  long n = 500;
  long trials = 500;
  long models = 50;
  long probes = 4;
  std::uint64_t seed = 1;
  std::string out;
  std::string attack_kind = "global-threshold";
  double fpr_budget = 0.01;
  double bin_width = 0.05;
  double ks_threshold = 0.08;
  bool null_arms = false;

  // Full spec; throws UsageError naming the first missing field. Fields
  // named in `skip` (swept or tuned) may be absent.
  BiLevelSpec spec(const std::vector<std::string>& skip = {}) const;

  // One comment line with the version and every resolved field.
  std::string header() const;
};

// Types and ranges are checked here, before any computation.
RunConfig resolve_config(const std::string& command, const KeyValues& values);

}  // namespace mia::cli

#endif  // MIA_SRC_CONFIG_HPP_
