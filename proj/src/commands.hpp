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

#ifndef MIA_SRC_COMMANDS_HPP_
#define MIA_SRC_COMMANDS_HPP_

#include <ostream>

#include "config.hpp"

namespace mia::cli {

// Validation runs with fewer trials than this are reported as underpowered.
inline constexpr long kMinValidateTrials = 100;

// Each command writes its CSV to config.out (when set), prints results to
// `out` and diagnostics to `err`, and returns an ExitCode. Exceptions other
// than UsageError are mapped to kExitCompute by the caller.
int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_tradeoff(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_attack(const RunConfig& config, std::ostream& out, std::ostream& err);

// Parses argv (subcommand first), merges --config with the flags (flags
// win), dispatches, and maps errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mia::cli

#endif  // MIA_SRC_COMMANDS_HPP_
