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

#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace mia::cli {
namespace {

struct Flag {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Membership inference vs. generalization for ridge logistic regression", "mia"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, std::ostream&, std::ostream&);
  };
  const std::vector<Command> commands = {
      {"solve", "Solve the fixed-point system for one spec", cmd_solve},
      {"tradeoff", "Sweep test error and MI advantage along lambda, phi or delta", cmd_tradeoff},
      {"validate", "Compare leave-one-out Monte Carlo outputs with the limiting densities",
       cmd_validate},
      {"attack", "Run empirical membership inference attacks on trained models", cmd_attack},
  };
  static const std::vector<std::pair<const char*, const char*>> value_flags = {
      {"delta", "n / p"},
      {"phi", "p / d"},
      {"eta", "tail variance mass"},
      {"sigma-beta", "signal scale"},
      {"lambda", "ridge strength"},
      {"grid", "start:stop:count:log|lin"},
      {"axis", "lambda | phi | delta"},
      {"tune", "none | min-error | target-error | target-advantage"},
      {"target", "target value for --tune"},
      {"lambda-grid", "lambda grid for --tune"},
      {"n", "training set size"},
      {"trials", "leave-one-out trials"},
      {"models", "trained models (shadow and target counts for sample-threshold)"},
      {"probes", "probe points for validate"},
      {"seed", "master seed"},
      {"out", "output CSV path (validate: file prefix)"},
      {"attack-kind", "global-threshold | sample-threshold | lrt-histogram | all"},
      {"fpr-budget", "false positive rate budget"},
      {"bin-width", "histogram bin width"},
      {"ks-threshold", "KS pass threshold"},
  };

  std::vector<CLI::App*> subs;
  std::vector<std::vector<Flag>> flags(commands.size());
  std::vector<std::string> config_paths(commands.size());
  std::vector<bool> null_flag(commands.size(), false);
  std::vector<bool> paired_flag(commands.size(), false);
  for (std::size_t c = 0; c < commands.size(); ++c) {
    CLI::App* sub = app.add_subcommand(commands[c].name, commands[c].help);
    flags[c].reserve(value_flags.size());
    for (const auto& [key, help] : value_flags) {
      flags[c].push_back({key, "", nullptr});
      flags[c].back().option = sub->add_option(std::string("--") + key, flags[c].back().value, help);
    }
    sub->add_option("--config", config_paths[c], "key=value configuration file");
    sub->add_flag("--null", [&null_flag, c](std::int64_t) { null_flag[c] = true; },
                  "identical-arm null experiment");
    sub->add_flag("--paired", [&paired_flag, c](std::int64_t) { paired_flag[c] = true; },
                  "match test error across the axis (same as --tune target-error)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    for (CLI::App* sub : subs) {
      if (sub->parsed()) {
        out << sub->help();
        return kExitOk;
      }
    }
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  for (std::size_t c = 0; c < commands.size(); ++c) {
    if (!subs[c]->parsed()) continue;
    try {
      KeyValues values;
      if (!config_paths[c].empty()) values = read_config_file(config_paths[c]);
      for (const Flag& f : flags[c]) {
        if (f.option->count() > 0) values[f.key] = f.value;
      }
      if (null_flag[c]) values["null"] = "true";
      if (paired_flag[c]) values["tune"] = "target-error";
      const RunConfig config = resolve_config(commands[c].name, values);
      return commands[c].run(config, out, err);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitCompute;
    }
  }
  return kExitUsage;
}

}  // namespace mia::cli
