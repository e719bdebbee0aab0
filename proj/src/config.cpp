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

#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mia/format.hpp"

namespace mia::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw UsageError(key + ": not a finite number: '" + text + "'");
  }
  return v;
}

long to_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw UsageError(key + ": not an integer: '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = normalize_key(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw UsageError(key + ": not a boolean: '" + text + "'");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "delta",  "phi",    "eta",         "sigma-beta",  "lambda",    "axis",
      "grid",   "lambda-grid", "tune",   "target",      "n",         "trials",
      "models", "probes", "seed",        "out",         "attack-kind", "fpr-budget",
      "bin-width", "ks-threshold", "null"};
  return keys;
}

}  // namespace

std::string normalize_key(const std::string& key) {
  std::string k = trim(key);
  for (char& c : k) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  return k;
}

KeyValues parse_config(std::istream& in, const std::string& source) {
  KeyValues values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(number) + ": expected key=value");
    }
    const std::string key = normalize_key(line.substr(0, eq));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(number) + ": empty key");
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  return parse_config(in, path);
}

std::vector<double> Grid::values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 1) {
    out.push_back(start);
    return out;
  }
  for (long i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(log ? start * std::pow(stop / start, t)
                      : start + t * (stop - start));
  }
  // Pin the endpoints exactly.
  out.front() = start;
  out.back() = stop;
  return out;
}

Grid parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(trim(part));
  Grid g;
  if (parts.size() == 1) {
    g.start = g.stop = to_double("grid", parts[0]);
    g.count = 1;
    g.log = false;
    return g;
  }
  if (parts.size() != 3 && parts.size() != 4) {
    throw UsageError("grid: expected start:stop:count:log|lin, got '" + text + "'");
  }
  g.start = to_double("grid", parts[0]);
  g.stop = to_double("grid", parts[1]);
  g.count = to_long("grid", parts[2]);
  g.log = true;
  if (parts.size() == 4) {
    const std::string mode = normalize_key(parts[3]);
    if (mode == "lin") {
      g.log = false;
    } else if (mode != "log") {
      throw UsageError("grid: spacing must be 'log' or 'lin', got '" + parts[3] + "'");
    }
  }
  if (g.count < 1) throw UsageError("grid: count must be >= 1");
  if (g.log && !(g.start > 0 && g.stop > 0)) {
    throw UsageError("grid: log spacing needs positive endpoints");
  }
  return g;
}

BiLevelSpec RunConfig::spec(const std::vector<std::string>& skip) const {
  auto need = [&](const std::optional<double>& v, const std::string& name) {
    if (v) return *v;
    // Placeholder for a swept field, overwritten per grid value.
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) return name == "phi" ? 2.0 : 1.0;
    throw UsageError("missing required parameter --" + name);
  };
  BiLevelSpec s;
  s.delta = need(delta, "delta");
  s.phi = need(phi, "phi");
  s.sigma_beta = need(sigma_beta, "sigma-beta");
  s.lambda = need(lambda, "lambda");
  s.eta = eta;
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return s;
}

std::string RunConfig::header() const {
  std::ostringstream h;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  h << "# mia " << kVersion << " command=" << command << " delta=" << opt(delta)
    << " phi=" << opt(phi) << " eta=" << format_double(eta) << " sigma-beta=" << opt(sigma_beta)
    << " lambda=" << opt(lambda);
  if (command == "tradeoff") {
    h << " axis=" << axis << " grid=" << grid << " tune=" << tune;
    if (tune != "none") h << " lambda-grid=" << lambda_grid << " target=" << opt(target);
  }
  if (command == "validate" || command == "attack") {
    h << " n=" << n << " seed=" << seed;
  }
  if (command == "validate") {
    h << " trials=" << trials << " probes=" << probes
      << " ks-threshold=" << format_double(ks_threshold);
  }
  if (command == "attack") {
    h << " models=" << models << " attack-kind=" << attack_kind
      << " fpr-budget=" << format_double(fpr_budget) << " bin-width=" << format_double(bin_width)
      << " null=" << (null_arms ? "true" : "false");
  }
  return h.str();
}

RunConfig resolve_config(const std::string& command, const KeyValues& raw) {
  // An empty value means unset, as in the header of a swept or tuned run.
  KeyValues values;
  for (const auto& [key, value] : raw) {
    if (!known_keys().count(key)) throw UsageError("unknown parameter '" + key + "'");
    if (!trim(value).empty()) values[key] = value;
  }
  RunConfig c;
  c.command = command;
  auto has = [&](const char* k) { return values.count(k) > 0; };
  auto at = [&](const char* k) -> const std::string& { return values.at(k); };
  if (has("delta")) c.delta = to_double("delta", at("delta"));
  if (has("phi")) c.phi = to_double("phi", at("phi"));
  if (has("sigma-beta")) c.sigma_beta = to_double("sigma-beta", at("sigma-beta"));
  if (has("lambda")) c.lambda = to_double("lambda", at("lambda"));
  if (has("eta")) c.eta = to_double("eta", at("eta"));
  if (has("axis")) c.axis = normalize_key(at("axis"));
  if (has("grid")) c.grid = at("grid");
  if (has("lambda-grid")) c.lambda_grid = at("lambda-grid");
  if (has("tune")) c.tune = normalize_key(at("tune"));
  if (has("target")) c.target = to_double("target", at("target"));
  if (has("n")) c.n = to_long("n", at("n"));
  if (has("trials")) c.trials = to_long("trials", at("trials"));
  if (has("models")) c.models = to_long("models", at("models"));
  if (has("probes")) c.probes = to_long("probes", at("probes"));
  if (has("seed")) {
    const std::string t = trim(at("seed"));
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
      throw UsageError("seed: not an unsigned integer: '" + t + "'");
    }
    c.seed = v;
  }
  if (has("out")) c.out = at("out");
  if (has("attack-kind")) c.attack_kind = normalize_key(at("attack-kind"));
  if (has("fpr-budget")) c.fpr_budget = to_double("fpr-budget", at("fpr-budget"));
  if (has("bin-width")) c.bin_width = to_double("bin-width", at("bin-width"));
  if (has("ks-threshold")) c.ks_threshold = to_double("ks-threshold", at("ks-threshold"));
  if (has("null")) c.null_arms = to_bool("null", at("null"));

  if (c.axis != "lambda" && c.axis != "phi" && c.axis != "delta") {
    throw UsageError("axis must be lambda, phi or delta");
  }
  static const std::set<std::string> tunes = {"none", "min-error", "target-error",
                                              "target-advantage"};
  if (!tunes.count(c.tune)) throw UsageError("tune must be none, min-error, target-error or target-advantage");
  if ((c.tune == "target-error" || c.tune == "target-advantage") && !c.target) {
    throw UsageError("--tune " + c.tune + " needs --target");
  }
  if (c.tune != "none" && c.axis == "lambda") {
    throw UsageError("lambda tuning needs a phi or delta axis");
  }
  static const std::set<std::string> kinds = {"global-threshold", "sample-threshold",
                                              "lrt-histogram", "all"};
  if (!kinds.count(c.attack_kind)) {
    throw UsageError("attack-kind must be global-threshold, sample-threshold, lrt-histogram or all");
  }
  if (c.n < 1) throw UsageError("n must be >= 1");
  if (c.trials < 1) throw UsageError("trials must be >= 1");
  if (c.models < 1) throw UsageError("models must be >= 1");
  if (c.probes < 1) throw UsageError("probes must be >= 1");
  if (!(c.fpr_budget > 0 && c.fpr_budget < 1)) throw UsageError("fpr-budget must lie in (0, 1)");
  if (!(c.bin_width > 0)) throw UsageError("bin-width must be > 0");
  if (!(c.ks_threshold > 0 && c.ks_threshold <= 1)) throw UsageError("ks-threshold must lie in (0, 1]");
  return c;
}

}  // namespace mia::cli
