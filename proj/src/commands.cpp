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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mia/format.hpp"
#include "mia/lab/attacks.hpp"
#include "mia/lab/experiment.hpp"
#include "mia/lab/stats.hpp"
#include "mia/solver.hpp"
#include "mia/theory.hpp"

namespace mia::cli {
namespace {

using mia::format_double;

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot write '" + path + "'");
  return file;
}

// Commas and line breaks would break the row; quotes are dropped with them.
std::string csv_text(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  }
  return s;
}

SweepAxis to_axis(const std::string& name) {
  if (name == "phi") return SweepAxis::kPhi;
  if (name == "delta") return SweepAxis::kDelta;
  return SweepAxis::kLambda;
}

}  // namespace

int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const BiLevelSpec spec = config.spec();
  const SolveReport report = solve(spec);
  const FixedPointState& s = report.state;
  std::ostringstream csv;
  csv << config.header() << '\n'
      << "alpha,sigma,gamma,theta,tau,r,residual,iterations\n"
      << format_double(s.alpha) << ',' << format_double(s.sigma) << ','
      << format_double(s.gamma) << ',' << format_double(s.theta) << ','
      << format_double(s.tau) << ',' << format_double(s.r) << ','
      << format_double(report.residual) << ',' << report.iterations << '\n';
  out << csv.str();
  if (!config.out.empty()) open_output(config.out) << csv.str();
  (void)err;
  return kExitOk;
}

int cmd_tradeoff(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.grid.empty()) throw UsageError("tradeoff needs --grid");
  const SweepAxis axis = to_axis(config.axis);
  std::vector<std::string> skip = {config.axis};
  if (config.tune != "none") skip.push_back("lambda");
  const BiLevelSpec family = config.spec(skip);
  const std::vector<double> grid = parse_grid(config.grid).values();

  std::vector<SweepEntry> entries;
  if (config.tune == "none") {
    entries = sweep(family, axis, grid);
  } else {
    const std::vector<double> lambdas = parse_grid(config.lambda_grid).values();
    TuneRequest request;
    if (config.tune == "min-error") {
      request.objective = TuneObjective::kMinError;
    } else {
      request.objective = config.tune == "target-error" ? TuneObjective::kTargetError
                                                        : TuneObjective::kTargetAdvantage;
      request.target = *config.target;
      request.refine_tolerance = 1e-4;
    }
    for (double value : grid) {
      SweepEntry entry;
      entry.axis_value = value;
      try {
        const TuneResult tuned = tune_lambda(with_axis(family, axis, value), request, lambdas);
        for (const auto& w : tuned.warnings) err << "warning: " << config.axis << '=' << value << ": " << w << '\n';
        entry.point = tuned.point;
      } catch (const std::exception& e) {
        entry.failure = e.what();
      }
      entries.push_back(std::move(entry));
    }
  }

  std::ostringstream csv;
  csv << config.header() << '\n'
      << "axis_name,axis_value,lambda,delta,phi,eta,sigma_beta,test_error,advantage,residual,"
         "reason\n";
  long ok = 0;
  for (const SweepEntry& e : entries) {
    const BiLevelSpec s = e.point ? e.point->spec : with_axis(family, axis, e.axis_value);
    const bool lambda_known = e.point || config.tune == "none";
    csv << config.axis << ',' << format_double(e.axis_value) << ','
        << (lambda_known ? format_double(s.lambda) : std::string()) << ','
        << format_double(s.delta) << ',' << format_double(s.phi) << ',' << format_double(s.eta)
        << ',' << format_double(s.sigma_beta) << ',';
    if (e.point) {
      ++ok;
      csv << format_double(e.point->test_error) << ',' << format_double(e.point->advantage)
          << ',' << format_double(e.point->solve_residual) << ",\n";
    } else {
      csv << ",,," << csv_text(e.failure) << '\n';
      err << "warning: " << config.axis << '=' << format_double(e.axis_value)
          << " failed: " << e.failure << '\n';
    }
  }
  if (config.out.empty()) {
    out << csv.str();
  } else {
    open_output(config.out) << csv.str();
    out << "tradeoff rows=" << entries.size() << " ok=" << ok << " out=" << config.out << '\n';
  }
  const bool enough = static_cast<double>(ok) >= 0.9 * static_cast<double>(entries.size());
  return enough ? kExitOk : kExitPartialSweep;
}

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const BiLevelSpec requested = config.spec();
  const lab::LabSpec lab_spec = lab::LabSpec::from_bilevel(requested, config.n);
  try {
    lab_spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("validate: ") + e.what());
  }
  // Theory at the realized ratios n/p and p/d.
  const BiLevelSpec spec = lab_spec.bilevel();
  const FixedPointState state = solve(spec).state;

  const Eigen::VectorXd beta = lab::draw_beta_star(lab_spec, config.seed);
  const std::vector<lab::Probe> probes = lab::draw_probes(lab_spec, beta, config.probes, config.seed);
  const lab::LeaveOneOutResult result =
      lab::leave_one_out_experiment(lab_spec, beta, probes, config.trials, config.seed);

  double worst_train = 0.0, worst_test = 0.0;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const SampleContext ctx{probes[j].z_star, probes[j].y};
    const double ks_train = lab::ks_statistic(
        result.outputs[j].train, [&](double z) { return cdf_train(state, ctx, z); });
    const double ks_test = lab::ks_statistic(
        result.outputs[j].test, [&](double z) { return cdf_test(state, ctx, z); });
    worst_train = std::max(worst_train, ks_train);
    worst_test = std::max(worst_test, ks_test);
    out << "probe=" << j << " z_star=" << format_double(ctx.z_star) << " y=" << ctx.y
        << " ks_train=" << format_double(ks_train) << " ks_test=" << format_double(ks_test)
        << '\n';

    if (config.out.empty()) continue;
    const std::string stem = config.out + "_probe" + std::to_string(j);
    const std::string probe_line = "# probe=" + std::to_string(j) +
                                   " z_star=" + format_double(ctx.z_star) +
                                   " y=" + std::to_string(ctx.y) + '\n';
    {
      std::ofstream arms = open_output(stem + "_arms.csv");
      arms << config.header() << '\n' << probe_line;
      lab::write_arm_csv(arms, result, j, ctx.y);
    }
    std::ofstream density = open_output(stem + "_density.csv");
    density << config.header() << '\n' << probe_line << "z,mu_train,mu_test\n";
    const double m = state.alpha * ctx.z_star;
    const double lo = std::min(m - 8 * state.sigma, prox_logistic(state.gamma, ctx.y, m - 8 * state.sigma));
    const double hi = std::max(m + 8 * state.sigma, prox_logistic(state.gamma, ctx.y, m + 8 * state.sigma));
    constexpr int kGridPoints = 2001;
    for (int i = 0; i < kGridPoints; ++i) {
      const double z = lo + (hi - lo) * i / (kGridPoints - 1);
      density << format_double(z) << ',' << format_double(density_train(state, ctx, z)) << ','
              << format_double(density_test(state, ctx, z)) << '\n';
    }
  }

  const bool pass = worst_train < config.ks_threshold && worst_test < config.ks_threshold;
  const bool underpowered = config.trials < kMinValidateTrials;
  out << "validate ks_train=" << format_double(worst_train)
      << " ks_test=" << format_double(worst_test)
      << " threshold=" << format_double(config.ks_threshold)
      << " trials=" << result.trial_ids.size() << " failed=" << result.failed_trials
      << " result=" << (underpowered ? "underpowered" : pass ? "pass" : "fail") << '\n';
  if (underpowered) {
    err << "warning: low power: " << config.trials << " trials (need at least "
        << kMinValidateTrials << ")\n";
    return kExitUnderpowered;
  }
  return pass ? kExitOk : kExitValidationMismatch;
}

int cmd_attack(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const BiLevelSpec requested = config.spec();
  const lab::LabSpec lab_spec = lab::LabSpec::from_bilevel(requested, config.n);
  try {
    lab_spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("attack: ") + e.what());
  }
  const bool all = config.attack_kind == "all";
  std::vector<lab::AttackReport> reports;
  std::vector<double> members, nonmembers;  // losses for TPR at the FPR budget

  if (all || config.attack_kind != "sample-threshold") {
    lab::MiOptions options;
    options.null_arms = config.null_arms;
    const lab::MiExperimentResult run =
        lab::run_mi_experiment(lab_spec, config.models, config.seed, options);
    if (run.failed_models > 0) err << "warning: " << run.failed_models << " model(s) failed\n";
    members = run.pooled(true);
    nonmembers = run.pooled(false);
    if (all || config.attack_kind == "global-threshold") {
      reports.push_back(lab::attack_global_threshold(members, nonmembers));
    }
    if (all || config.attack_kind == "lrt-histogram") {
      // Label-aligned margins (2y - 1) x^T beta_hat: the loss is a monotone
      // function of this value, so it carries the same information.
      auto aligned = [](const std::vector<lab::ModelLosses>& models, bool member) {
        std::vector<double> v;
        for (const auto& m : models) {
          const auto& z = member ? m.member_outputs : m.nonmember_outputs;
          const auto& y = member ? m.member_labels : m.nonmember_labels;
          for (std::size_t i = 0; i < z.size(); ++i) v.push_back(y[i] == 1 ? z[i] : -z[i]);
        }
        return v;
      };
      reports.push_back(lab::attack_lrt_histogram(aligned(run.models, true),
                                                  aligned(run.models, false), config.bin_width));
    }
  }
  if (all || config.attack_kind == "sample-threshold") {
    lab::ShadowOptions options;
    options.shadows = config.models;
    options.targets = config.models;
    options.null_arms = config.null_arms;
    const lab::ShadowTargetData data = lab::run_shadow_experiment(lab_spec, config.seed, options);
    if (data.failed_models > 0) err << "warning: " << data.failed_models << " model(s) failed\n";
    lab::AttackReport report =
        lab::attack_sample_threshold(lab::shadow_losses_by_point(data), data.targets);
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    if (members.empty()) {
      for (const auto& t : data.targets) {
        for (std::size_t i = 0; i < t.losses.size(); ++i) {
          (t.member[i] ? members : nonmembers).push_back(t.losses[i]);
        }
      }
    }
    reports.push_back(std::move(report));
  }

  const double tpr = lab::tpr_at_fpr(members, nonmembers, config.fpr_budget);
  std::ostringstream csv;
  csv << config.header() << '\n' << "attack_kind,threshold,fpr,tpr\n";
  for (const auto& r : reports) {
    const bool global = r.kind == lab::AttackKind::kGlobalThreshold;
    const bool per_row = r.roc_thresholds.size() == r.tpr_points.size();
    out << "attack kind=" << lab::attack_name(r.kind)
        << " advantage=" << format_double(r.advantage) << " tpr_at_fpr=" << format_double(tpr)
        << " fpr_budget=" << format_double(config.fpr_budget) << " members=" << r.member_count
        << " nonmembers=" << r.nonmember_count;
    if (global) out << " threshold=" << format_double(r.thresholds.front());
    out << '\n';
    for (std::size_t i = 0; i < r.tpr_points.size(); ++i) {
      csv << lab::attack_name(r.kind) << ','
          << (per_row ? format_double(r.roc_thresholds[i]) : std::string())
          << ',' << format_double(r.tpr_points[i].fpr) << ','
          << format_double(r.tpr_points[i].tpr) << '\n';
    }
  }
  if (!config.out.empty()) open_output(config.out) << csv.str();
  return kExitOk;
}

}  // namespace mia::cli
