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


// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mia/lab/attacks.hpp"
#include "mia/lab/dataset.hpp"
#include "mia/lab/experiment.hpp"
#include "mia/lab/stats.hpp"
#include "mia/lab/trainer.hpp"
#include "mia/scalar.hpp"
#include "mia/solver.hpp"
#include "mia/theory.hpp"

namespace {

using namespace mia;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << ']';
    }
  }
};

// Converged states of the convergence grid, reused by the hygiene check.
std::vector<std::pair<BiLevelSpec, FixedPointState>> g_grid_states;

void criterion_1(Verdict& v) {
  const auto start = Clock::now();
  long solved = 0, failures = 0, max_iterations = 0;
  double worst_residual = 0.0, worst_spread = 0.0;
  for (double delta : {0.05, 0.1, 0.2, 0.5, 1.0}) {
    for (double phi : {2.0, 5.0, 10.0}) {
      for (double lambda : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        for (double sigma_beta : {1.0, 10.0, 50.0}) {
          const BiLevelSpec spec{delta, phi, 1.0, sigma_beta, lambda};
          std::vector<FixedPointState> found;
          try {
            FixedPointState ones;
            ones.theta = 1.0;
            FixedPointState big_gamma;
            big_gamma.gamma = 100.0;
            FixedPointState small_gamma;
            small_gamma.gamma = 0.01;
            for (const FixedPointState& init : {ones, big_gamma, small_gamma}) {
              SolveOptions options;
              options.initial = init;
              const SolveReport r = solve(spec, options);
              worst_residual = std::max(worst_residual, r.residual);
              max_iterations = std::max(max_iterations, r.iterations);
              found.push_back(r.state);
            }
          } catch (const std::exception& e) {
            ++failures;
            continue;
          }
          ++solved;
          worst_spread = std::max({worst_spread, state_distance(found[0], found[1]),
                                   state_distance(found[0], found[2])});
          g_grid_states.emplace_back(spec, found[0]);
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  v.detail << "specs=" << solved << "/225 worst_residual=" << worst_residual
           << " worst_start_spread=" << worst_spread << " max_iterations=" << max_iterations
           << " seconds=" << elapsed;
  v.require(failures == 0 && solved == 225, "every spec converges");
  v.require(worst_residual <= 1e-9, "residual <= 1e-9");
  v.require(worst_spread <= 1e-8, "multi-start agreement <= 1e-8");
  v.require(elapsed <= 300.0, "runtime <= 5 min");
}

void criterion_2(Verdict& v) {
  const BiLevelSpec spec{0.5, 5, 1, 10, 1e4};
  const FixedPointState s = solve(spec).state;
  const LambdaInfinityLimit limit = closed_form_lambda_inf(spec);
  const double st = s.sigma_tau();
  const double r2 = s.r * s.r;
  const double gld = s.gamma * spec.lambda * spec.delta;
  const double ratio = (s.alpha * s.alpha / (s.sigma * s.sigma)) / limit.alpha_over_sigma_sq;
  v.detail << "sigma_tau=" << st << " r2=" << r2 << " gamma_lambda_delta=" << gld
           << " ratio_vs_closed_form=" << ratio;
  v.require(std::abs(st - 4) <= 0.08, "|sigma tau - 4| <= 0.08");
  v.require(std::abs(r2 - 0.25) <= 0.005, "|r^2 - 1/4| <= 0.005");
  v.require(std::abs(gld - 2) <= 0.1, "|gamma lambda delta - 2| <= 0.1");
  v.require(std::abs(ratio - 1) <= 0.01, "alpha^2/sigma^2 within 1%");
}

double worst_probe_ks(const lab::LabSpec& spec, long trials, std::uint64_t seed) {
  const FixedPointState s = solve(spec.bilevel()).state;
  const Eigen::VectorXd beta = lab::draw_beta_star(spec, seed);
  const auto probes = lab::draw_probes(spec, beta, 4, seed);
  const lab::LeaveOneOutResult r = lab::leave_one_out_experiment(spec, beta, probes, trials, seed);
  double worst = 0.0;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const SampleContext c{probes[j].z_star, probes[j].y};
    worst = std::max(worst, lab::ks_statistic(r.outputs[j].train,
                                              [&](double z) { return cdf_train(s, c, z); }));
    worst = std::max(worst, lab::ks_statistic(r.outputs[j].test,
                                              [&](double z) { return cdf_test(s, c, z); }));
  }
  return worst;
}

void criterion_3(Verdict& v) {
  auto start = Clock::now();
  const double full = worst_probe_ks({500, 3000, 1000, 1.0, 50.0, 0.1}, 500, 1);
  const double full_seconds = seconds_since(start);
  start = Clock::now();
  const double smoke = worst_probe_ks({200, 1200, 400, 1.0, 50.0, 0.1}, 200, 1);
  const double smoke_seconds = seconds_since(start);
  v.detail << "full_max_ks=" << full << " full_seconds=" << full_seconds
           << " smoke_max_ks=" << smoke << " smoke_seconds=" << smoke_seconds
           << " workers=" << worker_count();
  v.require(full < 0.08, "full KS < 0.08 on every probe and arm");
  v.require(full_seconds <= 900.0, "full run <= 15 min");
  v.require(smoke < 0.12, "smoke KS < 0.12");
  v.require(smoke_seconds <= 120.0, "smoke run <= 2 min");
}

void criterion_4(Verdict& v) {
  const BiLevelSpec spec{0.5, 5, 1, 10, 1};
  const lab::LabSpec lab_spec = lab::LabSpec::from_bilevel(spec, 1000);
  const double theory = test_error(solve(lab_spec.bilevel()).state, spec.sigma_beta);
  const double empirical = lab::empirical_test_error(lab_spec, 20, 10000, 1).error;
  v.detail << "empirical=" << empirical << " theory=" << theory;
  v.require(std::abs(empirical - theory) <= 0.02, "within 0.02");
}

void criterion_5(Verdict& v) {
  double previous_adv = -1.0, previous_gamma = 0.0, previous_var = INFINITY;
  for (double delta : {1.0, 0.5, 0.2, 0.1, 0.05, 0.02}) {
    const BiLevelSpec spec{delta, 5, 1, 10, 1};
    const FixedPointState s = solve(spec).state;
    const double adv = advantage_average(s, spec.sigma_beta);
    const double var = spec.kappa() * spec.kappa() * s.alpha * s.alpha + s.sigma * s.sigma;
    v.detail << "delta=" << delta << ":adv=" << adv << " ";
    v.require(adv > previous_adv, "advantage increasing at delta=" + std::to_string(delta));
    v.require(s.gamma > previous_gamma, "gamma increasing at delta=" + std::to_string(delta));
    v.require(var < previous_var, "output variance decreasing at delta=" + std::to_string(delta));
    previous_adv = adv;
    previous_gamma = s.gamma;
    previous_var = var;
  }
  v.require(previous_adv > 0.95, "advantage > 0.95 at delta=0.02");
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(lo * std::pow(hi / lo, i / (count - 1.0)));
  g.back() = hi;
  return g;
}

void criterion_6(Verdict& v) {
  const std::vector<double> lambdas = log_grid(0.01, 100, 25);
  for (double phi : {2.0, 5.0, 10.0}) {
    const auto entries = sweep({0.2, phi, 1, 10, 1}, SweepAxis::kLambda, lambdas);
    std::vector<double> adv, err;
    for (const auto& e : entries) {
      if (!e.point) continue;
      adv.push_back(e.point->advantage);
      err.push_back(e.point->test_error);
    }
    v.require(adv.size() == lambdas.size(), "all grid points solve at phi=" + std::to_string(phi));
    // Ascending lambda is descending 1/(lambda delta).
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < adv.size(); ++i) worst_rise = std::max(worst_rise, adv[i] - adv[i - 1]);
    // Error along increasing 1/(lambda delta): differences -, ..., -, +, ..., + (|d| <= 1e-4 ignored).
    int changes = 0, last = 0;
    bool rises_then_falls = false;
    for (std::size_t i = adv.size() - 1; i > 0; --i) {
      const double d = err[i - 1] - err[i];
      const int sign = d > 1e-4 ? 1 : (d < -1e-4 ? -1 : 0);
      if (sign == 0) continue;
      if (last != 0 && sign != last) {
        ++changes;
        if (last == 1) rises_then_falls = true;
      }
      last = sign;
    }
    const auto best = std::min_element(err.begin(), err.end()) - err.begin();
    v.detail << "phi=" << phi << ":adv_worst_rise=" << worst_rise << ",err_sign_changes=" << changes
             << ",argmin_lambda=" << lambdas[static_cast<std::size_t>(best)] << " ";
    v.require(worst_rise <= 1e-4, "advantage nondecreasing in 1/(lambda delta) at phi=" +
                                      std::to_string(phi));
    v.require(changes <= 1 && !rises_then_falls,
              "error nonincreasing then nondecreasing at phi=" + std::to_string(phi));
  }
}

void criterion_7(Verdict& v) {
  // Wide enough to reach the lambda -> infinity plateau of both curves.
  const std::vector<double> lambdas = log_grid(1e-3, 1e5, 33);
  // Same data, wider model: n/d = delta * phi held at 5.
  const BiLevelSpec narrow{2.5, 2, 1, 10, 1};
  const BiLevelSpec wide{0.5, 10, 1, 10, 1};
  PointOptions cheap;
  cheap.with_advantage = false;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& e : sweep(narrow, SweepAxis::kLambda, lambdas, cheap)) {
    if (!e.point) continue;
    lo = std::min(lo, e.point->test_error);
    hi = std::max(hi, e.point->test_error);
  }
  v.detail << "phi2_error_range=[" << lo << ',' << hi << "] ";
  for (int k = 1; k <= 5; ++k) {
    const double target = lo + (hi - lo) * k / 6.0;
    TuneRequest request;
    request.objective = TuneObjective::kTargetError;
    request.target = target;
    request.refine_tolerance = 1e-4;
    double adv[2];
    int which = 0;
    for (const BiLevelSpec& family : {narrow, wide}) {
      const TuneResult t = tune_lambda(family, request, lambdas, cheap);
      const double miss = std::abs(t.point.test_error - target);
      v.require(miss <= 0.005, "phi=" + std::to_string(family.phi) + " hits error target " +
                                   std::to_string(target));
      adv[which++] = advantage_average(t.point.state, family.sigma_beta);
    }
    v.detail << "target=" << target << ":adv_phi2=" << adv[0] << ",adv_phi10=" << adv[1] << " ";
    v.require(adv[1] <= adv[0], "advantage(phi=10) <= advantage(phi=2) at error " +
                                    std::to_string(target));
  }
}

// Label-aligned margins (2y - 1) z: the loss is a decreasing function of it.
std::vector<double> aligned_outputs(const lab::MiExperimentResult& run, bool member) {
  std::vector<double> out;
  for (const auto& m : run.models) {
    const auto& z = member ? m.member_outputs : m.nonmember_outputs;
    const auto& y = member ? m.member_labels : m.nonmember_labels;
    for (std::size_t i = 0; i < z.size(); ++i) out.push_back(y[i] == 1 ? z[i] : -z[i]);
  }
  return out;
}

void criterion_8(Verdict& v) {
  const lab::LabSpec spec{500, 3000, 1000, 1.0, 50.0, 0.1};
  const FixedPointState s = solve(spec.bilevel()).state;
  const SampleContext c{0.0, 1};
  const TheoreticalOutputs o = sample_theoretical_outputs(s, c, 100000, 1);
  const double lrt_theory = lab::attack_lrt_histogram(o.train, o.test, 0.05).advantage;
  const double oracle = advantage_sample(s, c);
  v.detail << "(a) lrt=" << lrt_theory << " advantage_sample=" << oracle;
  v.require(std::abs(lrt_theory - oracle) <= 0.02, "(a) within 0.02");

  const lab::MiExperimentResult run = lab::run_mi_experiment(spec, 100, 1);
  const double global =
      lab::attack_global_threshold(run.pooled(true), run.pooled(false)).advantage;
  const double lrt =
      lab::attack_lrt_histogram(aligned_outputs(run, true), aligned_outputs(run, false), 0.05)
          .advantage;
  v.detail << " (b) lrt=" << lrt << " global=" << global;
  v.require(lrt >= global - 0.03, "(b) lrt >= global - 0.03");

  lab::MiOptions null_mi;
  null_mi.null_arms = true;
  const lab::MiExperimentResult null_run = lab::run_mi_experiment(spec, 100, 2, null_mi);
  const double null_global =
      lab::attack_global_threshold(null_run.pooled(true), null_run.pooled(false)).advantage;
  const double null_lrt = lab::attack_lrt_histogram(aligned_outputs(null_run, true),
                                                    aligned_outputs(null_run, false), 0.05)
                              .advantage;
  lab::ShadowOptions null_shadow;
  null_shadow.null_arms = true;
  const lab::ShadowTargetData data = lab::run_shadow_experiment(spec, 3, null_shadow);
  const double null_sample =
      lab::attack_sample_threshold(lab::shadow_losses_by_point(data), data.targets).advantage;
  v.detail << " (c) global=" << null_global << " lrt=" << null_lrt << " sample=" << null_sample;
  v.require(std::abs(null_global) <= 0.05, "(c) null global within 0.05");
  v.require(std::abs(null_lrt) <= 0.05, "(c) null lrt within 0.05");
  v.require(std::abs(null_sample) <= 0.05, "(c) null sample-threshold within 0.05");
}

void criterion_9(Verdict& v) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_prox = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double gamma = std::pow(10.0, -3 + 7 * unit(gen));
    const int y = static_cast<int>(gen() & 1);
    const double x = -100 + 200 * unit(gen);
    const double w = prox_logistic(gamma, y, x);
    worst_prox = std::max(worst_prox, std::abs(prox_inverse(gamma, y, w) - x) / std::max(1.0, std::abs(x)));
  }
  v.detail << "prox_residual=" << worst_prox;
  v.require(worst_prox <= 1e-10, "prox residual <= 1e-10");

  std::normal_distribution<double> normal;
  double worst_grad = 0.0;
  for (int set = 0; set < 3; ++set) {
    const long n = 40 + 30 * set, p = 30 + 10 * set;
    const lab::FiniteDataset ds = lab::sample_dataset(n, p, p / 3, 1.0, 2.0, 100 + set);
    const double lambda = 0.5 * (set + 1);
    for (int point = 0; point < 20; ++point) {
      Eigen::VectorXd b(p);
      for (long k = 0; k < p; ++k) b[k] = normal(gen);
      const Eigen::VectorXd g = lab::ridge_logistic_gradient(ds.features, ds.labels, b, lambda);
      Eigen::VectorXd fd(p);
      for (long k = 0; k < p; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(b[k]));
        Eigen::VectorXd up = b, down = b;
        up[k] += h;
        down[k] -= h;
        fd[k] = (lab::ridge_logistic_objective(ds.features, ds.labels, up, lambda) -
                 lab::ridge_logistic_objective(ds.features, ds.labels, down, lambda)) /
                (2 * h);
      }
      worst_grad = std::max(worst_grad, (g - fd).norm() / g.norm());
    }
  }
  v.detail << " gradient_rel_error=" << worst_grad;
  v.require(worst_grad < 1e-5, "gradient vs central differences < 1e-5");

  double worst_mass = 0.0;
  std::size_t states = 0;
  for (const auto& [spec, s] : g_grid_states) {
    for (double z : {0.0, spec.sigma_beta}) {
      for (int y : {0, 1}) {
        const SampleContext c{z, y};
        worst_mass = std::max({worst_mass, std::abs(density_mass(s, c, true) - 1.0),
                               std::abs(density_mass(s, c, false) - 1.0)});
      }
    }
    ++states;
  }
  v.detail << " normalization_error=" << worst_mass << " states=" << states;
  v.require(states == 225, "all 225 grid states available");
  v.require(worst_mass <= 1e-8, "densities integrate to 1 within 1e-8");
}

}  // namespace

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  const std::vector<std::function<void(Verdict&)>> criteria = {
      criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
      criterion_6, criterion_7, criterion_8, criterion_9};
  bool all = true;
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k >= 1 && k <= static_cast<int>(criteria.size())) selected[k - 1] = true;
  }
  // The hygiene check reuses the grid states.
  if (selected[8]) selected[0] = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    Verdict v;
    const auto start = Clock::now();
    try {
      criteria[i](v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [error: " << e.what() << ']';
    }
    all = all && v.pass;
    std::printf("criterion %zu: %s %s (%.1fs)\n", i + 1, v.pass ? "PASS" : "FAIL",
                v.detail.str().c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
