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

#ifndef MIA_LAB_EXPERIMENT_HPP_
#define MIA_LAB_EXPERIMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mia/bilevel.hpp"
#include "mia/error.hpp"
#include "mia/format.hpp"
#include "mia/lab/dataset.hpp"
#include "mia/lab/seed.hpp"
#include "mia/lab/trainer.hpp"
#include "mia/parallel.hpp"
#include "mia/scalar.hpp"

namespace mia::lab {

// A finite problem instance: sizes plus ensemble and training parameters.
struct LabSpec {
  long n = 500;
  long p = 3000;
  long d = 1000;
  double eta = 1.0;
  double sigma_beta = 1.0;
  double lambda = 1.0;

  Ensemble ensemble() const { return {p, d, eta, sigma_beta}; }

  // The asymptotic spec with delta = n/p and phi = p/d.
  BiLevelSpec bilevel() const {
    return {static_cast<double>(n) / p, static_cast<double>(p) / d, eta, sigma_beta, lambda};
  }

  // p = round(n / delta), d = round(p / phi).
  static LabSpec from_bilevel(const BiLevelSpec& s, long n) {
    LabSpec lab;
    lab.n = n;
    lab.p = std::lround(static_cast<double>(n) / s.delta);
    lab.d = std::lround(static_cast<double>(lab.p) / s.phi);
    lab.eta = s.eta;
    lab.sigma_beta = s.sigma_beta;
    lab.lambda = s.lambda;
    return lab;
  }

  void validate() const {
    if (n < 1) throw InvalidArgument("lab: n must be >= 1");
    ensemble().validate();
    if (!(lambda > 0) || !std::isfinite(lambda)) throw InvalidArgument("lab: lambda must be > 0");
  }
};

struct RunOptions {
  TrainOptions train;
  unsigned workers = 0;  // 0: worker_count()
  double max_failure_fraction = 0.01;
};

namespace detail {

inline unsigned resolve_workers(const RunOptions& o) {
  return o.workers == 0 ? worker_count() : o.workers;
}

inline void check_failures(long failed, long total, const RunOptions& o, const char* what) {
  if (static_cast<double>(failed) > o.max_failure_fraction * static_cast<double>(total)) {
    throw TrainingError(std::string(what) + ": " + std::to_string(failed) + " of " +
                            std::to_string(total) + " fits failed",
                        std::nan(""));
  }
}

inline Eigen::MatrixXd gram_of(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd k(x.rows(), x.rows());
  k.setZero();
  k.selfadjointView<Eigen::Lower>().rankUpdate(x);
  k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
  return k;
}

}  // namespace detail

inline Eigen::VectorXd draw_beta_star(const LabSpec& spec, std::uint64_t master_seed) {
  std::mt19937_64 gen(child_seed(master_seed, kStreamBeta, 0));
  return sample_beta_star(spec.ensemble(), gen);
}

// ---------------------------------------------------------------------------
// Leave-one-out outputs on fixed probe points.

struct Probe {
  Eigen::VectorXd x;
  int y = 1;
  double z_star = 0.0;  // x^T beta*
};

// Probe points drawn from the data distribution, labels from the logistic
// model, all under one fixed beta*.
inline std::vector<Probe> draw_probes(const LabSpec& spec, const Eigen::VectorXd& beta_star,
                                      long count, std::uint64_t master_seed) {
  std::vector<Probe> probes;
  for (long j = 0; j < count; ++j) {
    std::mt19937_64 gen(child_seed(master_seed, kStreamProbe, static_cast<std::uint64_t>(j)));
    const Eigen::MatrixXd row = sample_features(spec.ensemble(), 1, gen);
    Probe probe;
    probe.x = row.row(0).transpose();
    probe.z_star = probe.x.dot(beta_star);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    probe.y = unif(gen) < rho_prime(probe.z_star) ? 1 : 0;
    probes.push_back(std::move(probe));
  }
  return probes;
}

struct ArmOutputs {
  std::vector<double> train;  // probe included in the training set
  std::vector<double> test;   // probe held out
};

struct LeaveOneOutResult {
  std::vector<ArmOutputs> outputs;  // one entry per probe, aligned with trial_ids
  std::vector<long> trial_ids;      // successful trials, ascending
  std::vector<std::uint64_t> trial_seeds;
  long failed_trials = 0;
};

// For each trial draw n fresh background points (labels from the fixed beta*),
// train once without the probe and once with it appended, and record the
// probe's output x0^T beta_hat in both arms. The background fit is shared by
// all probes of a trial.
inline LeaveOneOutResult leave_one_out_experiment(const LabSpec& spec,
                                                  const Eigen::VectorXd& beta_star,
                                                  const std::vector<Probe>& probes, long trials,
                                                  std::uint64_t master_seed,
                                                  const RunOptions& options = {}) {
  spec.validate();
  if (trials < 1) throw InvalidArgument("leave_one_out_experiment: trials must be >= 1");
  if (beta_star.size() != spec.p) throw InvalidArgument("leave_one_out_experiment: beta size");
  for (const auto& probe : probes) {
    if (probe.x.size() != spec.p) throw InvalidArgument("leave_one_out_experiment: probe size");
    if (probe.y != 0 && probe.y != 1) throw InvalidArgument("leave_one_out_experiment: label");
  }
  const auto count = static_cast<std::size_t>(trials);
  const std::size_t m = probes.size();
  std::vector<std::vector<double>> train_out(count, std::vector<double>(m));
  std::vector<std::vector<double>> test_out(count, std::vector<double>(m));
  std::vector<char> ok(count, 0);
  std::vector<std::uint64_t> seeds(count);

  parallel_for(
      count,
      [&](std::size_t t) {
        seeds[t] = child_seed(master_seed, kStreamTrial, t);
        std::mt19937_64 gen(seeds[t]);
        const Eigen::MatrixXd x = sample_features(spec.ensemble(), spec.n, gen);
        const Eigen::VectorXd y = sample_labels(x, beta_star, gen);
        const Eigen::MatrixXd k = detail::gram_of(x);
        try {
          const KernelFit without = fit_kernel(k, y, spec.lambda, spec.p, options.train);
          Eigen::MatrixXd k_aug(spec.n + 1, spec.n + 1);
          k_aug.topLeftCorner(spec.n, spec.n) = k;
          Eigen::VectorXd y_aug(spec.n + 1);
          y_aug.head(spec.n) = y;
          for (std::size_t j = 0; j < m; ++j) {
            const Eigen::VectorXd kx = x * probes[j].x;
            const double self = probes[j].x.squaredNorm();
            test_out[t][j] = kx.dot(without.coef);
            k_aug.col(spec.n).head(spec.n) = kx;
            k_aug.row(spec.n).head(spec.n) = kx.transpose();
            k_aug(spec.n, spec.n) = self;
            y_aug[spec.n] = probes[j].y;
            const KernelFit with = fit_kernel(k_aug, y_aug, spec.lambda, spec.p, options.train);
            train_out[t][j] = kx.dot(with.coef.head(spec.n)) + self * with.coef[spec.n];
          }
          ok[t] = 1;
        } catch (const TrainingError&) {
          ok[t] = 0;
        }
      },
      detail::resolve_workers(options));

  LeaveOneOutResult result;
  result.outputs.resize(m);
  for (std::size_t t = 0; t < count; ++t) {
    if (!ok[t]) {
      ++result.failed_trials;
      continue;
    }
    result.trial_ids.push_back(static_cast<long>(t));
    result.trial_seeds.push_back(seeds[t]);
    for (std::size_t j = 0; j < m; ++j) {
      result.outputs[j].train.push_back(train_out[t][j]);
      result.outputs[j].test.push_back(test_out[t][j]);
    }
  }
  detail::check_failures(result.failed_trials, trials, options, "leave_one_out_experiment");
  return result;
}

// Raw dump for one probe: columns trial, arm, output, loss, seed.
inline void write_arm_csv(std::ostream& out, const LeaveOneOutResult& r, std::size_t probe,
                          int label) {
  out << "trial,arm,output,loss,seed\n";
  const ArmOutputs& a = r.outputs.at(probe);
  for (std::size_t i = 0; i < r.trial_ids.size(); ++i) {
    for (int arm = 0; arm < 2; ++arm) {
      const double z = arm == 0 ? a.train[i] : a.test[i];
      out << r.trial_ids[i] << ',' << (arm == 0 ? "train" : "test") << ',' << format_double(z)
          << ',' << format_double(logistic_loss(label, z)) << ',' << r.trial_seeds[i] << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Member / non-member losses over independently trained models.

struct ModelLosses {
  std::uint64_t seed = 0;
  std::vector<double> member_losses, nonmember_losses;
  std::vector<double> member_outputs, nonmember_outputs;
  std::vector<int> member_labels, nonmember_labels;
  double gradient_norm = 0.0;
};

struct MiExperimentResult {
  std::vector<ModelLosses> models;  // successful models in index order
  long failed_models = 0;

  std::vector<double> pooled(bool member, bool losses = true) const {
    std::vector<double> all;
    for (const auto& m : models) {
      const auto& v = member ? (losses ? m.member_losses : m.member_outputs)
                             : (losses ? m.nonmember_losses : m.nonmember_outputs);
      all.insert(all.end(), v.begin(), v.end());
    }
    return all;
  }
};

struct MiOptions : RunOptions {
  // Replace the members by a second fresh sample; both arms then follow the
  // same distribution (a null experiment).
  bool null_arms = false;
};

// Each model draws its own beta*, trains on n fresh points and is evaluated
// on those points (members) and on n further fresh points (non-members).
inline MiExperimentResult run_mi_experiment(const LabSpec& spec, long n_models,
                                            std::uint64_t master_seed,
                                            const MiOptions& options = {}) {
  spec.validate();
  if (n_models < 1) throw InvalidArgument("run_mi_experiment: n_models must be >= 1");
  const auto count = static_cast<std::size_t>(n_models);
  std::vector<ModelLosses> slots(count);
  std::vector<char> ok(count, 0);
  parallel_for(
      count,
      [&](std::size_t mi) {
        ModelLosses& rec = slots[mi];
        rec.seed = child_seed(master_seed, kStreamModel, mi);
        std::mt19937_64 gen(rec.seed);
        const Ensemble e = spec.ensemble();
        const Eigen::VectorXd beta = sample_beta_star(e, gen);
        const Eigen::MatrixXd x = sample_features(e, spec.n, gen);
        const Eigen::VectorXd y = sample_labels(x, beta, gen);
        const Eigen::MatrixXd x_out = sample_features(e, spec.n, gen);
        const Eigen::VectorXd y_out = sample_labels(x_out, beta, gen);
        Eigen::MatrixXd x_in = x;
        Eigen::VectorXd y_in = y;
        if (options.null_arms) {
          x_in = sample_features(e, spec.n, gen);
          y_in = sample_labels(x_in, beta, gen);
        }
        TrainedModel model;
        try {
          model = train(x, y, spec.lambda, options.train);
        } catch (const TrainingError&) {
          return;
        }
        rec.gradient_norm = model.gradient_norm;
        auto record = [&](const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys,
                          std::vector<double>& losses, std::vector<double>& outputs,
                          std::vector<int>& labels) {
          const Eigen::VectorXd z = xs * model.beta_hat;
          for (long i = 0; i < z.size(); ++i) {
            const int label = static_cast<int>(ys[i]);
            outputs.push_back(z[i]);
            labels.push_back(label);
            losses.push_back(logistic_loss(label, z[i]));
          }
        };
        record(x_in, y_in, rec.member_losses, rec.member_outputs, rec.member_labels);
        record(x_out, y_out, rec.nonmember_losses, rec.nonmember_outputs, rec.nonmember_labels);
        ok[mi] = 1;
      },
      detail::resolve_workers(options));

  MiExperimentResult result;
  for (std::size_t mi = 0; mi < count; ++mi) {
    if (ok[mi]) {
      result.models.push_back(std::move(slots[mi]));
    } else {
      ++result.failed_models;
    }
  }
  detail::check_failures(result.failed_models, n_models, options, "run_mi_experiment");
  return result;
}

// ---------------------------------------------------------------------------
// Misclassification rate on fresh points.

struct EmpiricalError {
  double error = 0.0;
  std::vector<double> per_model;
};

inline EmpiricalError empirical_test_error(const LabSpec& spec, long n_models, long test_points,
                                           std::uint64_t master_seed,
                                           const RunOptions& options = {}) {
  spec.validate();
  if (n_models < 1 || test_points < 1) {
    throw InvalidArgument("empirical_test_error: counts must be >= 1");
  }
  const auto count = static_cast<std::size_t>(n_models);
  std::vector<double> errors(count, std::nan(""));
  parallel_for(
      count,
      [&](std::size_t mi) {
        std::mt19937_64 gen(child_seed(master_seed, kStreamModel, mi));
        const Ensemble e = spec.ensemble();
        const Eigen::VectorXd beta = sample_beta_star(e, gen);
        const Eigen::MatrixXd x = sample_features(e, spec.n, gen);
        const Eigen::VectorXd y = sample_labels(x, beta, gen);
        TrainedModel model;
        try {
          model = train(x, y, spec.lambda, options.train);
        } catch (const TrainingError&) {
          return;
        }
        std::mt19937_64 held(child_seed(master_seed, kStreamHoldout, mi));
        long wrong = 0;
        constexpr long kChunk = 2000;
        for (long done = 0; done < test_points; done += kChunk) {
          const long rows = std::min(kChunk, test_points - done);
          const Eigen::MatrixXd xt = sample_features(e, rows, held);
          const Eigen::VectorXd yt = sample_labels(xt, beta, held);
          const Eigen::VectorXd z = xt * model.beta_hat;
          for (long i = 0; i < rows; ++i) wrong += ((z[i] > 0) != (yt[i] > 0.5)) ? 1 : 0;
        }
        errors[mi] = static_cast<double>(wrong) / static_cast<double>(test_points);
      },
      detail::resolve_workers(options));

  EmpiricalError result;
  long failed = 0;
  for (double e : errors) {
    if (std::isnan(e)) {
      ++failed;
    } else {
      result.per_model.push_back(e);
    }
  }
  detail::check_failures(failed, n_models, options, "empirical_test_error");
  result.error = std::accumulate(result.per_model.begin(), result.per_model.end(), 0.0) /
                 static_cast<double>(result.per_model.size());
  return result;
}

// ---------------------------------------------------------------------------
// Shadow / target models on a shared pool, for per-point threshold calibration.

struct ModelOnPool {
  std::vector<double> losses;  // loss of this model on every pool point
  std::vector<char> member;    // membership label used by the attack
};

struct ShadowTargetData {
  long pool_size = 0;
  std::vector<ModelOnPool> shadows;
  std::vector<ModelOnPool> targets;
  long failed_models = 0;
};

struct ShadowOptions : RunOptions {
  long shadows = 50;
  long targets = 50;
  // Record membership from an independent random half instead of the half the
  // model was trained on, so that both arms are identically distributed.
  bool null_arms = false;
};

// A pool of 2n points under one beta*; every shadow and target model trains
// on a uniformly random half of it.
inline ShadowTargetData run_shadow_experiment(const LabSpec& spec, std::uint64_t master_seed,
                                              const ShadowOptions& options = {}) {
  spec.validate();
  if (options.shadows < 1 || options.targets < 1) {
    throw InvalidArgument("run_shadow_experiment: need >= 1 shadow and target model");
  }
  const long pool = 2 * spec.n;
  std::mt19937_64 gen(child_seed(master_seed, kStreamBeta, 1));
  const Ensemble e = spec.ensemble();
  const Eigen::VectorXd beta = sample_beta_star(e, gen);
  const Eigen::MatrixXd x = sample_features(e, pool, gen);
  const Eigen::VectorXd y = sample_labels(x, beta, gen);
  const Eigen::MatrixXd k = detail::gram_of(x);

  const auto total = static_cast<std::size_t>(options.shadows + options.targets);
  std::vector<ModelOnPool> models(total);
  std::vector<char> ok(total, 0);
  parallel_for(
      total,
      [&](std::size_t mi) {
        std::mt19937_64 sub(child_seed(master_seed, kStreamSubset, mi));
        std::vector<long> order(static_cast<std::size_t>(pool));
        std::iota(order.begin(), order.end(), 0L);
        std::shuffle(order.begin(), order.end(), sub);
        std::vector<long> chosen(order.begin(), order.begin() + spec.n);
        std::sort(chosen.begin(), chosen.end());
        const Eigen::MatrixXd k_sub = k(chosen, chosen);
        const Eigen::VectorXd y_sub = y(chosen);
        KernelFit fit;
        try {
          fit = fit_kernel(k_sub, y_sub, spec.lambda, spec.p, options.train);
        } catch (const TrainingError&) {
          return;
        }
        const Eigen::VectorXd z = k(Eigen::all, chosen) * fit.coef;
        ModelOnPool& rec = models[mi];
        rec.losses.resize(static_cast<std::size_t>(pool));
        rec.member.assign(static_cast<std::size_t>(pool), 0);
        for (long i = 0; i < pool; ++i) {
          rec.losses[i] = logistic_loss(static_cast<int>(y[i]), z[i]);
        }
        if (options.null_arms) {
          std::shuffle(order.begin(), order.end(), sub);
        }
        for (long i = 0; i < spec.n; ++i) rec.member[static_cast<std::size_t>(order[i])] = 1;
        ok[mi] = 1;
      },
      detail::resolve_workers(options));

  ShadowTargetData data;
  data.pool_size = pool;
  for (std::size_t mi = 0; mi < total; ++mi) {
    if (!ok[mi]) {
      ++data.failed_models;
      continue;
    }
    auto& bucket = static_cast<long>(mi) < options.shadows ? data.shadows : data.targets;
    bucket.push_back(std::move(models[mi]));
  }
  detail::check_failures(data.failed_models, static_cast<long>(total), options,
                         "run_shadow_experiment");
  return data;
}

}  // namespace mia::lab

#endif  // MIA_LAB_EXPERIMENT_HPP_
