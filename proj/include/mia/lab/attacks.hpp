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

#ifndef MIA_LAB_ATTACKS_HPP_
#define MIA_LAB_ATTACKS_HPP_

// Empirical membership inference attacks. Threshold attacks flag a point as
// a member when its loss is strictly below the threshold.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mia/error.hpp"
#include "mia/lab/experiment.hpp"

namespace mia::lab {

enum class AttackKind { kGlobalThreshold, kSampleThreshold, kLrtHistogram };

inline const char* attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kGlobalThreshold:
      return "global-threshold";
    case AttackKind::kSampleThreshold:
      return "sample-threshold";
    case AttackKind::kLrtHistogram:
      return "lrt-histogram";
  }
  return "unknown";
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct AttackReport {
  AttackKind kind = AttackKind::kGlobalThreshold;
  double advantage = 0.0;
  std::vector<RocPoint> tpr_points;
  std::vector<double> thresholds;  // one global value, or one per attacked point
  std::vector<double> roc_thresholds;  // threshold of each ROC point, when it has one
  long member_count = 0;
  long nonmember_count = 0;
  long shadow_models = 0;
  long target_models = 0;
  long excluded_points = 0;
  std::vector<std::string> warnings;
};

namespace detail {

struct ThresholdScan {
  std::vector<double> thresholds;  // candidate cut points, ascending
  std::vector<RocPoint> roc;
  std::size_t best = 0;
};

// Every distinct rule "loss < t": t = -inf, midpoints between consecutive
// distinct merged values, and +inf. Ties in advantage keep the smallest t.
inline ThresholdScan scan_thresholds(std::vector<double> members,
                                     std::vector<double> nonmembers) {
  std::sort(members.begin(), members.end());
  std::sort(nonmembers.begin(), nonmembers.end());
  std::vector<double> values(members);
  values.insert(values.end(), nonmembers.begin(), nonmembers.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  const double n1 = static_cast<double>(members.size());
  const double n0 = static_cast<double>(nonmembers.size());
  ThresholdScan scan;
  scan.thresholds.reserve(values.size() + 1);
  scan.roc.reserve(values.size() + 1);
  std::size_t i1 = 0, i0 = 0;
  // TPR - FPR scaled by n1 n0, exact in integers so ties compare equal.
  long long best = std::numeric_limits<long long>::min();
  for (std::size_t k = 0; k <= values.size(); ++k) {
    double t;
    if (k == 0) {
      t = -std::numeric_limits<double>::infinity();
    } else {
      const double v = values[k - 1];
      while (i1 < members.size() && members[i1] <= v) ++i1;
      while (i0 < nonmembers.size() && nonmembers[i0] <= v) ++i0;
      t = k == values.size() ? std::numeric_limits<double>::infinity()
                             : 0.5 * (v + values[k]);
    }
    const RocPoint point{static_cast<double>(i0) / n0, static_cast<double>(i1) / n1};
    scan.thresholds.push_back(t);
    scan.roc.push_back(point);
    const long long score = static_cast<long long>(i1) * static_cast<long long>(nonmembers.size()) -
                            static_cast<long long>(i0) * static_cast<long long>(members.size());
    if (score > best) {
      best = score;
      scan.best = k;
    }
  }
  return scan;
}

inline double rate_below(const std::vector<double>& v, double t) {
  if (v.empty()) return 0.0;
  const auto below = std::count_if(v.begin(), v.end(), [t](double s) { return s < t; });
  return static_cast<double>(below) / static_cast<double>(v.size());
}

}  // namespace detail

// One threshold for every point, chosen to maximize in-sample TPR - FPR.
inline AttackReport attack_global_threshold(const std::vector<double>& member_losses,
                                            const std::vector<double>& nonmember_losses) {
  if (member_losses.empty() || nonmember_losses.empty()) {
    throw InvalidArgument("attack_global_threshold: both loss lists must be nonempty");
  }
  const detail::ThresholdScan scan = detail::scan_thresholds(member_losses, nonmember_losses);
  AttackReport report;
  report.kind = AttackKind::kGlobalThreshold;
  report.tpr_points = scan.roc;
  report.roc_thresholds = scan.thresholds;
  report.thresholds = {scan.thresholds[scan.best]};
  report.advantage = scan.roc[scan.best].tpr - scan.roc[scan.best].fpr;
  report.member_count = static_cast<long>(member_losses.size());
  report.nonmember_count = static_cast<long>(nonmember_losses.size());
  return report;
}

// Calibrated threshold for one point: the best-separating cut on its shadow
// losses, placed at the midpoint between the largest member loss below the
// cut and the smallest non-member loss above it.
inline double calibrate_point_threshold(const std::vector<double>& member,
                                        const std::vector<double>& nonmember) {
  const detail::ThresholdScan scan = detail::scan_thresholds(member, nonmember);
  const double cut = scan.thresholds[scan.best];
  if (std::isinf(cut)) return cut;
  double below = -std::numeric_limits<double>::infinity();
  for (double s : member) {
    if (s < cut) below = std::max(below, s);
  }
  double above = std::numeric_limits<double>::infinity();
  for (double s : nonmember) {
    if (s > cut) above = std::min(above, s);
  }
  if (std::isinf(below) || std::isinf(above)) return cut;
  return 0.5 * (below + above);
}

struct PointShadowLosses {
  std::vector<double> member;
  std::vector<double> nonmember;
};

// Groups shadow-model losses by pool point and membership arm.
inline std::vector<PointShadowLosses> shadow_losses_by_point(const ShadowTargetData& data) {
  std::vector<PointShadowLosses> by_point(static_cast<std::size_t>(data.pool_size));
  for (const auto& model : data.shadows) {
    for (std::size_t i = 0; i < by_point.size(); ++i) {
      (model.member[i] ? by_point[i].member : by_point[i].nonmember).push_back(model.losses[i]);
    }
  }
  return by_point;
}

// Per-point thresholds from shadow losses, scored on each target model as
// (share of its members flagged) - (share of its non-members flagged); the
// reported advantage is the mean over targets.
inline AttackReport attack_sample_threshold(const std::vector<PointShadowLosses>& shadows,
                                            const std::vector<ModelOnPool>& targets) {
  if (targets.empty()) throw InvalidArgument("attack_sample_threshold: no target models");
  AttackReport report;
  report.kind = AttackKind::kSampleThreshold;
  report.target_models = static_cast<long>(targets.size());
  report.thresholds.assign(shadows.size(), std::nan(""));
  std::vector<char> usable(shadows.size(), 0);
  for (std::size_t i = 0; i < shadows.size(); ++i) {
    if (shadows[i].member.empty() || shadows[i].nonmember.empty()) {
      ++report.excluded_points;
      continue;
    }
    usable[i] = 1;
    report.thresholds[i] = calibrate_point_threshold(shadows[i].member, shadows[i].nonmember);
    report.shadow_models =
        std::max<long>(report.shadow_models,
                       static_cast<long>(shadows[i].member.size() + shadows[i].nonmember.size()));
  }
  if (report.excluded_points > 0) {
    report.warnings.push_back(std::to_string(report.excluded_points) +
                              " point(s) excluded: a shadow arm was empty");
  }
  double total = 0.0;
  for (const auto& target : targets) {
    if (target.losses.size() != shadows.size()) {
      throw InvalidArgument("attack_sample_threshold: target and shadow sizes differ");
    }
    long tp = 0, fp = 0, n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < shadows.size(); ++i) {
      if (!usable[i]) continue;
      const bool flagged = target.losses[i] < report.thresholds[i];
      if (target.member[i]) {
        ++n1;
        tp += flagged ? 1 : 0;
      } else {
        ++n0;
        fp += flagged ? 1 : 0;
      }
    }
    if (n1 == 0 || n0 == 0) throw InvalidArgument("attack_sample_threshold: empty target arm");
    const RocPoint point{static_cast<double>(fp) / n0, static_cast<double>(tp) / n1};
    report.tpr_points.push_back(point);
    report.member_count += n1;
    report.nonmember_count += n0;
    total += point.tpr - point.fpr;
  }
  report.advantage = total / static_cast<double>(targets.size());
  return report;
}

// Histogram likelihood-ratio attack on raw outputs: bin k = floor(x / b),
// flag bins where the member frequency exceeds the non-member frequency.
inline AttackReport attack_lrt_histogram(const std::vector<double>& outputs_member,
                                         const std::vector<double>& outputs_nonmember,
                                         double bin_width) {
  if (!(bin_width > 0) || !std::isfinite(bin_width)) {
    throw InvalidArgument("attack_lrt_histogram: bin_width must be > 0");
  }
  if (outputs_member.empty() || outputs_nonmember.empty()) {
    throw InvalidArgument("attack_lrt_histogram: both output lists must be nonempty");
  }
  std::map<long long, std::pair<double, double>> bins;
  const double w1 = 1.0 / static_cast<double>(outputs_member.size());
  const double w0 = 1.0 / static_cast<double>(outputs_nonmember.size());
  for (double v : outputs_member) bins[static_cast<long long>(std::floor(v / bin_width))].first += w1;
  for (double v : outputs_nonmember) {
    bins[static_cast<long long>(std::floor(v / bin_width))].second += w0;
  }
  RocPoint point;
  for (const auto& [bin, q] : bins) {
    if (q.first > q.second) {
      point.tpr += q.first;
      point.fpr += q.second;
    }
  }
  AttackReport report;
  report.kind = AttackKind::kLrtHistogram;
  report.tpr_points = {point};
  report.thresholds = {bin_width};
  report.advantage = std::clamp(point.tpr - point.fpr, 0.0, 1.0);
  report.member_count = static_cast<long>(outputs_member.size());
  report.nonmember_count = static_cast<long>(outputs_nonmember.size());
  return report;
}

// Largest TPR of a rule "loss < t" whose empirical FPR is at most the budget.
inline double tpr_at_fpr(const std::vector<double>& member_losses,
                         std::vector<double> nonmember_losses, double fpr_budget) {
  if (!(fpr_budget > 0 && fpr_budget < 1)) {
    throw InvalidArgument("tpr_at_fpr: budget must lie in (0, 1)");
  }
  if (member_losses.empty() || nonmember_losses.empty()) {
    throw InvalidArgument("tpr_at_fpr: both loss lists must be nonempty");
  }
  std::sort(nonmember_losses.begin(), nonmember_losses.end());
  const auto allowed = static_cast<std::size_t>(
      std::floor(fpr_budget * static_cast<double>(nonmember_losses.size()) + 1e-9));
  if (allowed >= nonmember_losses.size()) return 1.0;
  return detail::rate_below(member_losses, nonmember_losses[allowed]);
}

}  // namespace mia::lab

#endif  // MIA_LAB_ATTACKS_HPP_
