#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cicda/model.hpp"
#include "cicda/scm.hpp"

namespace cicda {

struct DetectionReport {
  double candidate_source_acc = 0.0;
  double proxy_source_risk = 0.0;
  double disagreement_source = 0.0;
  double disagreement_target = 0.0;
  // R_S(h) - 2 R_S(proxy) + (disagreement_target - disagreement_source)
  double risk_lower_bound = 0.0;
  double accuracy_upper_bound = 1.0;
  std::optional<double> region_alpha;
  std::optional<double> region_fraction_target;
  std::optional<double> actual_target_acc;
};

/// Empirical lower bound on the target risk of `candidate`, using `proxy` as
/// a stand-in for a conditionally invariant classifier. When target labels
/// are given, actual_target_acc is filled in for comparison; they never
/// enter the bound.
DetectionReport target_risk_lower_bound(const LinearModel& candidate, const LinearModel& proxy,
                                        const Dataset& source, const Matrix& target_x,
                                        std::span<const int> target_labels = {});

struct Region {
  Dataset source;
  Matrix target_x;
  std::vector<std::size_t> target_rows;  // rows of the original target kept
  double threshold = 0.0;
};

/// Keeps the source and target rows whose maximum proxy probability is at
/// least the lower alpha-quantile of those probabilities on the target.
/// alpha = 0 retains everything. Throws EmptyRegion if either side ends up
/// empty.
Region restrict_region(const LinearModel& proxy, const Dataset& source, const Matrix& target_x, double alpha);

/// target_risk_lower_bound evaluated on restrict_region(...); actual
/// accuracy, when labels are given, is measured on the retained target rows.
DetectionReport restricted_bound(const LinearModel& candidate, const LinearModel& proxy, const Dataset& source,
                                 const Matrix& target_x, double alpha, std::span<const int> target_labels = {});

}  // namespace cicda
