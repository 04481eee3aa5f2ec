#include "cicda/detection.hpp"

#include "cicda/error.hpp"

namespace cicda {

namespace {

double mismatch_rate(std::span<const int> a, std::span<const int> b) {
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i];
  return static_cast<double>(differ) / static_cast<double>(a.size());
}

}  // namespace

DetectionReport target_risk_lower_bound(const LinearModel& candidate, const LinearModel& proxy,
                                        const Dataset& source, const Matrix& target_x,
                                        std::span<const int> target_labels) {
  if (source.size() == 0 || target_x.rows() == 0) throw EmptyDataset("detection needs source and target rows");
  if (!target_labels.empty() && target_labels.size() != target_x.rows()) {
    throw ShapeMismatch("one target label per target row required");
  }
  const std::vector<int> cand_src = predict(candidate, source.x);
  const std::vector<int> proxy_src = predict(proxy, source.x);
  const std::vector<int> cand_tgt = predict(candidate, target_x);
  const std::vector<int> proxy_tgt = predict(proxy, target_x);

  DetectionReport report;
  const double cand_src_risk = mismatch_rate(cand_src, source.y);
  report.candidate_source_acc = 1.0 - cand_src_risk;
  report.proxy_source_risk = mismatch_rate(proxy_src, source.y);
  report.disagreement_source = mismatch_rate(cand_src, proxy_src);
  report.disagreement_target = mismatch_rate(cand_tgt, proxy_tgt);
  report.risk_lower_bound = cand_src_risk - 2.0 * report.proxy_source_risk +
                            (report.disagreement_target - report.disagreement_source);
  report.accuracy_upper_bound = 1.0 - report.risk_lower_bound;
  if (!target_labels.empty()) report.actual_target_acc = 1.0 - mismatch_rate(cand_tgt, target_labels);
  return report;
}

Region restrict_region(const LinearModel& proxy, const Dataset& source, const Matrix& target_x, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("region alpha must lie in [0, 1)");
  if (source.size() == 0 || target_x.rows() == 0) throw EmptyDataset("detection needs source and target rows");
  const Vector target_prob = max_probability(proxy, target_x);
  const Vector source_prob = max_probability(proxy, source.x);

  Region region;
  region.threshold = quantile(target_prob, alpha);
  // alpha = 0 keeps every source row.
  const double source_cut = alpha == 0.0 ? -1.0 : region.threshold;
  std::vector<std::size_t> source_rows;
  for (std::size_t i = 0; i < source_prob.size(); ++i) {
    if (source_prob[i] >= source_cut) source_rows.push_back(i);
  }
  for (std::size_t i = 0; i < target_prob.size(); ++i) {
    if (target_prob[i] >= region.threshold) region.target_rows.push_back(i);
  }
  if (source_rows.empty() || region.target_rows.empty()) {
    throw EmptyRegion("no rows reach the region threshold");
  }
  region.source = source.subset(source_rows);
  region.target_x = target_x.select_rows(region.target_rows);
  return region;
}

DetectionReport restricted_bound(const LinearModel& candidate, const LinearModel& proxy, const Dataset& source,
                                 const Matrix& target_x, double alpha, std::span<const int> target_labels) {
  if (!target_labels.empty() && target_labels.size() != target_x.rows()) {
    throw ShapeMismatch("one target label per target row required");
  }
  const Region region = restrict_region(proxy, source, target_x, alpha);
  std::vector<int> region_labels;
  if (!target_labels.empty()) {
    for (std::size_t r : region.target_rows) region_labels.push_back(target_labels[r]);
  }
  DetectionReport report = target_risk_lower_bound(candidate, proxy, region.source, region.target_x, region_labels);
  report.region_alpha = alpha;
  report.region_fraction_target =
      static_cast<double>(region.target_rows.size()) / static_cast<double>(target_x.rows());
  return report;
}

}  // namespace cicda
