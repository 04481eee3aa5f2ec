#pragma once

#include <vector>

#include "cicda/numerics.hpp"

namespace cicda {

enum class PenaltyKind { kMean, kMmd };
enum class BandwidthPolicy { kMedianHeuristic, kFixed };

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::kMean;
  BandwidthPolicy bandwidth = BandwidthPolicy::kMedianHeuristic;
  double fixed_sigma = 1.0;  // used when bandwidth == kFixed
  double lambda = 0.0;

  void validate() const;
};

/// Feature samples entering a distribution distance. An empty weight
/// vector means uniform weights.
struct FeatureBatch {
  Matrix values;
  Vector weights;

  std::size_t size() const { return values.rows(); }
};

/// Distance value with its gradient on each batch's feature values.
struct PenaltyValue {
  double value = 0.0;
  Matrix grad_src;
  Matrix grad_tgt;
};

/// Squared distance between the weighted means of the two batches.
PenaltyValue mean_penalty(const FeatureBatch& src, const FeatureBatch& tgt);

/// Biased (V-statistic) squared MMD under k(u, v) = exp(-|u - v|^2 / (2 s2))
/// with normalised weights. With the median heuristic s2 is the median
/// pairwise squared distance of the pooled batch, and the gradient includes
/// its dependence on the features.
PenaltyValue mmd_penalty(const FeatureBatch& src, const FeatureBatch& tgt, const PenaltySpec& spec);

/// Dispatches on spec.kind. Also the DIP penalty: source weights carry
/// w(y) for importance-weighted DIP.
PenaltyValue base_distance(const FeatureBatch& src, const FeatureBatch& tgt, const PenaltySpec& spec);
PenaltyValue dip_penalty(const FeatureBatch& src, const FeatureBatch& tgt, const PenaltySpec& spec);

/// Features of one source domain together with their labels (1..L).
struct DomainFeatures {
  Matrix values;
  std::vector<int> labels;
};

struct CipPenaltyValue {
  double value = 0.0;
  std::vector<Matrix> grads;  // one per domain, same shape as its values
};

/// (1 / (L M^2)) sum_y sum_{m != m'} D(class-y features of m, of m').
/// Pairs where either side has fewer than two class-y rows contribute 0.
CipPenaltyValue cip_penalty(const std::vector<DomainFeatures>& domains, int classes,
                            const PenaltySpec& spec);

/// MMD between [feat | cic] on each side. The CIC columns are constants, so
/// gradients are returned for the feat columns only. Source weights (if any)
/// come from src_feat.
PenaltyValue joint_dip_penalty(const FeatureBatch& src_feat, const FeatureBatch& tgt_feat,
                               const Matrix& src_cic, const Matrix& tgt_cic, const PenaltySpec& spec);

}  // namespace cicda
