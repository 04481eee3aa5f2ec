#include "cicda/penalties.hpp"

#include <cmath>

#include "cicda/error.hpp"

namespace cicda {

void PenaltySpec::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw ConfigError("penalty strength must be finite and >= 0");
  if (bandwidth == BandwidthPolicy::kFixed && !(fixed_sigma > 0.0)) {
    throw ConfigError("fixed bandwidth must be positive");
  }
}

namespace {

// Weights normalised to sum to one; uniform when none are given.
Vector normalized_weights(const FeatureBatch& batch) {
  const std::size_t n = batch.size();
  if (n == 0) throw EmptyBatch("feature batch has no rows");
  if (batch.weights.empty()) return Vector(n, 1.0 / static_cast<double>(n));
  if (batch.weights.size() != n) throw ShapeMismatch("feature weights must have one entry per row");
  double total = 0.0;
  for (double w : batch.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("feature weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw EmptyBatch("feature weights have no positive entry");
  Vector out(batch.weights);
  for (double& w : out) w /= total;
  return out;
}

void check_widths(const FeatureBatch& src, const FeatureBatch& tgt) {
  if (src.size() == 0 || tgt.size() == 0) throw EmptyBatch("penalty needs non-empty batches");
  if (src.values.cols() != tgt.values.cols()) throw ShapeMismatch("feature widths differ");
}

}  // namespace

PenaltyValue mean_penalty(const FeatureBatch& src, const FeatureBatch& tgt) {
  check_widths(src, tgt);
  const Vector ws = normalized_weights(src);
  const Vector wt = normalized_weights(tgt);
  const std::size_t q = src.values.cols();

  Vector diff(q, 0.0);
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t c = 0; c < q; ++c) diff[c] += ws[i] * src.values(i, c);
  }
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    for (std::size_t c = 0; c < q; ++c) diff[c] -= wt[i] * tgt.values(i, c);
  }

  PenaltyValue out;
  for (double d : diff) out.value += d * d;
  out.grad_src = Matrix(src.size(), q);
  out.grad_tgt = Matrix(tgt.size(), q);
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t c = 0; c < q; ++c) out.grad_src(i, c) = 2.0 * ws[i] * diff[c];
  }
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    for (std::size_t c = 0; c < q; ++c) out.grad_tgt(i, c) = -2.0 * wt[i] * diff[c];
  }
  return out;
}

PenaltyValue mmd_penalty(const FeatureBatch& src, const FeatureBatch& tgt, const PenaltySpec& spec) {
  check_widths(src, tgt);
  const Vector ws = normalized_weights(src);
  const Vector wt = normalized_weights(tgt);
  const std::size_t ns = src.size();
  const std::size_t n = ns + tgt.size();
  const std::size_t q = src.values.cols();

  // With c = (w_src, -w_tgt) on the pooled rows, MMD^2 = sum_ij c_i c_j k_ij.
  const Matrix pooled = vconcat(src.values, tgt.values);
  Vector c(n);
  for (std::size_t i = 0; i < ns; ++i) c[i] = ws[i];
  for (std::size_t i = ns; i < n; ++i) c[i] = -wt[i - ns];

  MedianPairs bandwidth;
  if (spec.bandwidth == BandwidthPolicy::kFixed) {
    bandwidth.value = spec.fixed_sigma * spec.fixed_sigma;
  } else {
    bandwidth = median_pairwise_sq_distance_detail(pooled);
  }
  const double s2 = bandwidth.value;
  const double inv_s2 = 1.0 / s2;

  Matrix grad(n, q);
  double value = 0.0;
  double dvalue_ds2 = 0.0;
  std::vector<double> delta(q);
  for (std::size_t i = 0; i < n; ++i) {
    value += c[i] * c[i];
    const auto zi = pooled.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto zj = pooled.row(j);
      double d = 0.0;
      for (std::size_t k = 0; k < q; ++k) {
        delta[k] = zi[k] - zj[k];
        d += delta[k] * delta[k];
      }
      const double kij = std::exp(-0.5 * d * inv_s2);
      const double cc = c[i] * c[j] * kij;
      value += 2.0 * cc;
      dvalue_ds2 += cc * d * inv_s2 * inv_s2;
      // d/dz_i of the (i, j) and (j, i) terms.
      const double g = -2.0 * cc * inv_s2;
      auto gi = grad.row(i);
      auto gj = grad.row(j);
      for (std::size_t k = 0; k < q; ++k) {
        gi[k] += g * delta[k];
        gj[k] -= g * delta[k];
      }
    }
  }
  for (const auto& pair : bandwidth.pairs) {
    const auto zi = pooled.row(pair.i);
    const auto zj = pooled.row(pair.j);
    auto gi = grad.row(pair.i);
    auto gj = grad.row(pair.j);
    for (std::size_t k = 0; k < q; ++k) {
      const double g = dvalue_ds2 * pair.weight * 2.0 * (zi[k] - zj[k]);
      gi[k] += g;
      gj[k] -= g;
    }
  }

  PenaltyValue out;
  out.value = value;
  out.grad_src = Matrix(ns, q);
  out.grad_tgt = Matrix(n - ns, q);
  std::copy(grad.data().begin(), grad.data().begin() + ns * q, out.grad_src.data().begin());
  std::copy(grad.data().begin() + ns * q, grad.data().end(), out.grad_tgt.data().begin());
  return out;
}

PenaltyValue base_distance(const FeatureBatch& src, const FeatureBatch& tgt, const PenaltySpec& spec) {
  return spec.kind == PenaltyKind::kMean ? mean_penalty(src, tgt) : mmd_penalty(src, tgt, spec);
}

PenaltyValue dip_penalty(const FeatureBatch& src, const FeatureBatch& tgt, const PenaltySpec& spec) {
  return base_distance(src, tgt, spec);
}

CipPenaltyValue cip_penalty(const std::vector<DomainFeatures>& domains, int classes,
                            const PenaltySpec& spec) {
  const std::size_t num_domains = domains.size();
  CipPenaltyValue out;
  out.grads.reserve(num_domains);
  for (const auto& d : domains) {
    if (d.labels.size() != d.values.rows()) throw ShapeMismatch("one label per feature row required");
    out.grads.emplace_back(d.values.rows(), d.values.cols());
  }
  if (num_domains < 2 || classes < 1) return out;

  const double scale = 1.0 / (static_cast<double>(classes) * static_cast<double>(num_domains * num_domains));
  for (int y = 1; y <= classes; ++y) {
    std::vector<std::vector<std::size_t>> rows(num_domains);
    std::vector<FeatureBatch> batches(num_domains);
    for (std::size_t m = 0; m < num_domains; ++m) {
      for (std::size_t i = 0; i < domains[m].labels.size(); ++i) {
        if (domains[m].labels[i] == y) rows[m].push_back(i);
      }
      batches[m].values = domains[m].values.select_rows(rows[m]);
    }
    // D is symmetric, so each unordered pair stands for both ordered pairs.
    for (std::size_t m = 0; m < num_domains; ++m) {
      if (rows[m].size() < 2) continue;
      for (std::size_t k = m + 1; k < num_domains; ++k) {
        if (rows[k].size() < 2) continue;
        const PenaltyValue d = base_distance(batches[m], batches[k], spec);
        out.value += 2.0 * scale * d.value;
        for (std::size_t r = 0; r < rows[m].size(); ++r) {
          auto g = out.grads[m].row(rows[m][r]);
          for (std::size_t c = 0; c < g.size(); ++c) g[c] += 2.0 * scale * d.grad_src(r, c);
        }
        for (std::size_t r = 0; r < rows[k].size(); ++r) {
          auto g = out.grads[k].row(rows[k][r]);
          for (std::size_t c = 0; c < g.size(); ++c) g[c] += 2.0 * scale * d.grad_tgt(r, c);
        }
      }
    }
  }
  return out;
}

PenaltyValue joint_dip_penalty(const FeatureBatch& src_feat, const FeatureBatch& tgt_feat,
                               const Matrix& src_cic, const Matrix& tgt_cic, const PenaltySpec& spec) {
  if (src_cic.rows() != src_feat.size() || tgt_cic.rows() != tgt_feat.size()) {
    throw ShapeMismatch("CIC features must align row-wise with current features");
  }
  if (src_cic.cols() != tgt_cic.cols()) throw ShapeMismatch("CIC feature widths differ");
  const std::size_t q = src_feat.values.cols();
  FeatureBatch src{src_cic.cols() ? hconcat(src_feat.values, src_cic) : src_feat.values, src_feat.weights};
  FeatureBatch tgt{tgt_cic.cols() ? hconcat(tgt_feat.values, tgt_cic) : tgt_feat.values, tgt_feat.weights};
  PenaltySpec mmd = spec;
  mmd.kind = PenaltyKind::kMmd;
  PenaltyValue joint = mmd_penalty(src, tgt, mmd);

  PenaltyValue out;
  out.value = joint.value;
  out.grad_src = Matrix(src.size(), q);
  out.grad_tgt = Matrix(tgt.size(), q);
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t c = 0; c < q; ++c) out.grad_src(i, c) = joint.grad_src(i, c);
  }
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    for (std::size_t c = 0; c < q; ++c) out.grad_tgt(i, c) = joint.grad_tgt(i, c);
  }
  return out;
}

}  // namespace cicda
