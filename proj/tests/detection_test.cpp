#include <gtest/gtest.h>

#include <cmath>

#include "cicda/error.hpp"
#include "cicda/detection.hpp"

using namespace cicda;

namespace {

// Binary model on one coordinate predicting class 2 iff x > cut.
LinearModel threshold_at(double cut) { return {Matrix::from_rows({{0.0}, {1.0}}), Vector{0.0, -cut}}; }

Dataset one_dim(std::vector<double> x, std::vector<int> y) {
  Dataset d;
  d.x = Matrix(x.size(), 1, x);
  d.y = std::move(y);
  return d;
}

double logit(double p) { return std::log(p / (1 - p)); }

}  // namespace

TEST(TargetRiskLowerBound, SelfComparison) {
  const LinearModel h = threshold_at(0.5);
  const Dataset src = one_dim({-1, 0.2, 0.7, 2, 3}, {1, 2, 1, 2, 2});
  const DetectionReport r = target_risk_lower_bound(h, h, src, Matrix::from_rows({{0}, {4}}));
  // Source risk of h: rows 0.2 and 0.7 are wrong.
  EXPECT_NEAR(r.risk_lower_bound, -0.4, 1e-15);
  EXPECT_EQ(r.disagreement_source, 0.0);
  EXPECT_EQ(r.disagreement_target, 0.0);
  EXPECT_NEAR(r.candidate_source_acc, 0.6, 1e-15);
}

TEST(TargetRiskLowerBound, TargetDisagreementRaisesBound) {
  // Both classifiers are perfect on the source; on the target they disagree
  // on the four rows in (0, 1).
  const LinearModel proxy = threshold_at(0.0), candidate = threshold_at(1.0);
  const Dataset src = one_dim({-1, -2, 2, 3}, {1, 1, 2, 2});
  const Matrix target = Matrix(10, 1, {-3, -2, 0.1, 0.3, 0.5, 0.9, 2, 3, 4, 5});
  const std::vector<int> labels{1, 1, 2, 2, 2, 2, 2, 2, 2, 2};
  const DetectionReport r = target_risk_lower_bound(candidate, proxy, src, target, labels);
  EXPECT_NEAR(r.risk_lower_bound, 0.0 + 0.4, 1e-15);
  EXPECT_NEAR(r.accuracy_upper_bound, 0.6, 1e-15);
  ASSERT_TRUE(r.actual_target_acc.has_value());
  EXPECT_NEAR(*r.actual_target_acc, 0.6, 1e-15);
  EXPECT_FALSE(r.region_alpha.has_value());
}

TEST(TargetRiskLowerBound, UpperBoundIsComplementOfRiskBound) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearModel h = LinearModel::random(2, 3, rng, 1.0), g = LinearModel::random(2, 3, rng, 1.0);
    Dataset src;
    src.x = gaussian_matrix(rng, 30, 3, 0.0, 1.0);
    for (int i = 0; i < 30; ++i) src.y.push_back(1 + static_cast<int>(rng.uniform_index(2)));
    const DetectionReport r = target_risk_lower_bound(h, g, src, gaussian_matrix(rng, 20, 3, 1.0, 1.0));
    EXPECT_EQ(r.accuracy_upper_bound, 1.0 - r.risk_lower_bound);
  }
}

TEST(TargetRiskLowerBound, Errors) {
  const LinearModel h = threshold_at(0.0);
  EXPECT_THROW(target_risk_lower_bound(h, h, one_dim({}, {}), Matrix(1, 1)), EmptyDataset);
  EXPECT_THROW(target_risk_lower_bound(h, h, one_dim({1}, {2}), Matrix(2, 1), std::vector<int>{1}),
               ShapeMismatch);
}

TEST(RestrictRegion, HandQuantileAndFilter) {
  const LinearModel proxy = threshold_at(0.0);
  const Matrix target(4, 1, {logit(0.5), logit(0.6), logit(0.9), logit(0.95)});
  const Dataset src = one_dim({logit(0.55), logit(0.99), -logit(0.7)}, {2, 2, 1});
  const Region region = restrict_region(proxy, src, target, 0.5);
  EXPECT_NEAR(region.threshold, 0.6, 1e-12);
  EXPECT_EQ(region.target_rows, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(region.source.size(), 2u);
  EXPECT_EQ(region.source.y, (std::vector<int>{2, 1}));
}

TEST(RestrictRegion, AlphaZeroKeepsEverything) {
  const LinearModel proxy = threshold_at(0.0);
  const Matrix target(3, 1, {2.0, -3.0, 1.0});
  const Dataset src = one_dim({0.01, 5}, {1, 2});
  const Region region = restrict_region(proxy, src, target, 0.0);
  EXPECT_EQ(region.target_rows.size(), 3u);
  EXPECT_EQ(region.source.size(), 2u);
}

TEST(RestrictRegion, UpperQuarterRetained) {
  Rng rng(21);
  const LinearModel proxy = LinearModel::random(2, 2, rng, 1.0);
  for (std::size_t n : {1, 3, 4, 10, 37, 100}) {
    const Matrix target = gaussian_matrix(rng, n, 2, 0.0, 2.0);
    // Source contains the target rows, so the upper region is never empty.
    Dataset src;
    src.x = vconcat(gaussian_matrix(rng, 50, 2, 0.0, 1.0), target);
    src.y.assign(src.x.rows(), 1);
    const Region region = restrict_region(proxy, src, target, 0.75);
    EXPECT_GE(region.target_rows.size(), static_cast<std::size_t>(std::ceil(0.25 * static_cast<double>(n))));
  }
}

TEST(RestrictRegion, Errors) {
  const LinearModel proxy = threshold_at(0.0);
  const Dataset src = one_dim({0.0}, {1});
  EXPECT_THROW(restrict_region(proxy, src, Matrix(2, 1, {1.0, 2.0}), 1.0), ConfigError);
  EXPECT_THROW(restrict_region(proxy, src, Matrix(2, 1, {1.0, 2.0}), -0.1), ConfigError);
  // Source probability 0.5 is below every target probability.
  EXPECT_THROW(restrict_region(proxy, src, Matrix(2, 1, {1.0, 2.0}), 0.5), EmptyRegion);
}

TEST(RestrictedBound, AlphaZeroMatchesUnrestricted) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearModel h = LinearModel::random(2, 3, rng, 1.0), g = LinearModel::random(2, 3, rng, 1.0);
    Dataset src;
    src.x = gaussian_matrix(rng, 40, 3, 0.0, 1.0);
    for (int i = 0; i < 40; ++i) src.y.push_back(1 + static_cast<int>(rng.uniform_index(2)));
    const Matrix target = gaussian_matrix(rng, 30, 3, 0.5, 1.0);
    std::vector<int> labels(30);
    for (auto& y : labels) y = 1 + static_cast<int>(rng.uniform_index(2));
    const DetectionReport full = target_risk_lower_bound(h, g, src, target, labels);
    const DetectionReport r = restricted_bound(h, g, src, target, 0.0, labels);
    EXPECT_EQ(r.risk_lower_bound, full.risk_lower_bound);
    EXPECT_EQ(r.actual_target_acc, full.actual_target_acc);
    EXPECT_EQ(r.region_fraction_target, 1.0);
    EXPECT_EQ(r.region_alpha, 0.0);
  }
}

TEST(RestrictedBound, RegionFractionNonIncreasingInAlpha) {
  Rng rng(8);
  const LinearModel h = LinearModel::random(2, 3, rng, 1.0), g = LinearModel::random(2, 3, rng, 1.0);
  Dataset src;
  src.x = gaussian_matrix(rng, 200, 3, 0.0, 3.0);
  src.y.assign(200, 2);
  const Matrix target = gaussian_matrix(rng, 150, 3, 0.0, 3.0);
  double previous = 1.0;
  for (double alpha = 0.0; alpha < 0.95; alpha += 0.05) {
    const DetectionReport r = restricted_bound(h, g, src, target, alpha);
    EXPECT_LE(*r.region_fraction_target, previous) << "alpha " << alpha;
    previous = *r.region_fraction_target;
  }
}

TEST(RestrictedBound, PerfectProxyAgreeingCandidate) {
  // On the region both models coincide with the labels, so the bound and
  // its slack vanish.
  const LinearModel proxy = threshold_at(0.0);
  const LinearModel candidate{Matrix::from_rows({{0.0}, {2.0}}), Vector{0.0, 0.0}};
  const Dataset src = one_dim({-6, -5, 5, 6, 0.1}, {1, 1, 2, 2, 1});
  const Matrix target(4, 1, {-4, 4, 0.05, 5});
  const std::vector<int> labels{1, 2, 1, 2};
  const DetectionReport r = restricted_bound(candidate, proxy, src, target, 0.5, labels);
  EXPECT_EQ(r.risk_lower_bound, 0.0);
  EXPECT_EQ(r.proxy_source_risk, 0.0);
  EXPECT_EQ(*r.actual_target_acc, 1.0);
  EXPECT_NEAR(*r.region_fraction_target, 0.75, 1e-15);
}
