#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cicda/error.hpp"
#include "cicda/numerics.hpp"
#include "test_support.hpp"

using namespace cicda;

TEST(GaussianMatrix, ZeroSdGivesConstantMatrix) {
  Rng rng(1);
  const Matrix m = gaussian_matrix(rng, 2, 2, 0.0, 0.0);
  for (double v : m.data()) EXPECT_EQ(v, 0.0);
}

TEST(GaussianMatrix, SameSeedIsBitIdentical) {
  Rng a(7), b(7);
  EXPECT_EQ(gaussian_matrix(a, 5, 3, 0.5, 2.0), gaussian_matrix(b, 5, 3, 0.5, 2.0));
}

TEST(GaussianMatrix, SampleMomentsMatch) {
  Rng rng(11);
  const Matrix m = gaussian_matrix(rng, 10000, 1, 0.0, 1.0);
  const auto& v = m.data();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(std::sqrt(ss / (v.size() - 1)), 1.0, 0.05);
}

TEST(GaussianMatrix, NegativeSdRejected) {
  Rng rng(1);
  EXPECT_THROW(gaussian_matrix(rng, 1, 1, 0.0, -1.0), ConfigError);
}

TEST(Rng, SubstreamsAreStableAndDistinct) {
  const Rng base(42);
  Rng a = base.substream(3), b = base.substream(3), c = base.substream(4);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
}

TEST(Rng, UniformIndexStaysInRange) {
  Rng rng(5);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 3000; ++i) ++counts[rng.uniform_index(3)];
  for (int c : counts) EXPECT_NEAR(c, 1000, 120);
}

TEST(Rng, CategoricalFollowsProbabilities) {
  Rng rng(9);
  const Vector probs{0.1, 0.9};
  int ones = 0;
  for (int i = 0; i < 10000; ++i) ones += rng.categorical(probs) == 1;
  EXPECT_NEAR(ones / 10000.0, 0.9, 4.0 * std::sqrt(0.09 / 10000));
}

TEST(SolveLinearSystem, Identity) {
  const Vector x = solve_linear_system(Matrix::identity(2), Vector{0.3, 0.7});
  EXPECT_DOUBLE_EQ(x[0], 0.3);
  EXPECT_DOUBLE_EQ(x[1], 0.7);
}

TEST(SolveLinearSystem, DiagonalScaling) {
  const Matrix a = Matrix::from_rows({{0.5, 0.0}, {0.0, 0.5}});
  const Vector x = solve_linear_system(a, Vector{0.05, 0.45});
  EXPECT_NEAR(x[0], 0.1, 1e-15);
  EXPECT_NEAR(x[1], 0.9, 1e-15);
}

TEST(SolveLinearSystem, SingularThrows) {
  const Matrix a = Matrix::from_rows({{1.0, 2.0}, {2.0, 4.0}});
  EXPECT_THROW(solve_linear_system(a, Vector{1.0, 2.0}), SingularMatrix);
}

TEST(SolveLinearSystem, NonSquareThrows) {
  EXPECT_THROW(solve_linear_system(Matrix(2, 3), Vector{1.0, 2.0}), ShapeMismatch);
}

// Random systems with a prescribed condition number: a = Q1 diag(s) Q2 with
// Householder reflections Q and singular values spread over [1, kappa].
TEST(SolveLinearSystem, RecoversKnownSolutionUpToConditionOneMillion) {
  Rng rng(2024);
  const auto reflector = [&](std::size_t n) {
    Vector v(n);
    double norm = 0.0;
    for (double& e : v) {
      e = rng.normal();
      norm += e * e;
    }
    Matrix q = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) q(i, j) -= 2.0 * v[i] * v[j] / norm;
    }
    return q;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const double kappa = std::pow(10.0, 6.0 * (trial % 10) / 9.0);
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) s(i, i) = std::pow(kappa, -static_cast<double>(i) / (n - 1));
    const Matrix a = matmul(matmul(reflector(n), s), reflector(n));
    Vector x(n);
    for (double& e : x) e = rng.normal();
    const Vector solved = solve_linear_system(a, matvec(a, x));
    EXPECT_LE(support::relative_error(solved, x), 1e-8) << "trial " << trial << " kappa " << kappa;
  }
}

TEST(SolveLinearSystem, ResidualSmallForWellConditioned4x4) {
  const Matrix a = Matrix::from_rows({{4, 1, 0, 0.5}, {1, 3, 0.2, 0}, {0, 0.2, 5, 1}, {0.5, 0, 1, 2}});
  const Vector x{1.0, -2.0, 0.5, 3.0};
  const Vector solved = solve_linear_system(a, matvec(a, x));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(solved[i], x[i], 1e-12);
}

TEST(Softmax, SymmetricScores) {
  const Vector p = softmax(Vector{0.0, 0.0});
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(Softmax, LargeScoresDoNotOverflow) {
  const Vector p = softmax(Vector{1000.0, 0.0});
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
}

TEST(Softmax, HandEvaluatedThreeClasses) {
  // exp(k) / (e + e^2 + e^3) evaluated independently of the implementation.
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const Vector p = softmax(Vector{1.0, 2.0, 3.0});
  EXPECT_NEAR(p[0], 0.09003057, 1e-7);
  EXPECT_NEAR(p[1], 0.24472847, 1e-7);
  EXPECT_NEAR(p[2], 0.66524096, 1e-7);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(p[k], std::exp(k + 1.0) / z, 1e-15);
}

TEST(Softmax, SumsToOneAndPermutationEquivariant) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Vector s(5);
    for (double& v : s) v = 10.0 * rng.normal();
    const Vector p = softmax(s);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    std::vector<std::size_t> perm{0, 1, 2, 3, 4};
    rng.shuffle(perm);
    Vector permuted(5);
    for (std::size_t i = 0; i < 5; ++i) permuted[i] = s[perm[i]];
    const Vector q = softmax(permuted);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(q[i], p[perm[i]]);
  }
}

TEST(Quantile, Examples) {
  const Vector v{1, 2, 3, 4};
  EXPECT_EQ(quantile(v, 0.0), 1.0);
  EXPECT_EQ(quantile(v, 0.75), 3.0);
  EXPECT_EQ(quantile(v, 1.0), 4.0);
  for (double a : {0.0, 0.3, 1.0}) EXPECT_EQ(quantile(Vector{5.0}, a), 5.0);
}

TEST(Quantile, ExtremesAreMinAndMax) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Vector v(1 + trial);
    for (double& x : v) x = rng.normal();
    EXPECT_EQ(quantile(v, 0.0), *std::min_element(v.begin(), v.end()));
    EXPECT_EQ(quantile(v, 1.0), *std::max_element(v.begin(), v.end()));
  }
}

TEST(Quantile, Errors) {
  EXPECT_THROW(quantile(Vector{}, 0.5), EmptyInput);
  EXPECT_THROW(quantile(Vector{1.0}, 1.5), ConfigError);
}

TEST(MedianPairwise, SinglePair) {
  EXPECT_EQ(median_pairwise_sq_distance(Matrix(1, 1, 0.0), Matrix(1, 1, 1.0)), 1.0);
}

TEST(MedianPairwise, IdenticalRowsFallBackToOne) {
  EXPECT_EQ(median_pairwise_sq_distance(Matrix(3, 2, 0.7), Matrix(2, 2, 0.7)), 1.0);
}

TEST(MedianPairwise, EnumeratedPairs) {
  // Pooled {0, 1, 3}: squared distances {1, 9, 4}, median 4.
  const Matrix x = Matrix::from_rows({{0.0}, {1.0}});
  const Matrix y = Matrix::from_rows({{3.0}});
  EXPECT_EQ(median_pairwise_sq_distance(x, y), 4.0);
}

TEST(MedianPairwise, EvenCountAveragesMiddlePair) {
  // Pooled {0, 1, 3, 7}: distances {1, 9, 49, 4, 36, 16}, middle pair 9 and 16.
  const Matrix x = Matrix::from_rows({{0.0}, {1.0}, {3.0}, {7.0}});
  const MedianPairs detail = median_pairwise_sq_distance_detail(x);
  EXPECT_EQ(detail.value, 12.5);
  ASSERT_EQ(detail.pairs.size(), 2u);
  EXPECT_EQ(detail.pairs[0].weight, 0.5);
}

TEST(MatrixOps, ConcatenationAndSelection) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5}, {6}});
  const Matrix h = hconcat(a, b);
  EXPECT_EQ(h, Matrix::from_rows({{1, 2, 5}, {3, 4, 6}}));
  EXPECT_EQ(vconcat(a, a).rows(), 4u);
  const std::vector<std::size_t> rows{1, 1};
  EXPECT_EQ(a.select_rows(rows), Matrix::from_rows({{3, 4}, {3, 4}}));
  EXPECT_THROW(hconcat(a, Matrix(3, 1)), ShapeMismatch);
  EXPECT_THROW(vconcat(a, b), ShapeMismatch);
}
