#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cicda {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Rows selected by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
/// Horizontal concatenation; both sides must have the same row count.
Matrix hconcat(const Matrix& left, const Matrix& right);
/// Vertical concatenation; both sides must have the same column count.
Matrix vconcat(const Matrix& top, const Matrix& bottom);

/// Seedable random stream backed by std::mt19937_64, whose output sequence
/// is fixed by the C++ standard. Uniform and normal draws are converted here
/// rather than through <random> distributions, which are implementation
/// defined, so a seed yields the same numbers with every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, n), rejection sampled so there is no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Index drawn from a categorical distribution over probs.
  std::size_t categorical(std::span<const double> probs);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

  /// Independent child stream: seed xor splitmix64(index). Adding a new
  /// index never changes the streams of existing ones.
  Rng substream(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double mean, double sd);

/// Solves a x = b by Gaussian elimination with partial pivoting.
/// Throws SingularMatrix when a pivot falls below 1e-12 times the largest
/// initial row norm (max absolute row sum).
Vector solve_linear_system(const Matrix& a, std::span<const double> b);

/// Max-subtracted softmax.
Vector softmax(std::span<const double> scores);

/// Lower empirical quantile: the ceil(alpha * n)-th smallest value for
/// alpha > 0 and the minimum for alpha == 0.
double quantile(std::span<const double> values, double alpha);

struct MedianPairs {
  double value = 1.0;
  // Pairs (pooled row indices) whose squared distance makes up the median,
  // each with the weight it carries (1 for odd counts, 1/2 each otherwise).
  // Empty when the fallback value was used.
  struct Pair {
    std::size_t i;
    std::size_t j;
    double weight;
  };
  std::vector<Pair> pairs;
};

/// Median of squared Euclidean distances over all distinct pairs of the
/// pooled rows of x and y. Returns 1 when that median is zero.
double median_pairwise_sq_distance(const Matrix& x, const Matrix& y);
/// Same quantity on already pooled rows, reporting which pairs realise it.
MedianPairs median_pairwise_sq_distance_detail(const Matrix& pooled);

}  // namespace cicda
