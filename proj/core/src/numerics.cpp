#include "cicda/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "cicda/error.hpp"

namespace cicda {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeMismatch("matrix data length does not match rows * cols");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw ShapeMismatch("ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw ShapeMismatch("matvec dimension mismatch");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    out[i] = std::inner_product(r.begin(), r.end(), x.begin(), 0.0);
  }
  return out;
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) throw ShapeMismatch("hconcat row counts differ");
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(left.row(r).begin(), left.row(r).end(), dst.begin());
    std::copy(right.row(r).begin(), right.row(r).end(), dst.begin() + left.cols());
  }
  return out;
}

Matrix vconcat(const Matrix& top, const Matrix& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  if (top.cols() != bottom.cols()) throw ShapeMismatch("vconcat column counts differ");
  std::vector<double> data = top.data();
  data.insert(data.end(), bottom.data().begin(), bottom.data().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t draw;
  do {
    draw = engine_();
  } while (draw >= limit);
  return draw % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], keeping log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::categorical(std::span<const double> probs) {
  const double u = uniform();
  double cumulative = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cumulative += probs[k];
    if (u < cumulative) return k;
  }
  return probs.empty() ? 0 : probs.size() - 1;
}

Rng Rng::substream(std::uint64_t index) const {
  return Rng(seed_ ^ splitmix64(index));
}

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double mean, double sd) {
  if (!(sd >= 0.0)) throw ConfigError("standard deviation must be >= 0");
  Matrix out(rows, cols);
  for (double& v : out.data()) v = rng.normal(mean, sd);
  return out;
}

Vector solve_linear_system(const Matrix& a, std::span<const double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeMismatch("solve_linear_system needs a square matrix");
  if (b.size() != n) throw ShapeMismatch("right-hand side length differs from matrix size");

  double max_row_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : a.row(i)) s += std::abs(v);
    max_row_norm = std::max(max_row_norm, s);
  }
  const double tolerance = 1e-12 * max_row_norm;

  Matrix m = a;
  Vector rhs(b.begin(), b.end());
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    }
    if (!(std::abs(m(pivot, col)) > tolerance)) {
      throw SingularMatrix("pivot below tolerance in column " + std::to_string(col));
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m(col, c), m(pivot, c));
      std::swap(rhs[col], rhs[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = m(r, col) / m(col, col);
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m(r, c) -= factor * m(col, c);
      rhs[r] -= factor * rhs[col];
    }
  }
  Vector x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= m(i, c) * x[c];
    x[i] = s / m(i, i);
  }
  return x;
}

Vector softmax(std::span<const double> scores) {
  Vector out(scores.size());
  if (scores.empty()) return out;
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - top);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

double quantile(std::span<const double> values, double alpha) {
  if (values.empty()) throw EmptyInput("quantile of an empty sample");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("quantile level outside [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (alpha == 0.0) return sorted.front();
  const double n = static_cast<double>(sorted.size());
  // The 1e-9 guard keeps products such as 0.7 * 10 from rounding up a rank.
  auto rank = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

MedianPairs median_pairwise_sq_distance_detail(const Matrix& pooled) {
  const std::size_t n = pooled.rows();
  MedianPairs result;
  if (n < 2) return result;

  struct Entry {
    double d;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Entry> entries;
  entries.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ri = pooled.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto rj = pooled.row(j);
      double d = 0.0;
      for (std::size_t c = 0; c < ri.size(); ++c) {
        const double diff = ri[c] - rj[c];
        d += diff * diff;
      }
      entries.push_back({d, i, j});
    }
  }
  const auto less = [](const Entry& a, const Entry& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  };
  const std::size_t count = entries.size();
  const std::size_t upper = count / 2;
  std::nth_element(entries.begin(), entries.begin() + upper, entries.end(), less);
  const Entry hi = entries[upper];
  if (count % 2 == 1) {
    if (hi.d > 0.0) result = {hi.d, {{hi.i, hi.j, 1.0}}};
    return result;
  }
  const Entry lo = *std::max_element(entries.begin(), entries.begin() + upper, less);
  const double median = 0.5 * (lo.d + hi.d);
  if (median > 0.0) result = {median, {{lo.i, lo.j, 0.5}, {hi.i, hi.j, 0.5}}};
  return result;
}

double median_pairwise_sq_distance(const Matrix& x, const Matrix& y) {
  return median_pairwise_sq_distance_detail(vconcat(x, y)).value;
}

}  // namespace cicda
