#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "cicda/numerics.hpp"

namespace cicda::support {

/// Central differences of f with respect to every entry of m.
inline Matrix numeric_gradient(Matrix m, const std::function<double(const Matrix&)>& f, double h = 1e-6) {
  Matrix g(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    const double saved = m.data()[i];
    m.data()[i] = saved + h;
    const double up = f(m);
    m.data()[i] = saved - h;
    const double down = f(m);
    m.data()[i] = saved;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max |a - b| divided by max(max |b|, floor).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8) {
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double sd = 1.0) {
  return gaussian_matrix(rng, rows, cols, 0.0, sd);
}

}  // namespace cicda::support
