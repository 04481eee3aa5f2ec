#pragma once

#include <cstddef>
#include <span>

#include "cicda/model.hpp"
#include "cicda/numerics.hpp"
#include "cicda/scm.hpp"

namespace cicda {

/// Joint frequencies c[i][j] = P(predict = i, y = j) over n samples.
struct ConfusionMatrix {
  Matrix c;
  std::size_t n = 0;

  /// Column sums, i.e. the empirical label marginal.
  Vector label_marginal() const;
};

ConfusionMatrix confusion_matrix(const LinearModel& model, const Dataset& data);
ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> labels,
                                 std::size_t classes);

/// Fraction of target rows predicted as each class.
Vector predicted_target_distribution(const LinearModel& model, const Matrix& target_x);

/// Solves c w = mu, clips negative entries to zero and rescales so that the
/// weighted source label mass sum_y w_y * P_S(y) equals one. Throws
/// SingularConfusion when the system cannot be solved or nothing survives
/// clipping.
Vector estimate_weights(const ConfusionMatrix& conf, std::span<const double> mu);

}  // namespace cicda
