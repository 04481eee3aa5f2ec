#include "cicda/label_shift.hpp"

#include <cmath>

#include "cicda/error.hpp"

namespace cicda {

Vector ConfusionMatrix::label_marginal() const {
  Vector out(c.cols(), 0.0);
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) out[j] += c(i, j);
  }
  return out;
}

ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> labels,
                                 std::size_t classes) {
  if (predicted.empty()) throw EmptyDataset("confusion matrix of an empty dataset");
  if (predicted.size() != labels.size()) throw ShapeMismatch("predictions and labels differ in length");
  ConfusionMatrix out{Matrix(classes, classes), predicted.size()};
  const double unit = 1.0 / static_cast<double>(predicted.size());
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    out.c(static_cast<std::size_t>(predicted[k] - 1), static_cast<std::size_t>(labels[k] - 1)) += unit;
  }
  return out;
}

ConfusionMatrix confusion_matrix(const LinearModel& model, const Dataset& data) {
  if (data.size() == 0) throw EmptyDataset("confusion matrix of an empty dataset");
  return confusion_matrix(predict(model, data.x), data.y, model.classes());
}

Vector predicted_target_distribution(const LinearModel& model, const Matrix& target_x) {
  if (target_x.rows() == 0) throw EmptyDataset("no target rows");
  Vector mu(model.classes(), 0.0);
  const double unit = 1.0 / static_cast<double>(target_x.rows());
  for (int label : predict(model, target_x)) mu[static_cast<std::size_t>(label - 1)] += unit;
  return mu;
}

Vector estimate_weights(const ConfusionMatrix& conf, std::span<const double> mu) {
  if (conf.c.rows() != conf.c.cols()) throw ShapeMismatch("confusion matrix must be square");
  Vector w;
  try {
    w = solve_linear_system(conf.c, mu);
  } catch (const SingularMatrix& e) {
    throw SingularConfusion(std::string("confusion system is singular: ") + e.what());
  }
  for (double& v : w) {
    if (!std::isfinite(v)) throw SingularConfusion("confusion system produced non-finite weights");
    if (v < 0.0) v = 0.0;
  }
  const Vector marginal = conf.label_marginal();
  double mass = 0.0;
  for (std::size_t y = 0; y < w.size(); ++y) mass += w[y] * marginal[y];
  if (!(mass > 0.0)) throw SingularConfusion("no weighted source mass left after clipping");
  for (double& v : w) v /= mass;
  return w;
}

}  // namespace cicda
