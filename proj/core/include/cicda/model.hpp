#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cicda/numerics.hpp"

namespace cicda {

struct Dataset;

/// Fused linear feature map and softmax head: scores(x) = a x + b, one
/// score per class. The score vector doubles as the feature layer that
/// matching penalties operate on.
struct LinearModel {
  Matrix a;  // L x p
  Vector b;  // L

  std::size_t classes() const { return a.rows(); }
  std::size_t dimension() const { return a.cols(); }

  static LinearModel zeros(std::size_t classes, std::size_t dimension);
  /// Entries of a and b drawn i.i.d. Normal(0, sd^2).
  static LinearModel random(std::size_t classes, std::size_t dimension, Rng& rng, double sd = 0.01);

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Gradients share the parameter layout.
using ModelGrad = LinearModel;

/// Label-ratio weights, one length-L vector per source domain.
struct ImportanceWeights {
  std::vector<Vector> per_domain;
};

struct AdamState {
  std::size_t step = 0;
  LinearModel first_moment;
  LinearModel second_moment;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_model(const LinearModel& model, double lr = 1e-2);
};

Matrix scores(const LinearModel& model, const Matrix& x);

/// Argmax labels (1..L); ties go to the smaller class index.
std::vector<int> predict(const LinearModel& model, const Matrix& x);
std::vector<int> predict_from_scores(const Matrix& scores);

/// Maximum softmax probability per row.
Vector max_probability(const LinearModel& model, const Matrix& x);

struct LossAndGrad {
  double loss = 0.0;
  ModelGrad grad;
};

/// loss = (1/n) sum_i w_i * (-log softmax(scores_i)[y_i]) and its exact
/// gradient with respect to a and b.
LossAndGrad weighted_cross_entropy_and_grad(const LinearModel& model, const Matrix& x,
                                            std::span<const int> y,
                                            std::span<const double> sample_weights);

/// Score-level form of the loss above, multiplied by `scale`. When
/// `dscores` is non-null, scale * dloss/dscores is added into it.
double weighted_cross_entropy_scores(const Matrix& scores, std::span<const int> y,
                                     std::span<const double> sample_weights, double scale,
                                     Matrix* dscores);

/// Adds the parameter gradient implied by dloss/dscores on inputs x.
void accumulate_backprop(ModelGrad& grad, const Matrix& x, const Matrix& dscores);

/// Bias-corrected Adam update of model in place.
void adam_step(AdamState& state, LinearModel& model, const ModelGrad& grads);

double zero_one_risk(const LinearModel& model, const Dataset& data);
/// (1/n) sum_i w[y_i] * 1{predict_i != y_i}.
double weighted_zero_one_risk(const LinearModel& model, const Dataset& data, std::span<const double> w);
/// Mean cross-entropy with per-class weights w (all ones when empty).
double cross_entropy_risk(const LinearModel& model, const Dataset& data, std::span<const double> w = {});

}  // namespace cicda
