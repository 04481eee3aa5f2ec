#include "cicda/model.hpp"

#include <algorithm>
#include <cmath>

#include "cicda/error.hpp"
#include "cicda/scm.hpp"

namespace cicda {

LinearModel LinearModel::zeros(std::size_t classes, std::size_t dimension) {
  return {Matrix(classes, dimension), Vector(classes, 0.0)};
}

LinearModel LinearModel::random(std::size_t classes, std::size_t dimension, Rng& rng, double sd) {
  LinearModel model = zeros(classes, dimension);
  for (double& v : model.a.data()) v = sd * rng.normal();
  for (double& v : model.b) v = sd * rng.normal();
  return model;
}

AdamState AdamState::for_model(const LinearModel& model, double lr) {
  AdamState state;
  state.first_moment = LinearModel::zeros(model.classes(), model.dimension());
  state.second_moment = state.first_moment;
  state.lr = lr;
  return state;
}

Matrix scores(const LinearModel& model, const Matrix& x) {
  if (x.cols() != model.dimension()) throw ShapeMismatch("input width differs from model dimension");
  const std::size_t classes = model.classes();
  Matrix out(x.rows(), classes);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    for (std::size_t k = 0; k < classes; ++k) {
      const auto ak = model.a.row(k);
      double s = model.b[k];
      for (std::size_t j = 0; j < xi.size(); ++j) s += ak[j] * xi[j];
      out(i, k) = s;
    }
  }
  return out;
}

std::vector<int> predict_from_scores(const Matrix& s) {
  std::vector<int> labels(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto row = s.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[best]) best = k;
    }
    labels[i] = static_cast<int>(best) + 1;
  }
  return labels;
}

std::vector<int> predict(const LinearModel& model, const Matrix& x) {
  return predict_from_scores(scores(model, x));
}

Vector max_probability(const LinearModel& model, const Matrix& x) {
  const Matrix s = scores(model, x);
  Vector out(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const Vector probs = softmax(s.row(i));
    out[i] = *std::max_element(probs.begin(), probs.end());
  }
  return out;
}

double weighted_cross_entropy_scores(const Matrix& s, std::span<const int> y,
                                     std::span<const double> sample_weights, double scale,
                                     Matrix* dscores) {
  const std::size_t n = s.rows();
  if (y.size() != n || sample_weights.size() != n) {
    throw ShapeMismatch("labels and weights must have one entry per row");
  }
  if (dscores && (dscores->rows() != n || dscores->cols() != s.cols())) {
    throw ShapeMismatch("score gradient buffer has the wrong shape");
  }
  if (n == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = sample_weights[i];
    if (w == 0.0) continue;
    const auto row = s.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - top);
    const double log_norm = top + std::log(total);
    const auto label = static_cast<std::size_t>(y[i] - 1);
    loss += w * (log_norm - row[label]);
    if (dscores) {
      auto g = dscores->row(i);
      const double factor = scale * w * inv_n;
      for (std::size_t k = 0; k < row.size(); ++k) {
        const double p = std::exp(row[k] - log_norm);
        g[k] += factor * (p - (k == label ? 1.0 : 0.0));
      }
    }
  }
  return scale * loss * inv_n;
}

void accumulate_backprop(ModelGrad& grad, const Matrix& x, const Matrix& dscores) {
  if (x.rows() != dscores.rows() || x.cols() != grad.dimension() || dscores.cols() != grad.classes()) {
    throw ShapeMismatch("backprop shapes disagree");
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    const auto gi = dscores.row(i);
    for (std::size_t k = 0; k < gi.size(); ++k) {
      const double g = gi[k];
      if (g == 0.0) continue;
      grad.b[k] += g;
      auto ak = grad.a.row(k);
      for (std::size_t j = 0; j < xi.size(); ++j) ak[j] += g * xi[j];
    }
  }
}

LossAndGrad weighted_cross_entropy_and_grad(const LinearModel& model, const Matrix& x,
                                            std::span<const int> y,
                                            std::span<const double> sample_weights) {
  const Matrix s = scores(model, x);
  Matrix ds(s.rows(), s.cols());
  LossAndGrad out;
  out.loss = weighted_cross_entropy_scores(s, y, sample_weights, 1.0, &ds);
  out.grad = LinearModel::zeros(model.classes(), model.dimension());
  accumulate_backprop(out.grad, x, ds);
  return out;
}

namespace {

void adam_update(std::vector<double>& param, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& g, const AdamState& s, double bias1, double bias2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    param[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace

void adam_step(AdamState& state, LinearModel& model, const ModelGrad& grads) {
  if (grads.a.rows() != model.a.rows() || grads.a.cols() != model.a.cols() ||
      grads.b.size() != model.b.size() || state.first_moment.a.data().size() != model.a.data().size() ||
      state.first_moment.b.size() != model.b.size()) {
    throw ShapeMismatch("adam state, model and gradient shapes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  adam_update(model.a.data(), state.first_moment.a.data(), state.second_moment.a.data(),
              grads.a.data(), state, bias1, bias2);
  adam_update(model.b, state.first_moment.b, state.second_moment.b, grads.b, state, bias1, bias2);
}

double zero_one_risk(const LinearModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const std::vector<int> pred = predict(model, data.x);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != data.y[i];
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

double weighted_zero_one_risk(const LinearModel& model, const Dataset& data, std::span<const double> w) {
  if (w.size() != model.classes()) throw ShapeMismatch("weight vector length differs from L");
  if (data.size() == 0) return 0.0;
  const std::vector<int> pred = predict(model, data.x);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] != data.y[i]) total += w[static_cast<std::size_t>(data.y[i] - 1)];
  }
  return total / static_cast<double>(data.size());
}

double cross_entropy_risk(const LinearModel& model, const Dataset& data, std::span<const double> w) {
  if (!w.empty() && w.size() != model.classes()) throw ShapeMismatch("weight vector length differs from L");
  Vector sample_weights(data.size(), 1.0);
  if (!w.empty()) {
    for (std::size_t i = 0; i < data.size(); ++i) sample_weights[i] = w[static_cast<std::size_t>(data.y[i] - 1)];
  }
  return weighted_cross_entropy_scores(scores(model, data.x), data.y, sample_weights, 1.0, nullptr);
}

}  // namespace cicda
