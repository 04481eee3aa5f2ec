#include "cicda/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "cicda/error.hpp"
#include "cicda/label_shift.hpp"

namespace cicda {

namespace {

struct MethodInfo {
  Method method;
  const char* name;
};

constexpr MethodInfo kMethods[] = {
    {Method::kTar, "Tar"},
    {Method::kErm, "ERM"},
    {Method::kErmPool, "ERM-Pool"},
    {Method::kDip, "DIP"},
    {Method::kDipPool, "DIP-Pool"},
    {Method::kCip, "CIP"},
    {Method::kIwErm, "IW-ERM"},
    {Method::kIwCip, "IW-CIP"},
    {Method::kIwDip, "IW-DIP"},
    {Method::kJointDip, "JointDIP"},
    {Method::kJointDipPool, "JointDIP-Pool"},
    {Method::kIwJointDip, "IW-JointDIP"},
    {Method::kIrm, "IRM"},
    {Method::kVrex, "V-REx"},
    {Method::kGroupDro, "groupDRO"},
};

}  // namespace

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& info : kMethods) out.push_back(info.method);
    return out;
  }();
  return methods;
}

std::string method_name(Method method) {
  for (const auto& info : kMethods) {
    if (info.method == method) return info.name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& info : kMethods) {
    if (name == info.name) return info.method;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool uses_proxy(Method method) {
  switch (method) {
    case Method::kIwErm:
    case Method::kIwCip:
    case Method::kIwDip:
    case Method::kJointDip:
    case Method::kJointDipPool:
    case Method::kIwJointDip:
      return true;
    default:
      return false;
  }
}

bool uses_importance_weights(Method method) {
  return method == Method::kIwErm || method == Method::kIwCip || method == Method::kIwDip ||
         method == Method::kIwJointDip;
}

bool uses_target_covariates(Method method) {
  switch (method) {
    case Method::kDip:
    case Method::kDipPool:
    case Method::kJointDip:
    case Method::kJointDipPool:
    case Method::kIwDip:
    case Method::kIwJointDip:
      return true;
    default:
      return false;
  }
}

void MethodSpec::validate() const {
  penalty.validate();
  if (!std::isfinite(lambda_cip) || lambda_cip < 0.0) throw ConfigError("lambda_cip must be finite and >= 0");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!std::isfinite(groupdro_eta) || groupdro_eta < 0.0) throw ConfigError("groupDRO eta must be >= 0");
}

MethodSpec default_method_spec(Method method) {
  MethodSpec spec;
  spec.method = method;
  spec.penalty.kind = PenaltyKind::kMean;
  spec.penalty.lambda = 1.0;
  if (method == Method::kJointDip || method == Method::kJointDipPool || method == Method::kIwJointDip) {
    spec.penalty.kind = PenaltyKind::kMmd;
  }
  return spec;
}

MethodSpec proxy_spec(const MethodSpec& spec) {
  MethodSpec proxy = spec;
  proxy.split = false;
  proxy.method = spec.method == Method::kIwErm ? Method::kErmPool : Method::kCip;
  proxy.penalty.kind = spec.proxy_kind;
  proxy.penalty.lambda = spec.lambda_cip;
  return proxy;
}

std::size_t validation_size(std::size_t target_rows) {
  return std::max<std::size_t>(1, (target_rows + 9) / 10);
}

Vector groupdro_update(Vector& log_q, std::span<const double> risks, double eta) {
  if (log_q.size() != risks.size()) throw ShapeMismatch("one risk per group required");
  for (std::size_t m = 0; m < log_q.size(); ++m) log_q[m] += eta * risks[m];
  Vector q = softmax(log_q);
  for (std::size_t m = 0; m < q.size(); ++m) log_q[m] = std::log(q[m]);
  return q;
}

namespace {

enum class Objective { kErm, kCip, kDip, kJointDip, kIrm, kVrex, kGroupDro };

struct Stage {
  Objective objective = Objective::kErm;
  std::vector<const Dataset*> sources;
  std::vector<Vector> label_weights;  // parallel to sources; empty = unweighted
  bool weighted_penalty = false;
  const Dataset* target = nullptr;  // covariates only
  std::vector<Matrix> source_cic;   // proxy scores parallel to sources
  Matrix target_cic;
  PenaltySpec penalty;
  double eta = 0.0;
};

struct Batch {
  Matrix x;
  std::vector<int> y;
  Vector w;  // per-row loss weights
  Matrix cic;
};

struct StageResult {
  LinearModel model;
  std::vector<EpochRecord> history;
  std::vector<Vector> groupdro_q;
};

Batch make_batch(const Dataset& data, std::span<const std::size_t> rows, const Vector* label_weights,
                 const Matrix* cic) {
  Batch b;
  b.x = data.x.select_rows(rows);
  b.y.reserve(rows.size());
  b.w.reserve(rows.size());
  for (std::size_t r : rows) {
    const int label = data.y.empty() ? 1 : data.y[r];
    b.y.push_back(label);
    b.w.push_back(label_weights && !label_weights->empty()
                      ? (*label_weights)[static_cast<std::size_t>(label - 1)]
                      : 1.0);
  }
  if (cic) b.cic = cic->select_rows(rows);
  return b;
}

// dR/dw at w = 1 of the mean cross-entropy of w * scores, and
// optionally its gradient with respect to the scores.
double irm_gradient(const Matrix& s, std::span<const int> y, Matrix* dg_ds) {
  const std::size_t n = s.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  double g = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = s.row(i);
    const Vector p = softmax(row);
    const auto label = static_cast<std::size_t>(y[i] - 1);
    double p_dot_s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      g += (p[k] - (k == label ? 1.0 : 0.0)) * row[k] * inv_n;
      p_dot_s += p[k] * row[k];
    }
    if (dg_ds) {
      auto d = dg_ds->row(i);
      for (std::size_t k = 0; k < row.size(); ++k) {
        d[k] = inv_n * ((p[k] - (k == label ? 1.0 : 0.0)) + p[k] * (row[k] - p_dot_s));
      }
    }
  }
  return g;
}

void add_scaled(Matrix& into, const Matrix& from, double scale) {
  auto& dst = into.data();
  const auto& src = from.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

bool has_positive(const Vector& w) {
  return std::any_of(w.begin(), w.end(), [](double v) { return v > 0.0; });
}

// Objective on one step's batches; fills grad and returns (objective, raw penalty).
std::pair<double, double> evaluate_objective(const Stage& stage, double lambda, const LinearModel& model,
                                             const std::vector<Batch>& src, const Batch* tgt,
                                             Vector& log_q, ModelGrad& grad) {
  const std::size_t count = src.size();
  const double inv_count = 1.0 / static_cast<double>(count);
  std::vector<Matrix> s(count), ds(count);
  for (std::size_t m = 0; m < count; ++m) {
    s[m] = scores(model, src[m].x);
    ds[m] = Matrix(s[m].rows(), s[m].cols());
  }
  Matrix s_tgt, ds_tgt;
  if (tgt) {
    s_tgt = scores(model, tgt->x);
    ds_tgt = Matrix(s_tgt.rows(), s_tgt.cols());
  }

  double objective = 0.0;
  double penalty = 0.0;
  switch (stage.objective) {
    case Objective::kErm:
    case Objective::kCip: {
      for (std::size_t m = 0; m < count; ++m) {
        objective += weighted_cross_entropy_scores(s[m], src[m].y, src[m].w, inv_count, &ds[m]);
      }
      if (stage.objective == Objective::kCip) {
        std::vector<DomainFeatures> features(count);
        for (std::size_t m = 0; m < count; ++m) features[m] = {s[m], src[m].y};
        const CipPenaltyValue cip = cip_penalty(features, static_cast<int>(model.classes()), stage.penalty);
        penalty = cip.value;
        objective += lambda * cip.value;
        for (std::size_t m = 0; m < count; ++m) add_scaled(ds[m], cip.grads[m], lambda);
      }
      break;
    }
    case Objective::kDip:
    case Objective::kJointDip: {
      const FeatureBatch target_batch{s_tgt, {}};
      for (std::size_t m = 0; m < count; ++m) {
        objective += weighted_cross_entropy_scores(s[m], src[m].y, src[m].w, inv_count, &ds[m]);
        FeatureBatch source_batch{s[m], {}};
        if (stage.weighted_penalty) {
          if (!has_positive(src[m].w)) continue;
          source_batch.weights = src[m].w;
        }
        const PenaltyValue d = stage.objective == Objective::kDip
                                   ? dip_penalty(source_batch, target_batch, stage.penalty)
                                   : joint_dip_penalty(source_batch, target_batch, src[m].cic, tgt->cic,
                                                       stage.penalty);
        penalty += inv_count * d.value;
        objective += lambda * inv_count * d.value;
        add_scaled(ds[m], d.grad_src, lambda * inv_count);
        add_scaled(ds_tgt, d.grad_tgt, lambda * inv_count);
      }
      break;
    }
    case Objective::kIrm: {
      for (std::size_t m = 0; m < count; ++m) {
        objective += weighted_cross_entropy_scores(s[m], src[m].y, src[m].w, inv_count, &ds[m]);
        Matrix dg(s[m].rows(), s[m].cols());
        const double g = irm_gradient(s[m], src[m].y, &dg);
        penalty += inv_count * g * g;
        objective += lambda * inv_count * g * g;
        add_scaled(ds[m], dg, 2.0 * lambda * inv_count * g);
      }
      break;
    }
    case Objective::kVrex: {
      Vector risks(count);
      std::vector<Matrix> dr(count);
      for (std::size_t m = 0; m < count; ++m) {
        dr[m] = Matrix(s[m].rows(), s[m].cols());
        risks[m] = weighted_cross_entropy_scores(s[m], src[m].y, src[m].w, 1.0, &dr[m]);
      }
      const double mean = std::accumulate(risks.begin(), risks.end(), 0.0) * inv_count;
      double variance = 0.0;
      for (double r : risks) variance += (r - mean) * (r - mean);
      variance *= inv_count;
      penalty = variance;
      objective = mean + lambda * variance;
      for (std::size_t m = 0; m < count; ++m) {
        add_scaled(ds[m], dr[m], inv_count + lambda * 2.0 * (risks[m] - mean) * inv_count);
      }
      break;
    }
    case Objective::kGroupDro: {
      Vector risks(count);
      std::vector<Matrix> dr(count);
      for (std::size_t m = 0; m < count; ++m) {
        dr[m] = Matrix(s[m].rows(), s[m].cols());
        risks[m] = weighted_cross_entropy_scores(s[m], src[m].y, src[m].w, 1.0, &dr[m]);
      }
      const Vector q = groupdro_update(log_q, risks, stage.eta);
      for (std::size_t m = 0; m < count; ++m) {
        objective += q[m] * risks[m];
        add_scaled(ds[m], dr[m], q[m]);
      }
      break;
    }
  }

  for (std::size_t m = 0; m < count; ++m) accumulate_backprop(grad, src[m].x, ds[m]);
  if (tgt) accumulate_backprop(grad, tgt->x, ds_tgt);
  return {objective, penalty};
}

StageResult run_stage(const Stage& stage, const MethodSpec& spec, std::size_t classes, std::size_t dim,
                      Rng& rng) {
  StageResult result;
  result.model = LinearModel::random(classes, dim, rng, 0.01);
  if (spec.epochs == 0) return result;

  const bool with_target = stage.objective == Objective::kDip || stage.objective == Objective::kJointDip;
  const std::size_t count = stage.sources.size();
  if (count == 0) throw ConfigError("training stage has no labeled domains");
  std::vector<const Dataset*> participants = stage.sources;
  if (with_target) participants.push_back(stage.target);

  std::size_t longest = 0;
  for (const Dataset* d : participants) {
    if (d->size() == 0) throw EmptyDataset("training domain is empty");
    longest = std::max(longest, d->size());
  }
  const std::size_t batch = spec.batch_size;
  const std::size_t steps = (longest + batch - 1) / batch;

  AdamState adam = AdamState::for_model(result.model, spec.lr);
  Vector log_q(count, -std::log(static_cast<double>(count)));
  std::vector<std::vector<std::size_t>> order(participants.size());

  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    for (std::size_t d = 0; d < participants.size(); ++d) {
      order[d].resize(participants[d]->size());
      std::iota(order[d].begin(), order[d].end(), std::size_t{0});
      rng.shuffle(order[d]);
    }
    EpochRecord record;
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<Batch> src(count);
      Batch tgt;
      for (std::size_t d = 0; d < participants.size(); ++d) {
        const std::size_t n = order[d].size();
        const std::size_t take = std::min(batch, n);
        std::vector<std::size_t> rows(take);
        for (std::size_t k = 0; k < take; ++k) rows[k] = order[d][(t * batch + k) % n];
        if (d < count) {
          src[d] = make_batch(*participants[d], rows,
                              stage.label_weights.empty() ? nullptr : &stage.label_weights[d],
                              stage.source_cic.empty() ? nullptr : &stage.source_cic[d]);
        } else {
          tgt = make_batch(*participants[d], rows, nullptr,
                           stage.target_cic.empty() ? nullptr : &stage.target_cic);
        }
      }
      ModelGrad grad = LinearModel::zeros(classes, dim);
      const bool annealing = (stage.objective == Objective::kIrm || stage.objective == Objective::kVrex) &&
                             adam.step < spec.penalty_anneal_steps;
      const double lambda = annealing ? 1.0 : stage.penalty.lambda;
      const auto [objective, penalty] =
          evaluate_objective(stage, lambda, result.model, src, with_target ? &tgt : nullptr, log_q, grad);
      adam_step(adam, result.model, grad);
      record.objective += objective;
      record.penalty += penalty;
    }
    record.objective /= static_cast<double>(steps);
    record.penalty /= static_cast<double>(steps);
    result.history.push_back(record);
    if (stage.objective == Objective::kGroupDro) result.groupdro_q.push_back(softmax(log_q));
  }
  return result;
}

// Rows [part * n / 3, (part + 1) * n / 3) of a domain.
Dataset third(const Dataset& data, std::size_t part) {
  const std::size_t n = data.size();
  std::vector<std::size_t> rows;
  for (std::size_t i = part * n / 3; i < (part + 1) * n / 3; ++i) rows.push_back(i);
  return data.subset(rows);
}

// Objective, domains and penalty inputs of the final training stage.
Stage build_stage(const MethodSpec& spec, const ScenarioSpec& scenario, const std::vector<Dataset>& train_data,
                  const Dataset& target, const std::optional<LinearModel>& proxy,
                  const std::optional<ImportanceWeights>& weights) {
  const auto num_sources = static_cast<std::size_t>(scenario.num_source_domains);
  const std::size_t dip = static_cast<std::size_t>(scenario.dip_source_index - 1);
  Stage stage;
  stage.penalty = spec.penalty;
  stage.eta = spec.groupdro_eta;
  stage.target = &train_data[num_sources];
  const auto all_sources = [&] {
    std::vector<const Dataset*> out;
    for (std::size_t m = 0; m < num_sources; ++m) out.push_back(&train_data[m]);
    return out;
  };
  const auto all_weights = [&] { return weights->per_domain; };

  switch (spec.method) {
    case Method::kTar:
      stage.objective = Objective::kErm;
      stage.sources = {&target};
      break;
    case Method::kErm:
      stage.objective = Objective::kErm;
      stage.sources = {&train_data[dip]};
      break;
    case Method::kErmPool:
      stage.objective = Objective::kErm;
      stage.sources = all_sources();
      break;
    case Method::kDip:
      stage.objective = Objective::kDip;
      stage.sources = {&train_data[dip]};
      break;
    case Method::kDipPool:
      stage.objective = Objective::kDip;
      stage.sources = all_sources();
      break;
    case Method::kCip:
      stage.objective = Objective::kCip;
      stage.sources = all_sources();
      break;
    case Method::kIwErm:
      stage.objective = Objective::kErm;
      stage.sources = all_sources();
      stage.label_weights = all_weights();
      break;
    case Method::kIwCip:
      stage.objective = Objective::kCip;
      stage.sources = all_sources();
      stage.label_weights = all_weights();
      break;
    case Method::kIwDip:
      stage.objective = Objective::kDip;
      stage.sources = {&train_data[dip]};
      stage.label_weights = {weights->per_domain[dip]};
      stage.weighted_penalty = true;
      break;
    case Method::kJointDip:
    case Method::kIwJointDip:
      stage.objective = Objective::kJointDip;
      stage.sources = {&train_data[dip]};
      if (spec.method == Method::kIwJointDip) {
        stage.label_weights = {weights->per_domain[dip]};
        stage.weighted_penalty = true;
      }
      break;
    case Method::kJointDipPool:
      stage.objective = Objective::kJointDip;
      stage.sources = all_sources();
      break;
    case Method::kIrm:
      stage.objective = Objective::kIrm;
      stage.sources = all_sources();
      break;
    case Method::kVrex:
      stage.objective = Objective::kVrex;
      stage.sources = all_sources();
      break;
    case Method::kGroupDro:
      stage.objective = Objective::kGroupDro;
      stage.sources = all_sources();
      break;
  }
  if (stage.objective == Objective::kJointDip) {
    stage.penalty.kind = PenaltyKind::kMmd;
    for (const Dataset* d : stage.sources) stage.source_cic.push_back(scores(*proxy, d->x));
    stage.target_cic = scores(*proxy, stage.target->x);
  }

  return stage;
}

void check_inputs(const MethodSpec& spec, const ScenarioSpec& scenario, const std::vector<Dataset>& data) {
  spec.validate();
  const auto num_sources = static_cast<std::size_t>(scenario.num_source_domains);
  if (data.size() != num_sources + 1) throw ConfigError("data must hold every source domain and the target");
  for (const auto& d : data) {
    if (d.x.cols() != scenario.dimension) throw ShapeMismatch("dataset width differs from scenario dimension");
  }
}

ImportanceWeights importance_weights(const LinearModel& proxy, const std::vector<Dataset>& sources,
                                     const Dataset& target, std::size_t num_sources) {
  const Vector mu = predicted_target_distribution(proxy, target.x);
  ImportanceWeights weights;
  for (std::size_t m = 0; m < num_sources; ++m) {
    weights.per_domain.push_back(estimate_weights(confusion_matrix(proxy, sources[m]), mu));
  }
  return weights;
}

}  // namespace

RunMetrics evaluate_run(const LinearModel& model, const ScenarioSpec& scenario,
                        const std::vector<Dataset>& data, const std::optional<ImportanceWeights>& weights) {
  const auto num_sources = static_cast<std::size_t>(scenario.num_source_domains);
  const Dataset& source = data[static_cast<std::size_t>(scenario.dip_source_index - 1)];
  const Dataset& target = data[num_sources];

  RunMetrics metrics;
  metrics.src_risk = zero_one_risk(model, source);
  metrics.src_acc = 1.0 - metrics.src_risk;
  metrics.tar_risk = zero_one_risk(model, target);
  metrics.tar_acc = 1.0 - metrics.tar_risk;

  std::vector<std::size_t> val_rows(std::min(validation_size(target.size()), target.size()));
  std::iota(val_rows.begin(), val_rows.end(), std::size_t{0});
  metrics.val_acc = val_rows.empty() ? 0.0 : 1.0 - zero_one_risk(model, target.subset(val_rows));

  double src_ce = 0.0;
  for (std::size_t m = 0; m < num_sources; ++m) {
    const std::span<const double> w =
        weights ? std::span<const double>(weights->per_domain[m]) : std::span<const double>{};
    src_ce += cross_entropy_risk(model, data[m], w);
  }
  metrics.src_ce = src_ce / static_cast<double>(num_sources);
  metrics.tar_ce = cross_entropy_risk(model, target);
  return metrics;
}

TrainedRun train_method(const MethodSpec& spec, const ScenarioSpec& scenario,
                        const std::vector<Dataset>& data, const Rng& rng,
                        const LinearModel* precomputed_proxy) {
  check_inputs(spec, scenario, data);
  const auto num_sources = static_cast<std::size_t>(scenario.num_source_domains);
  const auto classes = static_cast<std::size_t>(scenario.classes);
  const Dataset& target = data[num_sources];

  // Source data seen by each stage.
  std::vector<Dataset> proxy_data, weight_data, final_data;
  const bool split = spec.split && uses_proxy(spec.method);
  if (split) {
    for (std::size_t m = 0; m < num_sources; ++m) {
      proxy_data.push_back(third(data[m], 0));
      weight_data.push_back(third(data[m], 1));
      final_data.push_back(third(data[m], 2));
    }
    proxy_data.push_back(target);
    final_data.push_back(target);
  }
  const std::vector<Dataset>& train_data = split ? final_data : data;
  const std::vector<Dataset>& estimate_data = split ? weight_data : data;

  TrainedRun run;
  run.spec = spec;
  Rng stage_rng = rng;
  if (uses_proxy(spec.method)) {
    if (precomputed_proxy) {
      run.proxy = *precomputed_proxy;
    } else {
      run.proxy = train_method(proxy_spec(spec), scenario, split ? proxy_data : data, rng).model;
    }
    stage_rng = rng.substream(1);
  }

  if (uses_importance_weights(spec.method)) {
    run.weights = importance_weights(*run.proxy, estimate_data, target, num_sources);
  }

  const Stage stage = build_stage(spec, scenario, train_data, target, run.proxy, run.weights);
  StageResult result = run_stage(stage, spec, classes, scenario.dimension, stage_rng);
  run.model = std::move(result.model);
  run.history = std::move(result.history);
  run.groupdro_q = std::move(result.groupdro_q);
  run.metrics = evaluate_run(run.model, scenario, data, run.weights);
  return run;
}

ObjectiveValue full_batch_objective(const MethodSpec& spec, const ScenarioSpec& scenario,
                                    const std::vector<Dataset>& data, const LinearModel& model,
                                    const LinearModel* proxy) {
  check_inputs(spec, scenario, data);
  const auto num_sources = static_cast<std::size_t>(scenario.num_source_domains);
  const Dataset& target = data[num_sources];
  std::optional<LinearModel> proxy_model;
  std::optional<ImportanceWeights> weights;
  if (uses_proxy(spec.method)) {
    if (!proxy) throw ConfigError(method_name(spec.method) + " needs a proxy model");
    proxy_model = *proxy;
    if (uses_importance_weights(spec.method)) weights = importance_weights(*proxy, data, target, num_sources);
  }
  const Stage stage = build_stage(spec, scenario, data, target, proxy_model, weights);

  std::vector<Batch> src;
  for (std::size_t m = 0; m < stage.sources.size(); ++m) {
    std::vector<std::size_t> rows(stage.sources[m]->size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    src.push_back(make_batch(*stage.sources[m], rows, stage.label_weights.empty() ? nullptr : &stage.label_weights[m],
                             stage.source_cic.empty() ? nullptr : &stage.source_cic[m]));
  }
  const bool with_target = stage.objective == Objective::kDip || stage.objective == Objective::kJointDip;
  Batch tgt;
  if (with_target) {
    std::vector<std::size_t> rows(stage.target->size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    tgt = make_batch(*stage.target, rows, nullptr, stage.target_cic.empty() ? nullptr : &stage.target_cic);
  }
  Vector log_q(src.size(), -std::log(static_cast<double>(src.size())));
  ObjectiveValue out;
  out.grad = LinearModel::zeros(model.classes(), model.dimension());
  std::tie(out.objective, out.penalty) =
      evaluate_objective(stage, stage.penalty.lambda, model, src, with_target ? &tgt : nullptr, log_q, out.grad);
  return out;
}

std::map<int, double> deviation_diagnostic(const std::vector<DomainFeatures>& domains, int classes) {
  const std::size_t num_domains = domains.size();
  if (num_domains < 2) throw ConfigError("deviation diagnostic needs at least two domains");
  const std::size_t q = domains.front().values.cols();

  std::map<int, double> out;
  for (int y = 1; y <= classes; ++y) {
    std::vector<Vector> means(num_domains, Vector(q, 0.0));
    std::vector<Matrix> covs(num_domains, Matrix(q, q));
    for (std::size_t m = 0; m < num_domains; ++m) {
      const auto& d = domains[m];
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < d.labels.size(); ++i) {
        if (d.labels[i] == y) rows.push_back(i);
      }
      if (rows.size() < q + 1) {
        throw DegenerateClass("class " + std::to_string(y) + " has fewer than q+1 rows in domain " +
                              std::to_string(m + 1));
      }
      for (std::size_t r : rows) {
        for (std::size_t c = 0; c < q; ++c) means[m][c] += d.values(r, c);
      }
      for (double& v : means[m]) v /= static_cast<double>(rows.size());
      for (std::size_t r : rows) {
        for (std::size_t a = 0; a < q; ++a) {
          const double da = d.values(r, a) - means[m][a];
          for (std::size_t b = 0; b < q; ++b) covs[m](a, b) += da * (d.values(r, b) - means[m][b]);
        }
      }
      for (double& v : covs[m].data()) v /= static_cast<double>(rows.size() - 1);
    }
    double total = 0.0;
    for (std::size_t m = 1; m < num_domains; ++m) {
      Vector delta(q);
      for (std::size_t c = 0; c < q; ++c) delta[c] = means[m][c] - means[0][c];
      Matrix cov = covs[m];
      double trace = 0.0;
      for (std::size_t c = 0; c < q; ++c) trace += cov(c, c);
      const double ridge = trace > 0.0 ? 1e-8 * trace / static_cast<double>(q) : 1e-12;
      for (std::size_t c = 0; c < q; ++c) cov(c, c) += ridge;
      const Vector solved = solve_linear_system(cov, delta);
      total += std::inner_product(delta.begin(), delta.end(), solved.begin(), 0.0);
    }
    out[y] = total / static_cast<double>(num_domains - 1);
  }
  return out;
}

std::map<int, double> deviation_diagnostic(const LinearModel& model, const std::vector<Dataset>& sources) {
  std::vector<DomainFeatures> features;
  features.reserve(sources.size());
  for (const auto& d : sources) features.push_back({scores(model, d.x), d.y});
  return deviation_diagnostic(features, static_cast<int>(model.classes()));
}

}  // namespace cicda
