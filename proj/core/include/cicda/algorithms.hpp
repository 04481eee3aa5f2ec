#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cicda/model.hpp"
#include "cicda/penalties.hpp"
#include "cicda/scm.hpp"

namespace cicda {

enum class Method {
  kTar,
  kErm,
  kErmPool,
  kDip,
  kDipPool,
  kCip,
  kIwErm,
  kIwCip,
  kIwDip,
  kJointDip,
  kJointDipPool,
  kIwJointDip,
  kIrm,
  kVrex,
  kGroupDro,
};

/// All methods in table order.
const std::vector<Method>& all_methods();
std::string method_name(Method method);
/// Accepts the display names ("IW-CIP", "V-REx", ...); throws ConfigError.
Method parse_method(std::string_view name);

/// Methods whose final stage is preceded by a proxy (CIP or ERM-Pool) run.
bool uses_proxy(Method method);
bool uses_importance_weights(Method method);
/// Methods whose objective looks at target covariates.
bool uses_target_covariates(Method method);

struct MethodSpec {
  Method method = Method::kErm;
  // Main penalty; lambda is its strength (lambda_DIP, lambda_CIP,
  // lambda_IW-CIP, lambda_j-DIP, lambda_IRM or lambda_VREx by method).
  PenaltySpec penalty;
  // Strength and distance of the CIP stage that produces the proxy.
  double lambda_cip = 1.0;
  PenaltyKind proxy_kind = PenaltyKind::kMean;
  std::size_t epochs = 50;
  std::size_t batch_size = 100;
  double lr = 1e-2;
  double groupdro_eta = 0.1;
  // IRM and V-REx: penalty weight is 1 for the first this many optimizer
  // steps and `penalty.lambda` afterwards.
  std::size_t penalty_anneal_steps = 0;
  // Train proxy, estimate weights and fit the final model on three
  // disjoint thirds of every source domain.
  bool split = false;

  void validate() const;
};

/// Defaults for the SCM experiments: 50 epochs, Adam(1e-2), batch 100,
/// mean distance, except JointDIP variants which always use MMD.
MethodSpec default_method_spec(Method method);

/// Spec of the standalone run that produces the proxy for `spec`.
MethodSpec proxy_spec(const MethodSpec& spec);

struct EpochRecord {
  double objective = 0.0;  // surrogate risk + lambda * penalty, epoch mean
  double penalty = 0.0;    // unscaled penalty, epoch mean
};

struct RunMetrics {
  double src_acc = 0.0;  // on the single (DIP) source domain
  double tar_acc = 0.0;
  double src_risk = 0.0;
  double tar_risk = 0.0;
  double val_acc = 0.0;  // on the labeled 10% of the target
  double src_ce = 0.0;   // mean over sources of the (weighted) cross-entropy
  double tar_ce = 0.0;
};

struct TrainedRun {
  MethodSpec spec;
  LinearModel model;
  std::optional<LinearModel> proxy;
  std::optional<ImportanceWeights> weights;
  RunMetrics metrics;
  std::vector<EpochRecord> history;
  // groupDRO domain weights at the end of each epoch.
  std::vector<Vector> groupdro_q;
};

/// Number of target rows whose labels are visible for model selection.
std::size_t validation_size(std::size_t target_rows);

/// Trains one method. `data` holds the M source domains followed by the
/// target. Target labels are read only by Tar and by metric reporting. A
/// precomputed proxy (the model a standalone proxy_spec(spec) run would
/// produce with the same rng) can be supplied to skip that stage.
TrainedRun train_method(const MethodSpec& spec, const ScenarioSpec& scenario,
                        const std::vector<Dataset>& data, const Rng& rng,
                        const LinearModel* precomputed_proxy = nullptr);

RunMetrics evaluate_run(const LinearModel& model, const ScenarioSpec& scenario,
                        const std::vector<Dataset>& data, const std::optional<ImportanceWeights>& weights);

struct ObjectiveValue {
  double objective = 0.0;
  double penalty = 0.0;
  ModelGrad grad;
};

/// The final-stage training objective of `spec` evaluated once with every
/// row of every domain in a single batch, and the gradient the optimizer
/// would follow. Proxy methods need `proxy`. groupDRO takes one weight
/// update from uniform and treats the result as constant.
ObjectiveValue full_batch_objective(const MethodSpec& spec, const ScenarioSpec& scenario,
                                    const std::vector<Dataset>& data, const LinearModel& model,
                                    const LinearModel* proxy = nullptr);

/// One multiplicative-weights step on log-weights: log q_m += eta * R_m,
/// then renormalise. Returns the resulting simplex point.
Vector groupdro_update(Vector& log_q, std::span<const double> risks, double eta);

/// Per-label mean-difference diagnostic
/// (1/(M-1)) sum_{m>=2} d^T S_m^{-1} d with d the class-y feature mean of
/// domain m minus that of domain 1 and S_m the class-y covariance of domain
/// m, ridge-regularised by 1e-8 * trace / q. Keys are labels 1..L.
std::map<int, double> deviation_diagnostic(const std::vector<DomainFeatures>& domains, int classes);
std::map<int, double> deviation_diagnostic(const LinearModel& model, const std::vector<Dataset>& sources);

}  // namespace cicda
