#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cicda/algorithms.hpp"
#include "cicda/detection.hpp"
#include "cicda/scm.hpp"

namespace cicda {

struct SuiteConfig {
  std::string scenario = "SCM-I";
  ScenarioOptions scenario_options;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  // Penalty strengths for DIP/CIP-type penalties and for the CIP proxy.
  std::vector<double> lambda_grid = {0.01, 0.1, 1, 10, 100};
  std::vector<double> lambda_cip_grid = {0.01, 0.1, 1, 10, 100};
  // IRM and V-REx.
  std::vector<double> invariance_grid = {0.1, 1, 10, 100, 1000, 10000};
  std::vector<std::size_t> anneal_grid = {0, 10, 100, 1000, 3000};
  std::vector<double> eta_grid = {0.01, 0.1, 1, 10};
  std::vector<double> alpha_list = {0.0, 0.25, 0.5, 0.75};
  // Distance for CIP/DIP penalties and the proxy; JointDIP always uses MMD.
  PenaltyKind penalty = PenaltyKind::kMean;
  std::size_t epochs = 50;
  bool split = false;
  // Detection on label-shift scenarios.
  bool force = false;
  // 1-based source for detection; 0 selects the scenario's DIP source.
  int detection_source = 0;
  std::size_t jobs = 1;
  std::filesystem::path out_dir;

  /// Throws ConfigError.
  void validate() const;
};

/// Reads a JSON object whose keys mirror SuiteConfig fields (methods by
/// display name, penalty as "mean"/"mmd", out as a path). Keys not present
/// keep the values of `base`.
SuiteConfig suite_config_from_json(const std::string& text, SuiteConfig base = {});

/// One point of a method's hyperparameter grid.
struct HyperParams {
  double lambda = 0.0;
  double lambda_cip = 0.0;
  double eta = 0.0;
  std::size_t anneal = 0;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

/// Grid searched for `method` under `config`, in a fixed order.
std::vector<HyperParams> hyperparameter_grid(Method method, const SuiteConfig& config);
MethodSpec make_method_spec(Method method, const HyperParams& params, const SuiteConfig& config);

struct CellResult {
  Method method = Method::kErm;
  HyperParams params;
  std::uint64_t seed = 0;
  std::optional<RunMetrics> metrics;  // empty when training failed
  std::optional<LinearModel> model;
  std::string error;
};

struct TableRow {
  std::string method;
  double src_acc_mean = 0.0;
  double src_acc_sd = 0.0;
  double tar_acc_mean = 0.0;
  double tar_acc_sd = 0.0;
};

struct ResultTable {
  std::vector<TableRow> rows;
};

struct MethodSelection {
  Method method = Method::kErm;
  HyperParams params;
  double mean_val_acc = 0.0;
  std::vector<CellResult> per_seed;  // in seed order; missing cells kept
};

struct SuiteResult {
  ResultTable table;  // percent, selected hyperparameters, in method order
  std::vector<MethodSelection> selections;
  std::vector<CellResult> cells;  // every grid cell, ordered by (method, grid point, seed)
  std::size_t failed_cells = 0;
};

/// Builds each seed's scenario and data, trains every method over its grid
/// on a pool of config.jobs workers and picks, per method, the grid point
/// with the highest mean validation accuracy across seeds.
SuiteResult run_suite(const SuiteConfig& config);

/// Scenario and data of one seed, as used by the suite.
struct SeedData {
  ScenarioSpec scenario;
  std::vector<Dataset> data;
  Rng training_rng{0};
};
SeedData prepare_seed(const SuiteConfig& config, std::uint64_t seed);

enum class TableFormat { kCsv, kJson, kMarkdown };
std::string emit_table(const ResultTable& table, TableFormat format);
/// Parses the CSV produced by emit_table; throws IoError.
ResultTable parse_table_csv(const std::string& text);

/// Per-seed metrics of the selected grid points.
std::string emit_selected_cells_csv(const SuiteResult& result);
/// Mean validation and target accuracy of every grid point.
std::string emit_grid_csv(const SuiteResult& result, const SuiteConfig& config);

struct DetectionRow {
  std::string method;
  double lambda = 0.0;
  double alpha = 0.0;
  double bound = 0.0;  // accuracy upper bound
  std::optional<double> actual;
  double region_fraction = 1.0;
  std::optional<std::uint64_t> seed;  // empty for rows averaged over seeds
};

struct DetectionResult {
  double cip_lambda = 0.0;  // selected CIP strength used by the proxy and JointDIP
  std::vector<DetectionRow> rows;  // per-seed rows, then per-(method, lambda, alpha) means
  std::size_t failed_cells = 0;
};

/// Trains DIP and JointDIP over config.lambda_grid and compares the accuracy
/// upper bound of each against its actual target accuracy for every alpha.
/// Refuses scenarios with label shift unless config.force is set.
DetectionResult run_detection_experiment(const SuiteConfig& config);
std::string emit_detection_csv(const DetectionResult& result);
std::string emit_detection_jsonl(const DetectionResult& result);

struct CoefficientRow {
  std::string method;
  std::map<std::string, double> group_norms;  // mean over seeds
};

/// Selected models of config.methods and their mean coordinate-group norms.
std::vector<CoefficientRow> coefficient_norms(const SuiteResult& result, const SuiteConfig& config);
std::string emit_coefficients_csv(const std::vector<CoefficientRow>& rows);

struct DomainCountRow {
  int num_sources = 0;
  double src_acc_mean = 0.0, src_acc_sd = 0.0;
  double tar_acc_mean = 0.0, tar_acc_sd = 0.0;
  double risk_diff_mean = 0.0, risk_diff_sd = 0.0;  // target minus source cross-entropy
  HyperParams params;
};

/// CIP on the scenario (SCM-binary by default) for each number of source
/// domains, with grid selection per count.
std::vector<DomainCountRow> run_domain_count_study(const SuiteConfig& config, const std::vector<int>& counts);
std::string emit_domain_count_csv(const std::vector<DomainCountRow>& rows);

/// Mean and sample standard deviation (0 for fewer than two values).
std::pair<double, double> mean_and_sd(const std::vector<double>& values);

}  // namespace cicda
