// cicda: command-line driver for scenario generation, single training runs,
// table reproduction, detection experiments and coefficient summaries.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "cicda/error.hpp"
#include "cicda/harness.hpp"
#include "cicda/io.hpp"

namespace fs = std::filesystem;
using namespace cicda;

namespace {

constexpr int kExitFailedCells = 1;
constexpr int kExitConfig = 2;

// Flags shared by every subcommand. Strings and vectors stay empty unless
// given, so that a config file value is only overridden by explicit flags.
struct CommonFlags {
  std::string config_path;
  std::string scenario;
  std::string scenario_file;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::string penalty;
  std::vector<double> lambda_grid;
  std::vector<double> lambda_cip_grid;
  std::vector<double> alpha_list;
  std::string out;
  std::size_t jobs = 0;
  std::size_t epochs = 0;
  std::size_t samples = 0;
  int num_sources = 0;
  int source_domain = 0;
  bool force = false;
  bool split = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  cmd->add_option("--scenario", f.scenario, "SCM-I, SCM-II, SCM-III, SCM-IV, SCM-binary or custom");
  cmd->add_option("--scenario-file", f.scenario_file, "JSON scenario definition for --scenario custom")
      ->check(CLI::ExistingFile);
  cmd->add_option("--methods", f.methods, "comma-separated method names")->delimiter(',');
  cmd->add_option("--seeds", f.seeds, "comma-separated seeds")->delimiter(',');
  cmd->add_option("--penalty", f.penalty, "distance for CIP/DIP penalties")->check(CLI::IsMember({"mean", "mmd"}));
  cmd->add_option("--lambda-grid", f.lambda_grid, "penalty strengths to search")->delimiter(',');
  cmd->add_option("--lambda-cip-grid", f.lambda_cip_grid, "proxy CIP strengths to search")->delimiter(',');
  cmd->add_option("--alpha-list", f.alpha_list, "region levels for detection")->delimiter(',');
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--samples", f.samples, "samples per domain")->check(CLI::PositiveNumber);
  cmd->add_option("--num-sources", f.num_sources, "number of source domains (SCM-binary)");
  cmd->add_option("--source-domain", f.source_domain, "1-based source domain used by detection");
  cmd->add_flag("--force", f.force, "run detection even when the scenario has label shift");
  cmd->add_flag("--split", f.split, "fit proxy, weights and final model on disjoint thirds of each source");
  cmd->add_flag("-q,--quiet", f.quiet, "only write files");
}

SuiteConfig build_config(const CommonFlags& f, const std::string& default_scenario,
                         const std::vector<Method>& default_methods) {
  SuiteConfig config;
  config.scenario = default_scenario;
  config.methods = default_methods;
  if (!f.config_path.empty()) config = suite_config_from_json(read_text_file(f.config_path), config);
  if (!f.scenario.empty()) config.scenario = f.scenario;
  if (!f.scenario_file.empty()) {
    config.scenario_options.custom = scenario_from_json(read_text_file(f.scenario_file));
    if (f.scenario.empty()) config.scenario = "custom";
  }
  if (!f.methods.empty()) {
    config.methods.clear();
    for (const auto& m : f.methods) config.methods.push_back(parse_method(m));
  }
  if (!f.seeds.empty()) config.seeds = f.seeds;
  if (!f.penalty.empty()) config.penalty = f.penalty == "mmd" ? PenaltyKind::kMmd : PenaltyKind::kMean;
  if (!f.lambda_grid.empty()) config.lambda_grid = f.lambda_grid;
  if (!f.lambda_cip_grid.empty()) config.lambda_cip_grid = f.lambda_cip_grid;
  if (!f.alpha_list.empty()) config.alpha_list = f.alpha_list;
  if (!f.out.empty()) config.out_dir = f.out;
  if (f.jobs > 0) config.jobs = f.jobs;
  if (f.epochs > 0) config.epochs = f.epochs;
  if (f.samples > 0) config.scenario_options.samples_per_domain = f.samples;
  if (f.num_sources > 0) config.scenario_options.num_sources = f.num_sources;
  if (f.source_domain > 0) config.detection_source = f.source_domain;
  if (f.force) config.force = true;
  if (f.split) config.split = true;
  config.validate();
  return config;
}

void write_output(const SuiteConfig& config, const std::string& name, const std::string& text) {
  if (config.out_dir.empty()) return;
  write_text_file(config.out_dir / name, text);
}

int report_failures(std::size_t failed) {
  if (failed == 0) return 0;
  std::cerr << failed << " cell(s) failed and were recorded as missing\n";
  return kExitFailedCells;
}

int cmd_generate(const CommonFlags& f) {
  SuiteConfig config = build_config(f, "SCM-I", {});
  if (config.out_dir.empty()) throw ConfigError("generate needs --out");
  for (std::uint64_t seed : config.seeds) {
    const SeedData sd = prepare_seed(config, seed);
    std::ostringstream csv;
    write_datasets_csv(csv, sd.data);
    const std::string stem = "seed" + std::to_string(seed);
    write_output(config, stem + "_data.csv", csv.str());
    write_output(config, stem + "_scenario.json", scenario_to_json(sd.scenario));
    if (!f.quiet) std::cout << "wrote " << (config.out_dir / (stem + "_data.csv")).string() << '\n';
  }
  return 0;
}

struct TrainFlags {
  std::string method = "CIP";
  double lambda = 1.0;
  double lambda_cip = 1.0;
  double eta = 0.1;
  std::size_t anneal = 0;
};

int cmd_train(const CommonFlags& f, const TrainFlags& t) {
  SuiteConfig config = build_config(f, "SCM-I", {});
  const Method method = parse_method(t.method);
  const std::uint64_t seed = config.seeds.front();
  const SeedData sd = prepare_seed(config, seed);
  const HyperParams params{.lambda = t.lambda, .lambda_cip = t.lambda_cip, .eta = t.eta, .anneal = t.anneal};
  const TrainedRun run = train_method(make_method_spec(method, params, config), sd.scenario, sd.data, sd.training_rng);

  write_output(config, "run.json", run_to_json(run));
  write_output(config, "model.json", model_to_json(run.model) + "\n");
  if (run.weights) write_output(config, "weights.json", weights_to_json(*run.weights) + "\n");
  if (!f.quiet) {
    std::printf("%s on %s, seed %llu: src_acc %.4f tar_acc %.4f val_acc %.4f\n", t.method.c_str(),
                sd.scenario.name.c_str(), static_cast<unsigned long long>(seed), run.metrics.src_acc,
                run.metrics.tar_acc, run.metrics.val_acc);
    if (run.weights) {
      for (std::size_t m = 0; m < run.weights->per_domain.size(); ++m) {
        std::printf("  w^(%zu) =", m + 1);
        for (double w : run.weights->per_domain[m]) std::printf(" %.4f", w);
        std::printf("\n");
      }
    }
  }
  return 0;
}

int cmd_suite(const CommonFlags& f) {
  SuiteConfig config = build_config(f, "SCM-I", all_methods());
  const SuiteResult result = run_suite(config);
  write_output(config, "table.csv", emit_table(result.table, TableFormat::kCsv));
  write_output(config, "table.json", emit_table(result.table, TableFormat::kJson));
  write_output(config, "table.md", emit_table(result.table, TableFormat::kMarkdown));
  write_output(config, "cells.csv", emit_selected_cells_csv(result));
  write_output(config, "grid.csv", emit_grid_csv(result, config));
  if (!f.quiet) std::cout << emit_table(result.table, TableFormat::kMarkdown);
  return report_failures(result.failed_cells);
}

int cmd_detect(const CommonFlags& f) {
  SuiteConfig config = build_config(f, "SCM-III", {});
  const DetectionResult result = run_detection_experiment(config);
  write_output(config, "detection.csv", emit_detection_csv(result));
  write_output(config, "detection.jsonl", emit_detection_jsonl(result));
  if (!f.quiet) {
    std::printf("proxy: CIP with lambda %g\n", result.cip_lambda);
    std::printf("%-9s %8s %6s %8s %8s %8s\n", "method", "lambda", "alpha", "bound", "actual", "region");
    for (const auto& r : result.rows) {
      if (r.seed) continue;
      std::printf("%-9s %8g %6.2f %8.3f %8.3f %8.3f\n", r.method.c_str(), r.lambda, r.alpha, r.bound,
                  r.actual.value_or(std::nan("")), r.region_fraction);
    }
  }
  return report_failures(result.failed_cells);
}

int cmd_coefs(const CommonFlags& f) {
  SuiteConfig config = build_config(f, "SCM-III", {Method::kDip, Method::kJointDip});
  const SuiteResult result = run_suite(config);
  const auto rows = coefficient_norms(result, config);
  write_output(config, "coefs.csv", emit_coefficients_csv(rows));
  if (!f.quiet) std::cout << emit_coefficients_csv(rows);
  return report_failures(result.failed_cells);
}

int cmd_domains(const CommonFlags& f, const std::vector<int>& counts) {
  SuiteConfig config = build_config(f, "SCM-binary", {Method::kCip});
  const auto rows = run_domain_count_study(config, counts);
  write_output(config, "domains.csv", emit_domain_count_csv(rows));
  if (!f.quiet) {
    std::printf("%3s %8s %14s %14s %22s\n", "M", "lambda", "src_acc", "tar_acc", "risk_diff");
    for (const auto& r : rows) {
      std::printf("%3d %8g %8.1f±%-5.1f %8.1f±%-5.1f %11.3g±%-10.3g\n", r.num_sources, r.params.lambda,
                  r.src_acc_mean, r.src_acc_sd, r.tar_acc_mean, r.tar_acc_sd, r.risk_diff_mean, r.risk_diff_sd);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditionally invariant components for domain adaptation on linear SCMs"};
  app.require_subcommand(1);

  CommonFlags generate_flags, train_flags, suite_flags, detect_flags, coefs_flags, domain_flags;
  TrainFlags train_options;
  std::vector<int> counts = {2, 3, 4, 5, 6, 7};

  auto* generate = app.add_subcommand("generate", "write each seed's domains as CSV");
  add_common(generate, generate_flags);

  auto* train = app.add_subcommand("train", "train one method on one seed");
  add_common(train, train_flags);
  train->add_option("--method", train_options.method, "method name");
  train->add_option("--lambda", train_options.lambda, "main penalty strength");
  train->add_option("--lambda-cip", train_options.lambda_cip, "proxy CIP strength");
  train->add_option("--eta", train_options.eta, "groupDRO step size");
  train->add_option("--anneal", train_options.anneal, "IRM/V-REx warm-up steps");

  auto* suite = app.add_subcommand("suite", "reproduce a source/target accuracy table");
  add_common(suite, suite_flags);

  auto* detect = app.add_subcommand("detect", "target accuracy upper bounds for DIP and JointDIP");
  add_common(detect, detect_flags);

  auto* coefs = app.add_subcommand("coefs", "coefficient L1 norms per coordinate group");
  add_common(coefs, coefs_flags);

  auto* domains = app.add_subcommand("domains", "CIP versus number of source domains");
  add_common(domains, domain_flags);
  domains->add_option("--counts", counts, "numbers of source domains")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (generate->parsed()) return cmd_generate(generate_flags);
    if (train->parsed()) return cmd_train(train_flags, train_options);
    if (suite->parsed()) return cmd_suite(suite_flags);
    if (detect->parsed()) return cmd_detect(detect_flags);
    if (coefs->parsed()) return cmd_coefs(coefs_flags);
    if (domains->parsed()) return cmd_domains(domain_flags, counts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnknownPreset& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailedCells;
  }
  return 0;
}
