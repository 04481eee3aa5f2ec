#include "cicda/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "cicda/error.hpp"
#include "cicda/io.hpp"

namespace cicda {

using json = nlohmann::json;

void SuiteConfig::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (jobs == 0) throw ConfigError("--jobs must be at least 1");
  const auto check_grid = [](const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw ConfigError(std::string(name) + " must not be empty");
    for (double v : grid) {
      if (!std::isfinite(v) || v < 0.0) throw ConfigError(std::string(name) + " entries must be finite and >= 0");
    }
  };
  check_grid(lambda_grid, "lambda grid");
  check_grid(lambda_cip_grid, "lambda_cip grid");
  check_grid(invariance_grid, "IRM/V-REx grid");
  check_grid(eta_grid, "groupDRO eta grid");
  if (anneal_grid.empty()) throw ConfigError("anneal grid must not be empty");
  if (alpha_list.empty()) throw ConfigError("alpha list must not be empty");
  for (double a : alpha_list) {
    if (!(a >= 0.0 && a < 1.0)) throw ConfigError("alpha values must lie in [0, 1)");
  }
  if (detection_source < 0) throw ConfigError("detection source must be >= 0");
  if (scenario_options.samples_per_domain == 0) throw ConfigError("samples per domain must be positive");
}

namespace {

PenaltyKind parse_penalty(const std::string& name) {
  if (name == "mean") return PenaltyKind::kMean;
  if (name == "mmd") return PenaltyKind::kMmd;
  throw ConfigError("penalty must be 'mean' or 'mmd', got '" + name + "'");
}

}  // namespace

SuiteConfig suite_config_from_json(const std::string& text, SuiteConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "scenario") {
        base.scenario = value.get<std::string>();
      } else if (key == "methods") {
        base.methods.clear();
        for (const auto& m : value) base.methods.push_back(parse_method(m.get<std::string>()));
      } else if (key == "seeds") {
        base.seeds = value.get<std::vector<std::uint64_t>>();
      } else if (key == "lambda_grid") {
        base.lambda_grid = value.get<std::vector<double>>();
      } else if (key == "lambda_cip_grid") {
        base.lambda_cip_grid = value.get<std::vector<double>>();
      } else if (key == "invariance_grid") {
        base.invariance_grid = value.get<std::vector<double>>();
      } else if (key == "anneal_grid") {
        base.anneal_grid = value.get<std::vector<std::size_t>>();
      } else if (key == "eta_grid") {
        base.eta_grid = value.get<std::vector<double>>();
      } else if (key == "alpha_list") {
        base.alpha_list = value.get<std::vector<double>>();
      } else if (key == "penalty") {
        base.penalty = parse_penalty(value.get<std::string>());
      } else if (key == "epochs") {
        base.epochs = value.get<std::size_t>();
      } else if (key == "split") {
        base.split = value.get<bool>();
      } else if (key == "force") {
        base.force = value.get<bool>();
      } else if (key == "detection_source") {
        base.detection_source = value.get<int>();
      } else if (key == "jobs") {
        base.jobs = value.get<std::size_t>();
      } else if (key == "out") {
        base.out_dir = value.get<std::string>();
      } else if (key == "samples_per_domain") {
        base.scenario_options.samples_per_domain = value.get<std::size_t>();
      } else if (key == "num_sources") {
        base.scenario_options.num_sources = value.get<int>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return base;
}

std::vector<HyperParams> hyperparameter_grid(Method method, const SuiteConfig& config) {
  std::vector<HyperParams> grid;
  switch (method) {
    case Method::kTar:
    case Method::kErm:
    case Method::kErmPool:
    case Method::kIwErm:
      grid.push_back({});
      break;
    case Method::kDip:
    case Method::kDipPool:
    case Method::kCip:
      for (double l : config.lambda_grid) grid.push_back({.lambda = l});
      break;
    case Method::kIwCip:
    case Method::kIwDip:
    case Method::kJointDip:
    case Method::kJointDipPool:
    case Method::kIwJointDip:
      for (double lc : config.lambda_cip_grid) {
        for (double l : config.lambda_grid) grid.push_back({.lambda = l, .lambda_cip = lc});
      }
      break;
    case Method::kIrm:
    case Method::kVrex:
      for (double l : config.invariance_grid) {
        for (std::size_t a : config.anneal_grid) grid.push_back({.lambda = l, .anneal = a});
      }
      break;
    case Method::kGroupDro:
      for (double eta : config.eta_grid) grid.push_back({.eta = eta});
      break;
  }
  return grid;
}

MethodSpec make_method_spec(Method method, const HyperParams& params, const SuiteConfig& config) {
  MethodSpec spec = default_method_spec(method);
  if (spec.penalty.kind == PenaltyKind::kMean) spec.penalty.kind = config.penalty;
  spec.proxy_kind = config.penalty;
  spec.penalty.lambda = params.lambda;
  spec.lambda_cip = params.lambda_cip;
  spec.groupdro_eta = params.eta;
  spec.penalty_anneal_steps = params.anneal;
  spec.epochs = config.epochs;
  spec.split = config.split;
  return spec;
}

SeedData prepare_seed(const SuiteConfig& config, std::uint64_t seed) {
  const Rng base(seed);
  Rng scenario_rng = base.substream(0);
  SeedData out;
  out.scenario = build_scenario(config.scenario, scenario_rng, config.scenario_options);
  out.data = generate_scenario_data(out.scenario, base.substream(1));
  out.training_rng = base.substream(2);
  return out;
}

std::pair<double, double> mean_and_sd(const std::vector<double>& values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

// Runs fn(0..count-1) on up to `jobs` threads. fn must not throw.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

// Proxy models shared by the staged methods of one seed. The first caller
// for a key trains the model; later callers wait for it.
class ProxyCache {
 public:
  using Key = std::tuple<std::size_t, Method, int, double>;

  LinearModel get(const Key& key, const std::function<LinearModel()>& train) {
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      std::shared_future<LinearModel> future = it->second;
      lock.unlock();
      return future.get();
    }
    std::promise<LinearModel> promise;
    std::shared_future<LinearModel> future = promise.get_future().share();
    entries_.emplace(key, future);
    lock.unlock();
    try {
      promise.set_value(train());
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    return future.get();
  }

 private:
  std::mutex mutex_;
  std::map<Key, std::shared_future<LinearModel>> entries_;
};

}  // namespace

SuiteResult run_suite(const SuiteConfig& config) {
  config.validate();
  std::vector<SeedData> seeds;
  seeds.reserve(config.seeds.size());
  for (std::uint64_t s : config.seeds) seeds.push_back(prepare_seed(config, s));

  struct Task {
    Method method;
    HyperParams params;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  std::vector<std::size_t> grid_sizes;
  for (Method m : config.methods) {
    const auto grid = hyperparameter_grid(m, config);
    grid_sizes.push_back(grid.size());
    for (const auto& p : grid) {
      for (std::size_t s = 0; s < seeds.size(); ++s) tasks.push_back({m, p, s});
    }
  }

  SuiteResult result;
  result.cells.resize(tasks.size());
  ProxyCache cache;
  parallel_for(tasks.size(), config.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const SeedData& sd = seeds[task.seed_index];
    CellResult& cell = result.cells[i];
    cell.method = task.method;
    cell.params = task.params;
    cell.seed = config.seeds[task.seed_index];
    try {
      const MethodSpec spec = make_method_spec(task.method, task.params, config);
      std::optional<LinearModel> proxy;
      if (uses_proxy(task.method) && !spec.split) {
        const MethodSpec pspec = proxy_spec(spec);
        const ProxyCache::Key key{task.seed_index, pspec.method, static_cast<int>(pspec.penalty.kind),
                                  pspec.penalty.lambda};
        proxy = cache.get(key, [&] { return train_method(pspec, sd.scenario, sd.data, sd.training_rng).model; });
      }
      TrainedRun run = train_method(spec, sd.scenario, sd.data, sd.training_rng, proxy ? &*proxy : nullptr);
      cell.metrics = run.metrics;
      cell.model = std::move(run.model);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  std::size_t offset = 0;
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    MethodSelection best;
    best.method = config.methods[mi];
    bool found = false;
    const std::size_t n_seeds = seeds.size();
    for (std::size_t g = 0; g < grid_sizes[mi]; ++g) {
      std::vector<double> val;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const CellResult& cell = result.cells[offset + g * n_seeds + s];
        if (cell.metrics) val.push_back(cell.metrics->val_acc);
      }
      if (val.empty()) continue;
      const double mean = mean_and_sd(val).first;
      if (!found || mean > best.mean_val_acc) {
        found = true;
        best.mean_val_acc = mean;
        best.params = result.cells[offset + g * n_seeds].params;
        best.per_seed.assign(result.cells.begin() + static_cast<std::ptrdiff_t>(offset + g * n_seeds),
                             result.cells.begin() + static_cast<std::ptrdiff_t>(offset + (g + 1) * n_seeds));
      }
    }
    if (!found) {
      best.mean_val_acc = std::nan("");
      best.per_seed.assign(result.cells.begin() + static_cast<std::ptrdiff_t>(offset),
                           result.cells.begin() + static_cast<std::ptrdiff_t>(offset + n_seeds));
    }
    offset += grid_sizes[mi] * n_seeds;

    std::vector<double> src, tar;
    for (const auto& cell : best.per_seed) {
      if (!cell.metrics) continue;
      src.push_back(100.0 * cell.metrics->src_acc);
      tar.push_back(100.0 * cell.metrics->tar_acc);
    }
    TableRow row;
    row.method = method_name(best.method);
    std::tie(row.src_acc_mean, row.src_acc_sd) = mean_and_sd(src);
    std::tie(row.tar_acc_mean, row.tar_acc_sd) = mean_and_sd(tar);
    result.table.rows.push_back(row);
    result.selections.push_back(std::move(best));
  }
  for (const auto& cell : result.cells) result.failed_cells += cell.metrics ? 0 : 1;
  return result;
}

std::string emit_table(const ResultTable& table, TableFormat format) {
  std::ostringstream out;
  switch (format) {
    case TableFormat::kCsv:
      out << "method,src_acc_mean,src_acc_sd,tar_acc_mean,tar_acc_sd\n";
      for (const auto& r : table.rows) {
        out << r.method << ',' << format_real(r.src_acc_mean) << ',' << format_real(r.src_acc_sd) << ','
            << format_real(r.tar_acc_mean) << ',' << format_real(r.tar_acc_sd) << '\n';
      }
      break;
    case TableFormat::kJson: {
      json rows = json::array();
      const auto value = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
      for (const auto& r : table.rows) {
        rows.push_back({{"method", r.method},
                        {"src_acc_mean", value(r.src_acc_mean)},
                        {"src_acc_sd", value(r.src_acc_sd)},
                        {"tar_acc_mean", value(r.tar_acc_mean)},
                        {"tar_acc_sd", value(r.tar_acc_sd)}});
      }
      out << json{{"rows", rows}}.dump(2) << '\n';
      break;
    }
    case TableFormat::kMarkdown: {
      out << "| Method | Source accuracy | Target accuracy |\n|---|---|---|\n";
      char src[64], tar[64];
      for (const auto& r : table.rows) {
        std::snprintf(src, sizeof src, "%.1f±%.1f", r.src_acc_mean, r.src_acc_sd);
        std::snprintf(tar, sizeof tar, "%.1f±%.1f", r.tar_acc_mean, r.tar_acc_sd);
        out << "| " << r.method << " | " << src << " | " << tar << " |\n";
      }
      break;
    }
  }
  return out.str();
}

ResultTable parse_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "method,src_acc_mean,src_acc_sd,tar_acc_mean,tar_acc_sd") {
    throw IoError("unexpected result table header");
  }
  ResultTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell[5];
    for (auto& c : cell) {
      if (!std::getline(fields, c, ',')) throw IoError("result table row has too few fields: " + line);
    }
    TableRow row;
    row.method = cell[0];
    try {
      row.src_acc_mean = std::stod(cell[1]);
      row.src_acc_sd = std::stod(cell[2]);
      row.tar_acc_mean = std::stod(cell[3]);
      row.tar_acc_sd = std::stod(cell[4]);
    } catch (const std::exception&) {
      throw IoError("result table row has a non-numeric field: " + line);
    }
    table.rows.push_back(row);
  }
  return table;
}

namespace {

void write_params(std::ostream& out, const HyperParams& p) {
  out << format_real(p.lambda) << ',' << format_real(p.lambda_cip) << ',' << format_real(p.eta) << ','
      << p.anneal;
}

}  // namespace

std::string emit_selected_cells_csv(const SuiteResult& result) {
  std::ostringstream out;
  out << "method,seed,lambda,lambda_cip,eta,anneal,src_acc,tar_acc,val_acc,src_ce,tar_ce,error\n";
  for (const auto& sel : result.selections) {
    for (const auto& cell : sel.per_seed) {
      out << method_name(cell.method) << ',' << cell.seed << ',';
      write_params(out, cell.params);
      if (cell.metrics) {
        const auto& m = *cell.metrics;
        out << ',' << format_real(m.src_acc) << ',' << format_real(m.tar_acc) << ',' << format_real(m.val_acc)
            << ',' << format_real(m.src_ce) << ',' << format_real(m.tar_ce) << ",\n";
      } else {
        std::string error = cell.error;
        for (char& c : error) {
          if (c == ',' || c == '\n') c = ' ';
        }
        out << ",,,,," << error << '\n';
      }
    }
  }
  return out.str();
}

std::string emit_grid_csv(const SuiteResult& result, const SuiteConfig& config) {
  std::ostringstream out;
  out << "method,lambda,lambda_cip,eta,anneal,val_acc_mean,tar_acc_mean,missing\n";
  const std::size_t n_seeds = config.seeds.size();
  for (std::size_t start = 0; start + n_seeds <= result.cells.size(); start += n_seeds) {
    std::vector<double> val, tar;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const auto& cell = result.cells[start + s];
      if (!cell.metrics) continue;
      val.push_back(cell.metrics->val_acc);
      tar.push_back(cell.metrics->tar_acc);
    }
    out << method_name(result.cells[start].method) << ',';
    write_params(out, result.cells[start].params);
    out << ',' << format_real(mean_and_sd(val).first) << ',' << format_real(mean_and_sd(tar).first) << ','
        << n_seeds - val.size() << '\n';
  }
  return out.str();
}

DetectionResult run_detection_experiment(const SuiteConfig& config) {
  config.validate();
  {
    const SeedData probe = prepare_seed(config, config.seeds.front());
    if (probe.scenario.has_label_shift() && !config.force) {
      throw ConfigError("scenario " + probe.scenario.name +
                        " has label shift, where the bound does not apply; pass --force to run anyway");
    }
    if (config.detection_source > probe.scenario.num_source_domains) {
      throw ConfigError("detection source exceeds the number of source domains");
    }
  }

  // Proxy: CIP at the strength its own grid search selects.
  SuiteConfig cip_config = config;
  cip_config.methods = {Method::kCip};
  cip_config.split = false;
  const SuiteResult cip = run_suite(cip_config);
  const MethodSelection& cip_sel = cip.selections.front();

  DetectionResult result;
  result.cip_lambda = cip_sel.params.lambda;
  result.failed_cells = cip.failed_cells;

  std::vector<SeedData> seeds;
  for (std::uint64_t s : config.seeds) seeds.push_back(prepare_seed(config, s));

  struct Task {
    Method method;
    double lambda;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  for (Method m : {Method::kDip, Method::kJointDip}) {
    for (double l : config.lambda_grid) {
      for (std::size_t s = 0; s < seeds.size(); ++s) tasks.push_back({m, l, s});
    }
  }
  std::vector<std::vector<DetectionRow>> task_rows(tasks.size());
  std::vector<char> task_failed(tasks.size(), 0);

  parallel_for(tasks.size(), config.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const SeedData& sd = seeds[task.seed_index];
    const auto& proxy = cip_sel.per_seed[task.seed_index].model;
    try {
      if (!proxy) throw Error("CIP proxy failed for this seed");
      HyperParams params{.lambda = task.lambda, .lambda_cip = result.cip_lambda};
      SuiteConfig run_config = config;
      run_config.split = false;
      const MethodSpec spec = make_method_spec(task.method, params, run_config);
      const TrainedRun run = train_method(spec, sd.scenario, sd.data, sd.training_rng,
                                          uses_proxy(task.method) ? &*proxy : nullptr);
      const int source_index =
          config.detection_source > 0 ? config.detection_source : sd.scenario.dip_source_index;
      const Dataset& source = sd.data[static_cast<std::size_t>(source_index - 1)];
      const Dataset& target = sd.data.back();
      for (double alpha : config.alpha_list) {
        const DetectionReport report = restricted_bound(run.model, *proxy, source, target.x, alpha, target.y);
        task_rows[i].push_back({method_name(task.method), task.lambda, alpha, report.accuracy_upper_bound,
                                report.actual_target_acc, *report.region_fraction_target,
                                config.seeds[task.seed_index]});
      }
    } catch (const std::exception&) {
      task_failed[i] = 1;
    }
  });

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    result.failed_cells += task_failed[i];
    for (auto& row : task_rows[i]) result.rows.push_back(std::move(row));
  }

  // Averages over seeds per (method, lambda, alpha), in grid order.
  const std::size_t per_seed_rows = result.rows.size();
  for (Method m : {Method::kDip, Method::kJointDip}) {
    for (double l : config.lambda_grid) {
      for (double alpha : config.alpha_list) {
        std::vector<double> bound, actual, fraction;
        for (std::size_t r = 0; r < per_seed_rows; ++r) {
          const auto& row = result.rows[r];
          if (row.method != method_name(m) || row.lambda != l || row.alpha != alpha) continue;
          bound.push_back(row.bound);
          if (row.actual) actual.push_back(*row.actual);
          fraction.push_back(row.region_fraction);
        }
        if (bound.empty()) continue;
        DetectionRow mean_row{method_name(m), l, alpha, mean_and_sd(bound).first, std::nullopt,
                              mean_and_sd(fraction).first, std::nullopt};
        if (!actual.empty()) mean_row.actual = mean_and_sd(actual).first;
        result.rows.push_back(mean_row);
      }
    }
  }
  return result;
}

std::string emit_detection_csv(const DetectionResult& result) {
  std::ostringstream out;
  out << "method,lambda,alpha,bound,actual,region_fraction,seed\n";
  for (const auto& r : result.rows) {
    out << r.method << ',' << format_real(r.lambda) << ',' << format_real(r.alpha) << ',' << format_real(r.bound)
        << ',' << (r.actual ? format_real(*r.actual) : "") << ',' << format_real(r.region_fraction) << ','
        << (r.seed ? std::to_string(*r.seed) : "mean") << '\n';
  }
  return out.str();
}

std::string emit_detection_jsonl(const DetectionResult& result) {
  std::ostringstream out;
  for (const auto& r : result.rows) {
    json j{{"method", r.method},
           {"lambda", r.lambda},
           {"alpha", r.alpha},
           {"bound", r.bound},
           {"region_fraction", r.region_fraction}};
    j["actual"] = r.actual ? json(*r.actual) : json(nullptr);
    j["seed"] = r.seed ? json(*r.seed) : json("mean");
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<CoefficientRow> coefficient_norms(const SuiteResult& result, const SuiteConfig& config) {
  const ScenarioSpec scenario = prepare_seed(config, config.seeds.front()).scenario;
  std::vector<CoefficientRow> rows;
  for (const auto& sel : result.selections) {
    CoefficientRow row;
    row.method = method_name(sel.method);
    std::size_t count = 0;
    for (const auto& cell : sel.per_seed) {
      if (!cell.model) continue;
      ++count;
      for (const auto& [name, norm] : coordinate_group_norms(*cell.model, scenario.coordinate_groups)) {
        row.group_norms[name] += norm;
      }
    }
    for (auto& [name, norm] : row.group_norms) norm /= static_cast<double>(count);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string emit_coefficients_csv(const std::vector<CoefficientRow>& rows) {
  std::ostringstream out;
  out << "method,group,l1_norm\n";
  for (const auto& row : rows) {
    for (const auto& [name, norm] : row.group_norms) {
      out << row.method << ',' << name << ',' << format_real(norm) << '\n';
    }
  }
  return out.str();
}

std::vector<DomainCountRow> run_domain_count_study(const SuiteConfig& config, const std::vector<int>& counts) {
  std::vector<DomainCountRow> rows;
  for (int count : counts) {
    SuiteConfig cfg = config;
    cfg.methods = {Method::kCip};
    cfg.scenario_options.num_sources = count;
    const SuiteResult result = run_suite(cfg);
    const MethodSelection& sel = result.selections.front();
    std::vector<double> src, tar, diff;
    for (const auto& cell : sel.per_seed) {
      if (!cell.metrics) continue;
      src.push_back(100.0 * cell.metrics->src_acc);
      tar.push_back(100.0 * cell.metrics->tar_acc);
      diff.push_back(cell.metrics->tar_ce - cell.metrics->src_ce);
    }
    DomainCountRow row;
    row.num_sources = count;
    row.params = sel.params;
    std::tie(row.src_acc_mean, row.src_acc_sd) = mean_and_sd(src);
    std::tie(row.tar_acc_mean, row.tar_acc_sd) = mean_and_sd(tar);
    std::tie(row.risk_diff_mean, row.risk_diff_sd) = mean_and_sd(diff);
    rows.push_back(row);
  }
  return rows;
}

std::string emit_domain_count_csv(const std::vector<DomainCountRow>& rows) {
  std::ostringstream out;
  out << "num_sources,lambda,src_acc_mean,src_acc_sd,tar_acc_mean,tar_acc_sd,risk_diff_mean,risk_diff_sd\n";
  for (const auto& r : rows) {
    out << r.num_sources << ',' << format_real(r.params.lambda) << ',' << format_real(r.src_acc_mean) << ','
        << format_real(r.src_acc_sd) << ',' << format_real(r.tar_acc_mean) << ',' << format_real(r.tar_acc_sd)
        << ',' << format_real(r.risk_diff_mean) << ',' << format_real(r.risk_diff_sd) << '\n';
  }
  return out.str();
}

}  // namespace cicda
