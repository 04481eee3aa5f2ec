#include "cicda/scm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cicda/error.hpp"
#include "cicda/model.hpp"

namespace cicda {

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = x.select_rows(rows);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) out.y.push_back(y[r]);
  out.domain_id = domain_id;
  return out;
}

bool ScenarioSpec::has_label_shift() const {
  if (mechanisms.empty()) return false;
  const Vector& target = mechanisms.back().label_probs;
  for (std::size_t m = 0; m + 1 < mechanisms.size(); ++m) {
    const Vector& probs = mechanisms[m].label_probs;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      if (std::abs(probs[k] - target[k]) > 1e-12) return true;
    }
  }
  return false;
}

void ScenarioSpec::validate() const {
  if (num_source_domains < 1) throw ConfigError(name + ": need at least one source domain");
  if (classes < 2) throw ConfigError(name + ": need at least two classes");
  if (mechanisms.size() != static_cast<std::size_t>(num_source_domains) + 1) {
    throw ConfigError(name + ": expected M+1 mechanisms");
  }
  if (dip_source_index < 1 || dip_source_index > num_source_domains) {
    throw ConfigError(name + ": dip_source_index outside 1..M");
  }
  for (const auto& mech : mechanisms) {
    if (mech.label_probs.size() != static_cast<std::size_t>(classes)) {
      throw ConfigError(name + ": label_probs length differs from L");
    }
    double total = 0.0;
    for (double p : mech.label_probs) {
      if (!(p > 0.0 && p < 1.0)) throw ConfigError(name + ": label probabilities must lie in (0, 1)");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError(name + ": label probabilities must sum to 1");
    if (mech.mean_table.rows() != static_cast<std::size_t>(classes) ||
        mech.mean_table.cols() != dimension) {
      throw ConfigError(name + ": mean table must be L x p");
    }
    for (double v : mech.mean_table.data()) {
      if (!std::isfinite(v)) throw ConfigError(name + ": mean table has non-finite entries");
    }
    for (const auto& block : mech.noise) {
      if (block.range.begin > block.range.end || block.range.end > dimension || block.sd < 0.0) {
        throw ConfigError(name + ": bad noise block");
      }
    }
  }
  std::vector<int> covered(dimension, 0);
  for (const auto& group : coordinate_groups) {
    if (group.range.begin >= group.range.end || group.range.end > dimension) {
      throw ConfigError(name + ": coordinate group '" + group.name + "' out of range");
    }
    for (std::size_t j = group.range.begin; j < group.range.end; ++j) ++covered[j];
  }
  if (!coordinate_groups.empty() &&
      std::any_of(covered.begin(), covered.end(), [](int c) { return c != 1; })) {
    throw ConfigError(name + ": coordinate groups must partition the coordinates");
  }
}

std::vector<std::string> scenario_presets() {
  return {"SCM-I", "SCM-II", "SCM-III", "SCM-IV", "SCM-binary", "custom"};
}

namespace {

Vector draw_normal(Rng& rng, std::size_t n, double scale) {
  Vector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

Vector draw_sign(Rng& rng, std::size_t n, double scale) {
  Vector v(n);
  for (double& x : v) x = rng.normal() >= 0.0 ? scale : -scale;
  return v;
}

// Binary-label mean table: row k holds slope * (y_k - center) on
// [begin, end) plus an optional shift, for y_k in {0, 1}.
void fill_block(Matrix& table, CoordinateRange range, double slope, double center,
                std::span<const double> shift = {}) {
  for (std::size_t k = 0; k < 2; ++k) {
    const double y = static_cast<double>(k);
    for (std::size_t j = range.begin; j < range.end; ++j) {
      const double s = shift.empty() ? 0.0 : shift[j - range.begin];
      table(k, j) = slope * (y - center) + s;
    }
  }
}

Vector binary_probs(double p_one) { return {1.0 - p_one, p_one}; }

ScenarioSpec make_base(std::string name, int m, std::size_t p, std::size_t n) {
  ScenarioSpec spec;
  spec.name = std::move(name);
  spec.num_source_domains = m;
  spec.samples_per_domain = n;
  spec.dimension = p;
  spec.classes = 2;
  spec.dip_source_index = m;
  return spec;
}

ScenarioSpec build_scm1(Rng& rng, std::size_t n) {
  constexpr std::size_t p = 10;
  ScenarioSpec spec = make_base("SCM-I", 3, p, n);
  const CoordinateRange all{0, p};
  for (int m = 1; m <= 4; ++m) {
    const bool target = m == 4;
    const Vector shift = target ? draw_sign(rng, p, 2.0) : draw_normal(rng, p, 0.2);
    DomainMechanism mech;
    mech.label_probs = binary_probs(0.5);
    mech.mean_table = Matrix(2, p);
    fill_block(mech.mean_table, all, 0.2, 0.0, shift);
    mech.noise = {{all, 0.25}};
    spec.mechanisms.push_back(std::move(mech));
  }
  spec.coordinate_groups = {{"mean_shift", all}};
  return spec;
}

ScenarioSpec build_scm2(Rng& rng, std::size_t n) {
  constexpr std::size_t p = 9;
  ScenarioSpec spec = make_base("SCM-II", 11, p, n);
  const CoordinateRange shifted{0, 6};
  const CoordinateRange cic{6, 9};
  for (int m = 1; m <= 12; ++m) {
    const bool target = m == 12;
    const Vector shift = target ? draw_sign(rng, 6, 2.0) : draw_normal(rng, 6, 1.0);
    DomainMechanism mech;
    mech.label_probs = binary_probs(target ? 0.1 : 0.5);
    mech.mean_table = Matrix(2, p);
    fill_block(mech.mean_table, shifted, 0.2, 0.5, shift);
    fill_block(mech.mean_table, cic, 0.2, 0.5);
    mech.noise = {{{0, p}, 0.25}};
    spec.mechanisms.push_back(std::move(mech));
  }
  spec.coordinate_groups = {{"mean_shift", shifted}, {"cic", cic}};
  return spec;
}

ScenarioSpec build_scm3(Rng& rng, std::size_t n, double target_p_one, std::string name) {
  constexpr std::size_t p = 18;
  ScenarioSpec spec = make_base(std::move(name), 11, p, n);
  const CoordinateRange shifted{0, 6};
  const CoordinateRange flip{6, 12};
  const CoordinateRange cic{12, 18};

  std::vector<Vector> shifts;
  for (int m = 1; m <= 10; ++m) shifts.push_back(draw_normal(rng, 6, 1.0));
  // The last source and the target share a0 so their shifted block is close.
  const Vector a0 = draw_normal(rng, 6, 0.8);
  const Vector a1 = draw_normal(rng, 6, 0.6);
  const Vector a2 = draw_normal(rng, 6, 0.6);
  Vector last(6), tgt(6);
  for (std::size_t j = 0; j < 6; ++j) {
    last[j] = a0[j] + a1[j];
    tgt[j] = a0[j] + a2[j];
  }
  shifts.push_back(last);
  shifts.push_back(tgt);

  for (int m = 1; m <= 12; ++m) {
    const bool target = m == 12;
    DomainMechanism mech;
    mech.label_probs = binary_probs(target ? target_p_one : 0.5);
    mech.mean_table = Matrix(2, p);
    fill_block(mech.mean_table, shifted, 0.3, 0.5, shifts[m - 1]);
    // Odd domains carry 0.3 (0.5 - Y), even ones 0.3 (Y - 0.5).
    fill_block(mech.mean_table, flip, m % 2 == 1 ? -0.3 : 0.3, 0.5);
    fill_block(mech.mean_table, cic, 0.3, 0.5);
    mech.noise = {{shifted, 0.4}, {flip, 0.1}, {cic, 0.4}};
    spec.mechanisms.push_back(std::move(mech));
  }
  spec.coordinate_groups = {{"mean_shift", shifted}, {"label_flip", flip}, {"cic", cic}};
  return spec;
}

ScenarioSpec build_scm_binary(Rng& rng, std::size_t n, int num_sources) {
  constexpr std::size_t p = 10;
  constexpr int kPatterns = 32;
  if (num_sources < 1 || num_sources > kPatterns) {
    throw ConfigError("SCM-binary supports 1..32 source domains");
  }
  ScenarioSpec spec = make_base("SCM-binary", num_sources, p, n);
  const CoordinateRange cic{0, 5};
  const CoordinateRange shifted{5, 10};

  // Sampling without replacement from {-1, 1}^5: partial Fisher-Yates.
  std::vector<int> patterns(kPatterns);
  std::iota(patterns.begin(), patterns.end(), 0);
  for (int m = 0; m < num_sources; ++m) {
    const auto j = m + static_cast<int>(rng.uniform_index(kPatterns - m));
    std::swap(patterns[m], patterns[j]);
  }
  for (int m = 1; m <= num_sources + 1; ++m) {
    const bool target = m == num_sources + 1;
    Vector shift(5, 2.0);
    if (!target) {
      for (int j = 0; j < 5; ++j) shift[j] = (patterns[m - 1] >> j) & 1 ? 1.0 : -1.0;
    }
    DomainMechanism mech;
    mech.label_probs = binary_probs(0.5);
    mech.mean_table = Matrix(2, p);
    fill_block(mech.mean_table, cic, 0.2, 0.5);
    fill_block(mech.mean_table, shifted, 0.2, 0.5, shift);
    mech.noise = {{{0, p}, 0.4}};
    spec.mechanisms.push_back(std::move(mech));
  }
  spec.coordinate_groups = {{"cic", cic}, {"mean_shift", shifted}};
  return spec;
}

}  // namespace

ScenarioSpec build_scenario(std::string_view preset, Rng& rng, const ScenarioOptions& options) {
  const std::size_t n = options.samples_per_domain;
  if (n == 0) throw ConfigError("samples_per_domain must be positive");
  if (options.num_sources && preset != "SCM-binary") {
    throw ConfigError("num_sources can only be overridden for SCM-binary");
  }
  ScenarioSpec spec;
  if (preset == "SCM-I") {
    spec = build_scm1(rng, n);
  } else if (preset == "SCM-II") {
    spec = build_scm2(rng, n);
  } else if (preset == "SCM-III") {
    spec = build_scm3(rng, n, 0.5, "SCM-III");
  } else if (preset == "SCM-IV") {
    spec = build_scm3(rng, n, 0.3, "SCM-IV");
  } else if (preset == "SCM-binary") {
    spec = build_scm_binary(rng, n, options.num_sources.value_or(7));
  } else if (preset == "custom") {
    if (!options.custom) throw ConfigError("custom preset requires a scenario definition");
    spec = *options.custom;
  } else {
    throw UnknownPreset("unknown scenario preset '" + std::string(preset) + "'");
  }
  spec.validate();
  return spec;
}

Dataset generate_domain(const DomainMechanism& mech, std::size_t n, Rng& rng, int domain_id) {
  const std::size_t p = mech.mean_table.cols();
  Dataset data;
  data.domain_id = domain_id;
  data.x = Matrix(n, p);
  data.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rng.categorical(mech.label_probs);
    data.y[i] = static_cast<int>(k) + 1;
    auto row = data.x.row(i);
    const auto mean = mech.mean_table.row(k);
    std::copy(mean.begin(), mean.end(), row.begin());
    for (const auto& block : mech.noise) {
      for (std::size_t j = block.range.begin; j < block.range.end; ++j) {
        row[j] += block.sd * rng.normal();
      }
    }
  }
  return data;
}

std::vector<Dataset> generate_scenario_data(const ScenarioSpec& scenario, const Rng& base) {
  std::vector<Dataset> domains;
  domains.reserve(scenario.mechanisms.size());
  for (std::size_t m = 0; m < scenario.mechanisms.size(); ++m) {
    Rng stream = base.substream(m + 1);
    domains.push_back(generate_domain(scenario.mechanisms[m], scenario.samples_per_domain, stream,
                                      static_cast<int>(m + 1)));
  }
  return domains;
}

std::map<std::string, double> coordinate_group_norms(const LinearModel& model,
                                                     const std::vector<CoordinateGroup>& groups) {
  std::map<std::string, double> norms;
  for (const auto& group : groups) {
    if (group.range.end > model.dimension()) {
      throw ShapeMismatch("coordinate group '" + group.name + "' exceeds model dimension");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < model.classes(); ++k) {
      for (std::size_t j = group.range.begin; j < group.range.end; ++j) total += std::abs(model.a(k, j));
    }
    norms[group.name] = total;
  }
  return norms;
}

}  // namespace cicda
