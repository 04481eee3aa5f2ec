#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cicda/numerics.hpp"

namespace cicda {

struct LinearModel;

/// Labeled sample of one domain. Labels are 1..L; domains are numbered
/// 1..M for sources and M+1 for the target.
struct Dataset {
  Matrix x;
  std::vector<int> y;
  int domain_id = 0;

  std::size_t size() const { return y.size(); }
  Dataset subset(std::span<const std::size_t> rows) const;
};

/// Half-open coordinate range [begin, end), 0-based.
struct CoordinateRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct NoiseBlock {
  CoordinateRange range;
  double sd = 0.0;
};

struct CoordinateGroup {
  std::string name;
  CoordinateRange range;
};

/// Class-conditional generator X = mean[Y] + blockwise Gaussian noise.
struct DomainMechanism {
  Vector label_probs;             // length L
  Matrix mean_table;              // L x p, row k is E[X | Y = k + 1]
  std::vector<NoiseBlock> noise;  // coordinates not covered get no noise
};

struct ScenarioSpec {
  std::string name;
  int num_source_domains = 0;  // M
  std::size_t samples_per_domain = 1000;
  std::size_t dimension = 0;  // p
  int classes = 2;            // L
  std::vector<DomainMechanism> mechanisms;  // M sources then the target
  std::vector<CoordinateGroup> coordinate_groups;
  int dip_source_index = 0;  // 1-based source used by single-source methods

  int target_domain_id() const { return num_source_domains + 1; }
  bool has_label_shift() const;
  /// Throws ConfigError when the invariants of the type are broken.
  void validate() const;
};

struct ScenarioOptions {
  // Overrides the number of source domains (SCM-binary only; 1..32).
  std::optional<int> num_sources;
  std::size_t samples_per_domain = 1000;
  // Definition used by the "custom" preset.
  std::optional<ScenarioSpec> custom;
};

/// Preset names accepted by build_scenario.
std::vector<std::string> scenario_presets();

/// Builds SCM-I..IV, SCM-binary or a custom scenario. Random shift
/// constants are drawn from rng once and stored in the returned spec.
ScenarioSpec build_scenario(std::string_view preset, Rng& rng, const ScenarioOptions& options = {});

Dataset generate_domain(const DomainMechanism& mech, std::size_t n, Rng& rng, int domain_id = 0);

/// All M+1 domains; domain m (1-based) draws from base.substream(m).
std::vector<Dataset> generate_scenario_data(const ScenarioSpec& scenario, const Rng& base);

/// Per group: sum over its coordinates j and all classes of |A[class, j]|.
std::map<std::string, double> coordinate_group_norms(const LinearModel& model,
                                                     const std::vector<CoordinateGroup>& groups);

}  // namespace cicda
