#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cicda/algorithms.hpp"
#include "cicda/model.hpp"
#include "cicda/scm.hpp"

namespace cicda {

/// Real formatted with 17 significant digits, so it parses back exactly.
std::string format_real(double value);

/// CSV with header `domain,y,x1,...,xp`, one row per sample, domains in
/// the order given. Labels are written as stored (1..L).
void write_datasets_csv(std::ostream& out, const std::vector<Dataset>& domains);
/// Inverse of write_datasets_csv; rows are grouped by domain id in order of
/// first appearance. Throws IoError on malformed input.
std::vector<Dataset> read_datasets_csv(std::istream& in);

/// {"a": [[...]], "b": [...], "p": p, "L": L}
std::string model_to_json(const LinearModel& model);
LinearModel model_from_json(const std::string& text);

/// {"domains": [[w_1, ..., w_L], ...]}, one vector per source domain.
std::string weights_to_json(const ImportanceWeights& weights);
ImportanceWeights weights_from_json(const std::string& text);

/// Model, proxy, weights, metrics and per-epoch history.
std::string run_to_json(const TrainedRun& run);

/// Scenario definitions, including every mechanism table, for the custom
/// preset and for recording the realised shifts of a seed.
std::string scenario_to_json(const ScenarioSpec& scenario);
ScenarioSpec scenario_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary file in the same directory and renames it into
/// place. Creates missing parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cicda
