#include "cicda/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cicda/error.hpp"

namespace cicda {

using json = nlohmann::json;

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_datasets_csv(std::ostream& out, const std::vector<Dataset>& domains) {
  const std::size_t p = domains.empty() ? 0 : domains.front().x.cols();
  out << "domain,y";
  for (std::size_t j = 1; j <= p; ++j) out << ",x" << j;
  out << '\n';
  for (const auto& d : domains) {
    if (d.x.cols() != p) throw ShapeMismatch("all domains must share the covariate dimension");
    for (std::size_t i = 0; i < d.size(); ++i) {
      out << d.domain_id << ',' << d.y[i];
      for (double v : d.x.row(i)) out << ',' << format_real(v);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing dataset CSV");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw IoError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::vector<Dataset> read_datasets_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "domain" || header[1] != "y") {
    throw IoError("dataset CSV header must start with domain,y");
  }
  const std::size_t p = header.size() - 2;

  std::vector<int> order;
  std::map<int, std::pair<std::vector<double>, std::vector<int>>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != p + 2) throw IoError("line " + std::to_string(line_no) + ": wrong field count");
    const int domain = parse_field<int>(fields[0], line_no);
    auto [it, inserted] = rows.try_emplace(domain);
    if (inserted) order.push_back(domain);
    it->second.second.push_back(parse_field<int>(fields[1], line_no));
    for (std::size_t j = 0; j < p; ++j) it->second.first.push_back(parse_field<double>(fields[j + 2], line_no));
  }

  std::vector<Dataset> out;
  for (int domain : order) {
    auto& [values, labels] = rows[domain];
    Dataset d;
    d.domain_id = domain;
    d.x = Matrix(labels.size(), p, std::move(values));
    d.y = std::move(labels);
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  return Matrix::from_rows(rows);
}

json model_json(const LinearModel& model) {
  return {{"a", matrix_json(model.a)}, {"b", model.b}, {"p", model.dimension()}, {"L", model.classes()}};
}

json metrics_json(const RunMetrics& m) {
  return {{"src_acc", m.src_acc}, {"tar_acc", m.tar_acc}, {"src_risk", m.src_risk}, {"tar_risk", m.tar_risk},
          {"val_acc", m.val_acc}, {"src_ce", m.src_ce},   {"tar_ce", m.tar_ce}};
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string model_to_json(const LinearModel& model) { return model_json(model).dump(); }

LinearModel model_from_json(const std::string& text) {
  return guarded([&] {
    const json j = json::parse(text);
    LinearModel model;
    model.a = matrix_from(j.at("a"));
    model.b = j.at("b").get<Vector>();
    const auto p = j.at("p").get<std::size_t>();
    const auto classes = j.at("L").get<std::size_t>();
    if (model.a.rows() != classes || model.a.cols() != p || model.b.size() != classes) {
      throw IoError("model JSON shapes disagree with p and L");
    }
    return model;
  });
}

std::string weights_to_json(const ImportanceWeights& weights) {
  return json{{"domains", weights.per_domain}}.dump();
}

ImportanceWeights weights_from_json(const std::string& text) {
  return guarded([&] { return ImportanceWeights{json::parse(text).at("domains").get<std::vector<Vector>>()}; });
}

std::string run_to_json(const TrainedRun& run) {
  json j;
  j["method"] = method_name(run.spec.method);
  j["lambda"] = run.spec.penalty.lambda;
  j["lambda_cip"] = run.spec.lambda_cip;
  j["penalty"] = run.spec.penalty.kind == PenaltyKind::kMean ? "mean" : "mmd";
  j["model"] = model_json(run.model);
  j["proxy"] = run.proxy ? model_json(*run.proxy) : json(nullptr);
  j["weights"] = run.weights ? json(run.weights->per_domain) : json(nullptr);
  j["metrics"] = metrics_json(run.metrics);
  json history = json::array();
  for (const auto& e : run.history) history.push_back({{"objective", e.objective}, {"penalty", e.penalty}});
  j["history"] = std::move(history);
  if (!run.groupdro_q.empty()) j["groupdro_q"] = run.groupdro_q;
  return j.dump(2);
}

std::string scenario_to_json(const ScenarioSpec& scenario) {
  json j;
  j["name"] = scenario.name;
  j["num_source_domains"] = scenario.num_source_domains;
  j["samples_per_domain"] = scenario.samples_per_domain;
  j["dimension"] = scenario.dimension;
  j["classes"] = scenario.classes;
  j["dip_source_index"] = scenario.dip_source_index;
  json mechanisms = json::array();
  for (const auto& mech : scenario.mechanisms) {
    json noise = json::array();
    for (const auto& block : mech.noise) {
      noise.push_back({{"begin", block.range.begin}, {"end", block.range.end}, {"sd", block.sd}});
    }
    mechanisms.push_back(
        {{"label_probs", mech.label_probs}, {"mean_table", matrix_json(mech.mean_table)}, {"noise", noise}});
  }
  j["mechanisms"] = std::move(mechanisms);
  json groups = json::array();
  for (const auto& g : scenario.coordinate_groups) {
    groups.push_back({{"name", g.name}, {"begin", g.range.begin}, {"end", g.range.end}});
  }
  j["coordinate_groups"] = std::move(groups);
  return j.dump(2);
}

ScenarioSpec scenario_from_json(const std::string& text) {
  return guarded([&] {
    const json j = json::parse(text);
    ScenarioSpec s;
    s.name = j.value("name", std::string("custom"));
    s.num_source_domains = j.at("num_source_domains").get<int>();
    s.samples_per_domain = j.value("samples_per_domain", std::size_t{1000});
    s.dimension = j.at("dimension").get<std::size_t>();
    s.classes = j.at("classes").get<int>();
    s.dip_source_index = j.value("dip_source_index", s.num_source_domains);
    for (const auto& m : j.at("mechanisms")) {
      DomainMechanism mech;
      mech.label_probs = m.at("label_probs").get<Vector>();
      mech.mean_table = matrix_from(m.at("mean_table"));
      for (const auto& block : m.value("noise", json::array())) {
        mech.noise.push_back(
            {{block.at("begin").get<std::size_t>(), block.at("end").get<std::size_t>()}, block.at("sd").get<double>()});
      }
      s.mechanisms.push_back(std::move(mech));
    }
    for (const auto& g : j.value("coordinate_groups", json::array())) {
      s.coordinate_groups.push_back(
          {g.at("name").get<std::string>(), {g.at("begin").get<std::size_t>(), g.at("end").get<std::size_t>()}});
    }
    s.validate();
    return s;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace cicda
