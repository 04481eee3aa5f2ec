// Runs every acceptance criterion end to end and prints one PASS/FAIL line
// per criterion. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cicda/algorithms.hpp"
#include "cicda/error.hpp"
#include "cicda/harness.hpp"
#include "cicda/label_shift.hpp"
#include "cicda/penalties.hpp"

using namespace cicda;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, pattern, args...);
  return buffer;
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

SuiteConfig suite_for(const std::string& scenario, std::vector<Method> methods) {
  SuiteConfig c;
  c.scenario = scenario;
  c.methods = std::move(methods);
  c.jobs = worker_count();
  return c;
}

double tar_mean(const SuiteResult& r, const std::string& method) {
  for (const auto& row : r.table.rows) {
    if (row.method == method) return row.tar_acc_mean;
  }
  return std::nan("");
}

Outcome criterion1() {
  const auto start = std::chrono::steady_clock::now();
  const SuiteResult r = run_suite(suite_for("SCM-I", {Method::kDip, Method::kCip}));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double dip = tar_mean(r, "DIP"), cip = tar_mean(r, "CIP");
  const bool pass = dip >= 81 && dip <= 94 && cip <= 70 && dip - cip >= 15 && seconds <= 300 && r.failed_cells == 0;
  return {pass, fmt("SCM-I DIP %.1f in [81, 94], CIP %.1f <= 70, gap %.1f >= 15, runtime %.1f s <= 300 s", dip,
                    cip, dip - cip, seconds)};
}

Outcome criterion2() {
  const SuiteResult r =
      run_suite(suite_for("SCM-II", {Method::kDip, Method::kCip, Method::kIwCip, Method::kIwDip}));
  const double dip = tar_mean(r, "DIP"), cip = tar_mean(r, "CIP");
  const double iwcip = tar_mean(r, "IW-CIP"), iwdip = tar_mean(r, "IW-DIP");
  const bool pass = iwcip >= 85 && iwdip >= 85 && dip <= 72 && iwcip - cip >= 8 && r.failed_cells == 0;
  return {pass, fmt("SCM-II IW-CIP %.1f >= 85, IW-DIP %.1f >= 85, DIP %.1f <= 72, IW-CIP - CIP %.1f >= 8", iwcip,
                    iwdip, dip, iwcip - cip)};
}

Outcome criterion3(const SuiteResult& r) {
  const double dip = tar_mean(r, "DIP"), joint = tar_mean(r, "JointDIP");
  const bool pass = dip <= 55 && joint >= 78 && joint - dip >= 25 && r.failed_cells == 0;
  return {pass, fmt("SCM-III DIP %.1f <= 55, JointDIP %.1f >= 78, gap %.1f >= 25", dip, joint, joint - dip)};
}

Outcome criterion4() {
  const SuiteResult r = run_suite(suite_for("SCM-IV", {Method::kIwDip, Method::kIwJointDip}));
  const double iwdip = tar_mean(r, "IW-DIP"), iwjoint = tar_mean(r, "IW-JointDIP");
  const bool pass = iwjoint >= 78 && iwjoint > iwdip && r.failed_cells == 0;
  return {pass, fmt("SCM-IV IW-JointDIP %.1f >= 78 and > IW-DIP %.1f", iwjoint, iwdip)};
}

Outcome criterion5(const SuiteResult& r, const SuiteConfig& config) {
  std::map<std::string, std::map<std::string, double>> norms;
  for (const auto& row : coefficient_norms(r, config)) norms[row.method] = row.group_norms;
  const double dip_flip = norms["DIP"]["label_flip"], dip_cic = norms["DIP"]["cic"];
  const double joint_flip = norms["JointDIP"]["label_flip"], joint_cic = norms["JointDIP"]["cic"];
  const bool pass = dip_flip > dip_cic && joint_flip < joint_cic;
  return {pass, fmt("SCM-III L1 norms: DIP flip %.3f > cic %.3f, JointDIP flip %.3f < cic %.3f", dip_flip, dip_cic,
                    joint_flip, joint_cic)};
}

Outcome criterion6() {
  const DetectionResult r = run_detection_experiment(suite_for("SCM-III", {}));
  std::size_t cells = 0, valid = 0;
  std::map<std::pair<std::string, double>, double> at75;
  for (const auto& row : r.rows) {
    if (!row.seed) {
      if (row.alpha == 0.75) at75[{row.method, row.lambda}] = row.bound;
      continue;
    }
    ++cells;
    valid += row.actual && row.bound >= *row.actual - 0.03;
  }
  const double fraction = cells ? static_cast<double>(valid) / static_cast<double>(cells) : 0.0;
  double dip_min = 1.0, joint_min = 1.0;
  for (const auto& [key, bound] : at75) {
    double& slot = key.first == "DIP" ? dip_min : joint_min;
    slot = std::min(slot, bound);
  }
  const bool pass = cells == 400 && r.failed_cells == 0 && fraction >= 0.95 && dip_min < 0.5 && joint_min >= 0.5;
  return {pass, fmt("SCM-III detection: %zu/%zu cells valid (%.1f%% >= 95%%), alpha=0.75 min mean bound DIP %.3f "
                    "< 0.5, JointDIP %.3f >= 0.5 (CIP proxy lambda %g, %zu failed cells)",
                    valid, cells, 100 * fraction, dip_min, joint_min, r.cip_lambda, r.failed_cells)};
}

// Property checks.

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) { return gaussian_matrix(rng, rows, cols, 0, 1); }

double max_rel_error(const Matrix& analytic, Matrix point, const std::function<double(const Matrix&)>& f) {
  const double h = 1e-6;
  double diff = 0, scale = 1e-6;
  for (std::size_t i = 0; i < point.data().size(); ++i) {
    const double saved = point.data()[i];
    point.data()[i] = saved + h;
    const double up = f(point);
    point.data()[i] = saved - h;
    const double down = f(point);
    point.data()[i] = saved;
    const double numeric = (up - down) / (2 * h);
    diff = std::max(diff, std::abs(analytic.data()[i] - numeric));
    scale = std::max(scale, std::abs(numeric));
  }
  return diff / scale;
}

double gradient_check() {
  Rng rng(7001);
  PenaltySpec mean, mmd;
  mmd.kind = PenaltyKind::kMmd;
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 1 + rng.uniform_index(4), n = 2 + rng.uniform_index(6), q = 2;
    const LinearModel model = LinearModel::random(q, p, rng, 1.0);
    const Matrix x = random_matrix(rng, n, p);
    std::vector<int> y(n);
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 1 + static_cast<int>(rng.uniform_index(q));
      w[i] = 0.1 + rng.uniform();
    }
    const LossAndGrad loss = weighted_cross_entropy_and_grad(model, x, y, w);
    worst = std::max(worst, max_rel_error(loss.grad.a, model.a, [&](const Matrix& a) {
                       return weighted_cross_entropy_and_grad({a, model.b}, x, y, w).loss;
                     }));

    const FeatureBatch src{random_matrix(rng, n, q), w};
    const FeatureBatch tgt{random_matrix(rng, 3 + trial % 4, q), {}};
    const Matrix src_cic = random_matrix(rng, src.size(), 2), tgt_cic = random_matrix(rng, tgt.size(), 2);
    const std::vector<std::function<PenaltyValue(const FeatureBatch&, const FeatureBatch&)>> distances{
        [](auto& a, auto& b) { return mean_penalty(a, b); },
        [&](auto& a, auto& b) { return mmd_penalty(a, b, mmd); },
        [&](auto& a, auto& b) { return dip_penalty(a, b, mean); },
        [&](auto& a, auto& b) { return joint_dip_penalty(a, b, src_cic, tgt_cic, mean); },
    };
    for (const auto& f : distances) {
      const PenaltyValue v = f(src, tgt);
      worst = std::max(worst, max_rel_error(v.grad_src, src.values, [&](const Matrix& m) {
                         return f({m, src.weights}, tgt).value;
                       }));
      worst = std::max(worst, max_rel_error(v.grad_tgt, tgt.values, [&](const Matrix& m) {
                         return f(src, {m, tgt.weights}).value;
                       }));
    }

    std::vector<DomainFeatures> domains;
    for (int m = 0; m < 3; ++m) {
      DomainFeatures d{random_matrix(rng, 8, q), std::vector<int>(8)};
      for (auto& label : d.labels) label = 1 + static_cast<int>(rng.uniform_index(q));
      domains.push_back(d);
    }
    const CipPenaltyValue cip = cip_penalty(domains, 2, trial % 2 ? mmd : mean);
    for (std::size_t m = 0; m < domains.size(); ++m) {
      worst = std::max(worst, max_rel_error(cip.grads[m], domains[m].values, [&](const Matrix& v) {
                         auto copy = domains;
                         copy[m].values = v;
                         return cip_penalty(copy, 2, trial % 2 ? mmd : mean).value;
                       }));
    }
  }
  return worst;
}

std::pair<double, double> mmd_checks() {
  Rng rng(7002);
  PenaltySpec mmd;
  mmd.kind = PenaltyKind::kMmd;
  double self = 0, lowest = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t q = 1 + rng.uniform_index(3);
    const Matrix a = random_matrix(rng, 1 + rng.uniform_index(9), q);
    const Matrix b = random_matrix(rng, 1 + rng.uniform_index(9), q);
    self = std::max(self, std::abs(mmd_penalty({a, {}}, {a, {}}, mmd).value));
    lowest = std::min(lowest, mmd_penalty({a, {}}, {b, {}}, mmd).value);
  }
  return {self, lowest};
}

std::pair<double, double> weight_checks() {
  // Exact population system.
  const Matrix cond = Matrix::from_rows({{0.8, 0.3}, {0.2, 0.7}});
  const Vector ps{0.5, 0.5}, pt{0.9, 0.1};
  ConfusionMatrix c{Matrix(2, 2), 1};
  Vector mu(2, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      c.c(i, j) = cond(i, j) * ps[j];
      mu[i] += cond(i, j) * pt[j];
    }
  }
  const Vector exact = estimate_weights(c, mu);
  const double exact_err = std::max(std::abs(exact[0] - 1.8), std::abs(exact[1] - 0.2));

  // Oracle recovery from n = 1000 samples per side.
  DomainMechanism source;
  source.label_probs = ps;
  source.mean_table = Matrix::from_rows({{-1.5}, {1.5}});
  source.noise = {{{0, 1}, 1.0}};
  DomainMechanism target = source;
  target.label_probs = pt;
  const LinearModel classifier{Matrix::from_rows({{0.0}, {1.0}}), Vector{0.0, 0.0}};
  double oracle_err = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const Dataset src = generate_domain(source, 1000, rng), tgt = generate_domain(target, 1000, rng);
    const Vector w =
        estimate_weights(confusion_matrix(classifier, src), predicted_target_distribution(classifier, tgt.x));
    oracle_err = std::max({oracle_err, std::abs(w[0] - 1.8), std::abs(w[1] - 0.2)});
  }
  return {exact_err, oracle_err};
}

bool identity_checks() {
  bool ok = true;
  const Vector half = softmax(Vector{0.0, 0.0});
  ok &= half[0] == 0.5 && half[1] == 0.5;
  const Vector big = softmax(Vector{1000.0, 0.0});
  ok &= std::isfinite(big[0]) && big[0] == 1.0;
  const Vector v{1, 2, 3, 4};
  ok &= quantile(v, 0.0) == 1.0 && quantile(v, 0.75) == 3.0 && quantile(Vector{5.0}, 0.3) == 5.0;
  ok &= predict_from_scores(Matrix::from_rows({{3, 3}, {1, 2}})) == std::vector<int>{1, 2};
  return ok;
}

bool rerun_check() {
  SuiteConfig c = suite_for("SCM-II", {Method::kErm, Method::kIwCip, Method::kGroupDro});
  c.seeds = {1, 2};
  c.lambda_grid = {1};
  c.lambda_cip_grid = {1};
  c.epochs = 10;
  const SuiteResult a = run_suite(c);
  c.jobs = 1;
  const SuiteResult b = run_suite(c);
  return emit_selected_cells_csv(a) == emit_selected_cells_csv(b) &&
         emit_table(a.table, TableFormat::kCsv) == emit_table(b.table, TableFormat::kCsv) &&
         emit_grid_csv(a, c) == emit_grid_csv(b, c);
}

Outcome criterion7() {
  const double grad = gradient_check();
  const auto [self, lowest] = mmd_checks();
  const auto [exact, oracle] = weight_checks();
  const bool identities = identity_checks();
  const bool reruns = rerun_check();
  const bool pass = grad <= 1e-4 && self <= 1e-12 && lowest >= -1e-12 && exact <= 1e-10 && oracle <= 0.15 &&
                    identities && reruns;
  return {pass, fmt("gradients max rel err %.2e <= 1e-4, MMD(P,P) %.1e, min MMD %.1e, exact weights err %.1e, "
                    "oracle err %.3f <= 0.15, identities %s, reruns %s",
                    grad, self, lowest, exact, oracle, identities ? "ok" : "broken",
                    reruns ? "identical" : "differ")};
}

Outcome criterion8() {
  SuiteConfig c = suite_for("SCM-binary", {Method::kCip});
  const auto rows = run_domain_count_study(c, {2, 7});
  const double at2 = rows.at(0).risk_diff_mean, at7 = rows.at(1).risk_diff_mean;
  const bool pass = at7 < at2 && at2 >= 10 * at7;
  return {pass, fmt("SCM-binary CIP risk difference M=2 %.4f (lambda %g), M=7 %.5f (lambda %g), ratio %.1f >= 10",
                    at2, rows[0].params.lambda, at7, rows[1].params.lambda, at2 / at7)};
}

}  // namespace

int main() {
  const SuiteConfig scm3 = suite_for("SCM-III", {Method::kDip, Method::kJointDip});
  std::optional<SuiteResult> scm3_result;
  const auto scm3_suite = [&]() -> const SuiteResult& {
    if (!scm3_result) scm3_result = run_suite(scm3);
    return *scm3_result;
  };

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1},
      {2, criterion2},
      {3, [&] { return criterion3(scm3_suite()); }},
      {4, criterion4},
      {5, [&] { return criterion5(scm3_suite(), scm3); }},
      {6, criterion6},
      {7, criterion7},
      {8, criterion8},
  };
  int failures = 0;
  for (const auto& [number, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("%s criterion %d: %s\n", outcome.pass ? "PASS" : "FAIL", number, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
