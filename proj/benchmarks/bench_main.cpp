#include <benchmark/benchmark.h>

#include "cicda/algorithms.hpp"
#include "cicda/penalties.hpp"

using namespace cicda;

static void BM_MmdPenalty(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const FeatureBatch a{gaussian_matrix(rng, n, 2, 0, 1), {}}, b{gaussian_matrix(rng, n, 2, 0.5, 1), {}};
  PenaltySpec spec;
  spec.kind = PenaltyKind::kMmd;
  for (auto _ : state) benchmark::DoNotOptimize(mmd_penalty(a, b, spec).value);
}
BENCHMARK(BM_MmdPenalty)->Arg(25)->Arg(100)->Arg(200);

static void BM_CipPenalty(benchmark::State& state) {
  Rng rng(2);
  std::vector<DomainFeatures> domains;
  for (int m = 0; m < state.range(0); ++m) {
    DomainFeatures d{gaussian_matrix(rng, 100, 2, 0, 1), std::vector<int>(100)};
    for (auto& y : d.labels) y = 1 + static_cast<int>(rng.uniform_index(2));
    domains.push_back(d);
  }
  for (auto _ : state) benchmark::DoNotOptimize(cip_penalty(domains, 2, PenaltySpec{}).value);
}
BENCHMARK(BM_CipPenalty)->Arg(3)->Arg(11);

static void BM_SolveLinearSystem(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix a = gaussian_matrix(rng, n, n, 0, 1);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
  const Vector b(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_linear_system(a, b));
}
BENCHMARK(BM_SolveLinearSystem)->Arg(2)->Arg(16)->Arg(64);

static void BM_TrainMethod(benchmark::State& state) {
  const auto method = static_cast<Method>(state.range(0));
  Rng rng(4);
  const ScenarioSpec scenario = build_scenario(method == Method::kJointDip ? "SCM-III" : "SCM-I", rng);
  const auto data = generate_scenario_data(scenario, rng.substream(1));
  const MethodSpec spec = default_method_spec(method);
  for (auto _ : state) benchmark::DoNotOptimize(train_method(spec, scenario, data, Rng(5)).metrics.tar_acc);
  state.SetLabel(method_name(method));
}
BENCHMARK(BM_TrainMethod)
    ->Arg(static_cast<int>(Method::kErm))
    ->Arg(static_cast<int>(Method::kDip))
    ->Arg(static_cast<int>(Method::kCip))
    ->Arg(static_cast<int>(Method::kJointDip))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
