#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "gwlimits/alias_table.hpp"
#include "gwlimits/process_model.hpp"
#include "gwlimits/spec_io.hpp"
#include "gwlimits/tree_sampler.hpp"

namespace {

using namespace gwlimits;

ProcessSpec e4() {
  return parse_process_json(R"({"types": 2, "rules": [
    {"type": 1, "offspring": [0, 0], "prob": "1/4"},
    {"type": 1, "offspring": [1, 0], "prob": "1/2"},
    {"type": 1, "offspring": [0, 1], "prob": "1/4"},
    {"type": 2, "offspring": [0, 0], "prob": "1/2"},
    {"type": 2, "offspring": [2, 1], "prob": "1/2"}]})");
}

std::vector<double> weights(std::size_t n) {
  std::vector<double> w(n);
  std::iota(w.begin(), w.end(), 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return w;
}

void BM_AliasDraw(benchmark::State& state) {
  const auto w = weights(static_cast<std::size_t>(state.range(0)));
  const AliasTable table(w);
  Xoshiro256 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(table.sample(rng));
}
BENCHMARK(BM_AliasDraw)->Arg(3)->Arg(64);

void BM_Multinomial(benchmark::State& state) {
  const auto w = weights(8);
  const AliasTable table(w);
  Xoshiro256 rng(1);
  std::vector<std::uint64_t> counts(w.size());
  const auto trials = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    sample_multinomial(trials, w, table, rng, counts);
    benchmark::DoNotOptimize(counts.data());
  }
}
BENCHMARK(BM_Multinomial)->Arg(16)->Arg(1000)->Arg(1000000);

void BM_SampleTree(benchmark::State& state) {
  const auto spec = e4();
  SamplerConfig cfg;
  cfg.master_seed = 1;
  cfg.node_cap = 1'000'000'000'000ULL;
  cfg.tracked_rules = all_rules(spec);
  const TreeSampler sampler(spec, cfg);
  std::uint64_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(index++));
}
BENCHMARK(BM_SampleTree);

void BM_SampleBatch(benchmark::State& state) {
  const auto spec = e4();
  SamplerConfig cfg;
  cfg.master_seed = 1;
  cfg.node_cap = 1'000'000'000'000ULL;
  const TreeSampler sampler(spec, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(sample_batch(sampler, 10000, {RecordLevel::None, 1, 0}));
}
BENCHMARK(BM_SampleBatch)->Unit(benchmark::kMillisecond);

void BM_EigenData(benchmark::State& state) {
  const auto spec = e4();
  for (auto _ : state) benchmark::DoNotOptimize(require_critical(spec));
}
BENCHMARK(BM_EigenData);

}  // namespace

BENCHMARK_MAIN();
