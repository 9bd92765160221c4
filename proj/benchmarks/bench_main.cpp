#include <benchmark/benchmark.h>

#include <vector>

#include "softscore/discretizer.hpp"
#include "softscore/losses.hpp"
#include "softscore/metrics.hpp"
#include "softscore/recovery.hpp"
#include "softscore/simulator.hpp"
#include "softscore/trainer.hpp"

using namespace softscore;

namespace {

const LevelScheme kScheme = LevelScheme::default5();

void bm_soft_label(benchmark::State& state) {
  Rng rng(1);
  std::vector<ScoreDistribution> dists;
  for (int i = 0; i < 1024; ++i) dists.emplace_back(rng.uniform(1.2, 4.8), rng.uniform(0.3, 1.0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(soft_label(dists[i++ % dists.size()], kScheme));
  }
}
BENCHMARK(bm_soft_label);

void bm_recover(benchmark::State& state) {
  const auto label = soft_label({3.2, 0.5}, kScheme);
  for (auto _ : state) benchmark::DoNotOptimize(recover(label, kScheme));
}
BENCHMARK(bm_recover);

void bm_gaussian_js(benchmark::State& state) {
  const double narrow = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_js({3.0, narrow}, {3.4, 0.8}));
}
BENCHMARK(bm_gaussian_js)->Arg(2)->Arg(20)->Arg(200);

void bm_precision_report(benchmark::State& state) {
  CorpusConfig cfg;
  cfg.n_records = 2000;
  cfg.mu_lo = 1.2;
  cfg.mu_hi = 4.8;
  cfg.seed = 3;
  std::vector<Record> records;
  for (const auto& s : synth_corpus_detail(cfg, 1))
    records.emplace_back(s.record.id, s.record.dataset, s.truth.mu(), s.truth.sigma());
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(precision_report(records, LabelMethod::soft, kScheme, {}, threads));
}
BENCHMARK(bm_precision_report)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void bm_batch_gradient(benchmark::State& state) {
  FeatureWorldConfig wc;
  wc.n_records = 64;
  const auto world = synth_feature_world(wc);
  const auto& records = world.dataset.records;
  std::vector<TrainItem> batch;
  for (const auto& r : records) {
    const auto dist = r.record.dist();
    batch.push_back({r.features, soft_label(dist, kScheme), one_hot_index(dist.mu(), kScheme), dist, 0});
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < batch.size(); ++i) pairs.emplace_back(i, i + 1);
  TrainConfig cfg;
  cfg.use_fidelity = state.range(0) != 0;
  const auto head = initialize_head(records.front().features.size(), kScheme.size(), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(batch_gradient(head, batch, pairs, cfg, kScheme, {}));
}
BENCHMARK(bm_batch_gradient)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
