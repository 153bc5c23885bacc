#include <benchmark/benchmark.h>

#include "memshield/corpus.hpp"
#include "memshield/defenses.hpp"
#include "memshield/harness.hpp"
#include "memshield/metrics.hpp"
#include "memshield/random.hpp"

#include <map>

using namespace memshield;

namespace {

const Embedder& embedder() {
  static const Embedder e;
  return e;
}

const MemoryStore& store(std::size_t n) {
  static std::map<std::size_t, MemoryStore> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    CorpusSpec spec;
    spec.size = n;
    it = cache.emplace(n, generate_corpus(spec, embedder())).first;
  }
  return it->second;
}

void BM_Embed(benchmark::State& state) {
  const std::string text = "remind me to review the quarterly budget report before the friday meeting";
  for (auto _ : state) benchmark::DoNotOptimize(embedder().embed(text));
}
BENCHMARK(BM_Embed);

void BM_Retrieve(benchmark::State& state) {
  const auto& s = store(static_cast<std::size_t>(state.range(0)));
  const auto q = embedder().embed("what is the project launch plan");
  for (auto _ : state) benchmark::DoNotOptimize(s.retrieve(q, 5));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Retrieve)->RangeMultiplier(10)->Range(100, 10000)->Complexity();

void BM_MemSadScore(benchmark::State& state) {
  const auto& s = store(1000);
  std::vector<Embedding> ref, history;
  for (std::size_t i = 0; i < 50; ++i) ref.push_back(s.at(i).embedding);
  for (std::size_t i = 0; i < 20; ++i) history.push_back(s.at(100 + i).embedding);
  MemSad::Config cfg;
  cfg.mode = state.range(0) ? ScoreMode::Combined : ScoreMode::Max;
  const auto det = MemSad(cfg).calibrated(ref, history);
  const auto e = s.at(500).embedding;
  for (auto _ : state) benchmark::DoNotOptimize(det.score(e));
}
BENCHMARK(BM_MemSadScore)->Arg(0)->Arg(1);

void BM_Auroc(benchmark::State& state) {
  Rng rng = make_rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> s(n);
  std::vector<bool> l(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = uniform01(rng);
    l[i] = bernoulli(rng, 0.1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(auroc(s, l));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(10000);

void BM_Trial(benchmark::State& state) {
  ScenarioConfig sc;
  sc.attack.family = static_cast<AttackFamily>(state.range(0));
  sc.holdout = 200;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(sc, 1));
}
BENCHMARK(BM_Trial)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
