#include <benchmark/benchmark.h>

#include <random>

#include "pem/analyzer.hpp"
#include "pem/corpusgen.hpp"
#include "pem/experiment.hpp"
#include "pem/interp.hpp"
#include "pem/sampler.hpp"
#include "pem/theory.hpp"

namespace {

const pem::Program& program() {
  static const pem::Program p = [] {
    pem::GenSpec spec;
    spec.rng_seed = 1;
    return pem::generate(spec);
  }();
  return p;
}

void BM_FaithfulRun(benchmark::State& state) {
  const pem::Interpreter interp(program(), {});
  for (auto _ : state) benchmark::DoNotOptimize(interp.run(nullptr, 0x2a, 3));
}
BENCHMARK(BM_FaithfulRun);

void BM_Sample(benchmark::State& state) {
  const pem::Interpreter interp(program(), {});
  pem::SamplerConfig cfg;
  cfg.budget = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pem::sample(interp, 0x2a, cfg, 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sample)->Arg(50)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Sign(benchmark::State& state) {
  const pem::SignConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(pem::sign(program(), cfg));
}
BENCHMARK(BM_Sign)->Unit(benchmark::kMillisecond);

pem::Signature random_signature(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  pem::ObservableValues ov;
  for (std::size_t i = 0; i < n; ++i) ov.add(pem::ValueKind::MemVal, rng() % (4 * n), 1 + rng() % 3);
  return pem::normalize(ov, "s");
}

void BM_Jaccard(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const pem::Signature a = random_signature(1, n);
  const pem::Signature b = random_signature(2, n);
  for (auto _ : state) benchmark::DoNotOptimize(pem::jaccard(a, b));
}
BENCHMARK(BM_Jaccard)->Arg(1'000)->Arg(50'000);

void BM_StateTable(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pem::theory::StateTable(b, 0.85, 0.85));
}
BENCHMARK(BM_StateTable)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
