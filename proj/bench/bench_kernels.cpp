// Serial reference vs OpenMP kernels on a UN-sized problem (97 nodes, 32 timepoints).
#include <benchmark/benchmark.h>

#include <memory>

#include "dame/generator.hpp"
#include "dame/kernels.hpp"

namespace {

struct Fixture {
  std::unique_ptr<dame::Model> model;
  dame::ParameterState state;
  dame::kernels::Network net;
  std::vector<dame::ParameterState> draws;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    dame::SimConfig sc;
    sc.N = 97;
    sc.T = 32;
    sc.P = 3;
    sc.R = 2;
    sc.seed = 11;
    auto sim = dame::simulate_dataset(sc);
    dame::ModelConfig mc;
    Fixture out;
    out.model = std::make_unique<dame::Model>(sim.data, mc);
    out.state = sim.truth;
    out.net = out.model->data().network.values;
    out.draws.assign(16, sim.truth);
    return out;
  }();
  return f;
}

void BM_ResidualsSerial(benchmark::State& st) {
  const auto& f = fixture();
  dame::ResidualTensor e;
  for (auto _ : st) {
    dame::kernels::serial::residuals(*f.model, f.state, e);
    benchmark::DoNotOptimize(e.data());
  }
}
void BM_ResidualsOmp(benchmark::State& st) {
  const auto& f = fixture();
  dame::ResidualTensor e;
  for (auto _ : st) {
    dame::kernels::omp::residuals(*f.model, f.state, e);
    benchmark::DoNotOptimize(e.data());
  }
}

void BM_DegreeStatsSerial(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(dame::kernels::serial::degree_stats(f.net, 3));
}
void BM_DegreeStatsOmp(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(dame::kernels::omp::degree_stats(f.net, 3));
}

template <bool Parallel>
void replicate_bench(benchmark::State& st) {
  const auto& f = fixture();
  std::vector<const dame::ParameterState*> ptrs;
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < f.draws.size(); ++k) {
    ptrs.push_back(&f.draws[k]);
    seeds.push_back(k + 1);
  }
  for (auto _ : st) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(dame::kernels::omp::replicate_degrees(*f.model, ptrs, seeds));
    } else {
      benchmark::DoNotOptimize(dame::kernels::serial::replicate_degrees(*f.model, ptrs, seeds));
    }
  }
}
void BM_ReplicateDegreesSerial(benchmark::State& st) { replicate_bench<false>(st); }
void BM_ReplicateDegreesOmp(benchmark::State& st) { replicate_bench<true>(st); }

}  // namespace

BENCHMARK(BM_ResidualsSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ResidualsOmp)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DegreeStatsSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DegreeStatsOmp)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ReplicateDegreesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicateDegreesOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
