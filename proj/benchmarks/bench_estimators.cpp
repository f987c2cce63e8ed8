#include <benchmark/benchmark.h>

#include "remqst/detector_tomography.hpp"
#include "remqst/noise.hpp"
#include "remqst/sampler.hpp"
#include "remqst/state_tomography.hpp"

namespace remqst {
namespace {

std::vector<double> noisy_counts(std::uint64_t shots) {
  SeededRng rng(1);
  const Povm device = pull_back(depolarizing_channel(0.2), pauli6_povm());
  const CountRecord r = simulate_measurement(haar_random_pure_state(2, rng), device, shots, rng);
  return {r.counts.begin(), r.counts.end()};
}

void BM_QstMle(benchmark::State& state) {
  const Povm device = pull_back(depolarizing_channel(0.2), pauli6_povm());
  const auto counts = noisy_counts(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(qst_mle(device, counts));
}
BENCHMARK(BM_QstMle)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_QstBme(benchmark::State& state) {
  const Povm device = pull_back(depolarizing_channel(0.2), pauli6_povm());
  const auto counts = noisy_counts(static_cast<std::uint64_t>(state.range(0)));
  SeededRng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(qst_bme(device, counts, {}, rng));
}
BENCHMARK(BM_QstBme)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_PauliQdt(benchmark::State& state) {
  const Povm device = pull_back(depolarizing_channel(0.2), pauli6_povm());
  const CalibrationSet cal = CalibrationSet::pauli();
  SeededRng rng(3);
  const PauliQdtRecord rec =
      simulate_pauli_qdt(cal.labels, cal.states, device, static_cast<std::uint64_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_pauli_detector(rec));
}
BENCHMARK(BM_PauliQdt)->Arg(1000)->Arg(80000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace remqst

BENCHMARK_MAIN();
