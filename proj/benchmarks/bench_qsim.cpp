#include <benchmark/benchmark.h>

#include "photocorr/qsim.hpp"

using namespace photocorr;

namespace {

void BM_Mcwf(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(mcwf_photon_stream({5.0}, 400'000, static_cast<std::size_t>(state.range(0)), 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Mcwf)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ChaoticStream(benchmark::State& state) {
  FieldStreamConfig c;
  c.params = {5.0};
  c.n_emitters = static_cast<double>(state.range(0));
  c.shots = 200;
  c.rate_per_ns = 0.02 / (0.25 * c.n_emitters);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_field_stream(c));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.shots));
}
BENCHMARK(BM_ChaoticStream)->Arg(10)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SingleAtomG2(benchmark::State& state) {
  const auto tau = symmetric_tau_grid(50'000, 100);
  for (auto _ : state) benchmark::DoNotOptimize(single_atom_g2({5.0}, tau));
}
BENCHMARK(BM_SingleAtomG2);

void BM_FewAtom(benchmark::State& state) {
  EnsembleGeometry g;
  for (int i = 0; i < state.range(0); ++i) g.positions.push_back({0.1 * i, 0.0, 0.3 * i});
  const auto tau = symmetric_tau_grid(20'000, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(fewatom_collective_correlators({5.0}, g, tau));
}
BENCHMARK(BM_FewAtom)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
