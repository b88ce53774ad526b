#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "photocorr/correlator.hpp"

using namespace photocorr;

namespace {

TagStream poisson_stream(std::size_t shots, std::size_t per_shot) {
  std::mt19937_64 rng(1);
  StreamHeader h;
  h.shot_duration_ps = 400'000;
  TagStream s(h);
  std::poisson_distribution<int> count(static_cast<double>(per_shot));
  std::uniform_int_distribution<std::uint64_t> when(0, h.shot_duration_ps - 1);
  std::vector<TagRecord> shot;
  for (std::size_t i = 0; i < shots; ++i) {
    shot.clear();
    for (int k = count(rng); k > 0; --k) shot.push_back({static_cast<std::uint8_t>(1 + (rng() & 1)), when(rng)});
    std::sort(shot.begin(), shot.end(), [](const TagRecord& a, const TagRecord& b) { return a.time_ps < b.time_ps; });
    s.append_shot(shot);
  }
  return s;
}

void BM_CoincidenceGrid(benchmark::State& state) {
  const auto s = poisson_stream(static_cast<std::size_t>(state.range(0)), 100);
  const auto w = default_window(s.header().shot_duration_ps);
  for (auto _ : state) benchmark::DoNotOptimize(coincidence_grid(s, w, {static_cast<unsigned>(state.range(1)), 256}));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * s.tag_count()));
}
BENCHMARK(BM_CoincidenceGrid)->Args({10'000, 1})->Args({10'000, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  const auto s = poisson_stream(10'000, 100);
  const auto w = default_window(s.header().shot_duration_ps);
  const auto grid = coincidence_grid(s, w);
  for (auto _ : state)
    benchmark::DoNotOptimize(steady_state_g2(grid, w, {static_cast<std::size_t>(state.range(0)), 1, 1}));
}
BENCHMARK(BM_Bootstrap)->Arg(0)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
