#include <doctest.h>

#include <cmath>
#include <random>

#include "photocorr/correlator.hpp"
#include "photocorr/error.hpp"

using namespace photocorr;

namespace {

TagStream poisson_pair(std::uint64_t duration, double mean_per_channel, std::size_t shots, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> count(mean_per_channel);
  std::uniform_int_distribution<std::uint64_t> when(0, duration - 1);
  TagStream s(StreamHeader{duration, 1000, 1, {}});
  for (std::size_t i = 0; i < shots; ++i) {
    std::vector<TagRecord> shot;
    for (std::uint8_t ch : {1, 2})
      for (int k = count(rng); k > 0; --k) shot.push_back({ch, when(rng)});
    s.append_shot_sorted(shot);
  }
  return s;
}

SteadyStateWindow full_window(std::uint64_t duration, std::uint64_t tau_max, std::uint64_t bin = 1000) {
  return SteadyStateWindow{0, duration, tau_max, bin};
}

TagStream swap_channels(const TagStream& s) {
  TagStream out(s.header());
  for (std::size_t i = 0; i < s.shot_count(); ++i) {
    std::vector<TagRecord> shot(s.shot(i).begin(), s.shot(i).end());
    for (auto& r : shot) r.channel = r.channel == 1 ? 2 : 1;
    out.append_shot(shot);
  }
  return out;
}

}  // namespace

TEST_CASE("coincidence grid, direct definition") {
  TagStream s(StreamHeader{10'000, 1000, 1, {}});
  const std::vector<TagRecord> shot{{1, 3500}, {2, 7200}};
  s.append_shot(shot);
  const auto g = coincidence_grid(s, full_window(10'000, 5000));
  for (std::size_t a = 0; a < 10; ++a)
    for (std::size_t b = 0; b < 10; ++b) CHECK(g.coincidences(a, b) == (a == 3 && b == 7 ? 1u : 0u));

  TagStream two(StreamHeader{10'000, 1000, 1, {}});
  const std::vector<TagRecord> same{{1, 3100}, {2, 3900}};
  two.append_shot(same);
  two.append_shot(same);
  CHECK(coincidence_grid(two, full_window(10'000, 5000)).coincidences(3, 3) == 2);
}

TEST_CASE("coincidence grid matches all-pairs counting") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = poisson_pair(40'000, 8.0, 30, rng());
    const SteadyStateWindow w{5000, 35'000, 7000, 1000};
    const auto g = coincidence_grid(s, w, {1, 7});
    std::vector<std::uint64_t> brute(w.bins() * w.bins(), 0);
    for (std::size_t i = 0; i < s.shot_count(); ++i)
      for (auto a : s.shot(i))
        for (auto b : s.shot(i)) {
          if (a.channel != 1 || b.channel != 2) continue;
          if (a.time_ps < w.t_start_ps || a.time_ps >= w.t_end_ps) continue;
          if (b.time_ps < w.t_start_ps || b.time_ps >= w.t_end_ps) continue;
          const auto ba = (a.time_ps - w.t_start_ps) / 1000, bb = (b.time_ps - w.t_start_ps) / 1000;
          if ((ba > bb ? ba - bb : bb - ba) <= 7) ++brute[ba * w.bins() + bb];
        }
    CHECK(g.nc == brute);
  }
}

TEST_CASE("grid and estimates do not depend on the worker count") {
  const auto s = poisson_pair(60'000, 5.0, 400, 9);
  const SteadyStateWindow w{10'000, 60'000, 20'000, 1000};
  const auto g1 = coincidence_grid(s, w, {1, 64});
  const auto e1 = steady_state_g2(g1, w, {50, 4, 1});
  for (unsigned workers : {2u, 3u, 8u}) {
    const auto g = coincidence_grid(s, w, {workers, 64});
    CHECK(g.nc == g1.nc);
    CHECK(g.n1 == g1.n1);
    const auto e = steady_state_g2(g, w, {50, 4, workers});
    CHECK(e.values == e1.values);
    CHECK(e.sigma == e1.sigma);
  }
}

TEST_CASE("independent Poisson channels") {
  // Oracle: E[nc(a,b)] = N_S r^2 with r the mean count per bin per channel.
  const std::uint64_t duration = 50'000;
  const double per_channel = 10.0;
  const std::size_t shots = 20'000;
  const auto s = poisson_pair(duration, per_channel, shots, 21);
  const auto w = full_window(duration, 10'000);
  const auto g = coincidence_grid(s, w);
  const double r = per_channel / 50.0;
  double total = 0.0;
  std::size_t cells = 0;
  for (std::size_t a = 0; a < g.bins; ++a)
    for (std::size_t b = 0; b < g.bins; ++b)
      if (g.in_band(a, b)) {
        total += static_cast<double>(g.coincidences(a, b));
        ++cells;
      }
  const double expect = static_cast<double>(cells) * static_cast<double>(shots) * r * r;
  CHECK(std::abs(total - expect) < 3.0 * std::sqrt(expect) * 3.0);  // cells share tags: allow 3x Poisson
  CHECK(std::abs(static_cast<double>(g.coincidences(20, 25)) - shots * r * r) < 4.0 * std::sqrt(shots * r * r));

  const auto m = g2_matrix(g);
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : m.values)
    if (!is_missing(v)) {
      sum += v;
      ++n;
    }
  CHECK(sum / static_cast<double>(n) == doctest::Approx(1.0).epsilon(0.01));

  const auto g2 = steady_state_g2(g, w, {200, 1, 1});
  for (std::size_t i = 0; i < g2.size(); ++i) {
    CHECK(g2.sigma[i] > 0.0);
    CHECK(std::abs(g2.real(i) - 1.0) < 4.0 * g2.sigma[i]);
  }
}

TEST_CASE("steady-state estimator is the symmetrised ratio of sums") {
  const auto s = poisson_pair(30'000, 6.0, 500, 33);
  const SteadyStateWindow w{0, 30'000, 6000, 1000};
  const auto g = coincidence_grid(s, w);
  const auto g2 = steady_state_g2(g, w, {0, 1, 1});
  auto raw = [&](long k) {
    double num = 0.0, den = 0.0;
    for (long t = 0; t < 30; ++t) {
      if (t + k < 0 || t + k >= 30) continue;
      num += static_cast<double>(g.coincidences(static_cast<std::size_t>(t), static_cast<std::size_t>(t + k)));
      den += static_cast<double>(g.n1[static_cast<std::size_t>(t)]) * static_cast<double>(g.n2[static_cast<std::size_t>(t + k)]);
    }
    return 500.0 * num / den;
  };
  for (long k = -6; k <= 6; ++k) {
    const auto i = g2.index_of(k * 1000);
    REQUIRE(i.has_value());
    CHECK(g2.real(*i) == doctest::Approx(0.5 * (raw(k) + raw(-k))).epsilon(1e-12));
  }
}

TEST_CASE("perfectly correlated pairs") {
  std::mt19937_64 rng(8);
  const std::size_t bins = 10, shots = 5000;
  TagStream s(StreamHeader{bins * 1000, 1000, 1, {}});
  std::uniform_int_distribution<std::uint64_t> pick(0, bins - 1);
  for (std::size_t i = 0; i < shots; ++i) {
    const auto b = pick(rng);
    const std::vector<TagRecord> shot{{1, b * 1000 + 100}, {2, b * 1000 + 600}};
    s.append_shot(shot);
  }
  const auto g = coincidence_grid(s, full_window(bins * 1000, 3000));
  const auto m = g2_matrix(g);
  for (std::size_t b = 0; b < bins; ++b) {
    CHECK(g.coincidences(b, b) == g.n1[b]);
    CHECK(m.at(b, b) == doctest::Approx(static_cast<double>(shots) / static_cast<double>(g.n1[b])));
    CHECK(m.at(b, b) == doctest::Approx(static_cast<double>(bins)).epsilon(0.15));
  }
}

TEST_CASE("channels that never co-fire give zero") {
  TagStream s(StreamHeader{10'000, 1000, 1, {}});
  for (int i = 0; i < 100; ++i) {
    const TagRecord r{static_cast<std::uint8_t>(1 + i % 2), static_cast<std::uint64_t>(100 * i % 10'000)};
    s.append_shot(std::span(&r, 1));
  }
  const auto m = g2_matrix(coincidence_grid(s, full_window(10'000, 4000)));
  std::size_t defined = 0;
  for (double v : m.values)
    if (!is_missing(v)) {
      CHECK(v == 0.0);
      ++defined;
    }
  CHECK(defined > 0);
}

TEST_CASE("exchange symmetry") {
  const auto s = poisson_pair(40'000, 7.0, 600, 44);
  const SteadyStateWindow w{0, 40'000, 8000, 1000};
  const auto a = steady_state_g2(coincidence_grid(s, w), w, {30, 2, 1});
  const auto b = steady_state_g2(coincidence_grid(swap_channels(s), w), w, {30, 2, 1});
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.real(i) == b.real(a.size() - 1 - i));
    CHECK(a.real(i) == a.real(a.size() - 1 - i));
  }
}

TEST_CASE("sub-window consistency on a stationary stream") {
  const auto s = poisson_pair(100'000, 30.0, 3000, 55);
  const SteadyStateWindow whole{0, 100'000, 10'000, 1000};
  const SteadyStateWindow part{40'000, 80'000, 10'000, 1000};
  const auto a = steady_state_g2(coincidence_grid(s, whole), whole, {100, 3, 1});
  const auto b = steady_state_g2(coincidence_grid(s, part), part, {100, 3, 1});
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(a.real(i) - b.real(i)) < 4.0 * std::hypot(a.sigma[i], b.sigma[i]));
}

TEST_CASE("windows") {
  const auto w = default_window(400'000);
  CHECK(w.t_start_ps == 150'000);
  CHECK(w.t_end_ps == 400'000);
  CHECK(w.tau_max_ps == 50'000);
  CHECK(w.bin_width_ps == 1000);
  const auto short_shot = default_window(100'000);
  CHECK(short_shot.t_start_ps == 0);

  TagStream s(StreamHeader{10'000, 1000, 1, {}});
  CHECK_THROWS_AS(coincidence_grid(s, SteadyStateWindow{0, 20'000, 1000, 1000}), Error);
  CHECK_THROWS_AS(coincidence_grid(s, SteadyStateWindow{500, 5000, 1000, 1000}), Error);
  CHECK_THROWS_AS(coincidence_grid(s, SteadyStateWindow{0, 5000, 6000, 1000}), Error);
}

TEST_CASE("intensity trace") {
  TagStream empty(StreamHeader{5000, 1000, 1, {}});
  CHECK(intensity_trace(empty, 1000) == std::vector<double>(5, 0.0));

  const auto s = poisson_pair(20'000, 40.0, 4000, 66);
  const auto trace = intensity_trace(s, 2000);
  const double expect = 2.0 * 40.0 / 10.0;
  for (double v : trace) CHECK(std::abs(v - expect) < 4.0 * std::sqrt(expect / 4000.0));
}

TEST_CASE("rebinned coincidences equal coarse coincidences") {
  const auto s = poisson_pair(40'000, 9.0, 300, 77);
  const SteadyStateWindow fine{0, 40'000, 12'000, 1000};
  const SteadyStateWindow coarse{0, 40'000, 12'000, 2000};
  const auto gf = coincidence_grid(s, fine);
  const auto gc = coincidence_grid(s, coarse);
  for (std::size_t a = 0; a < gc.bins; ++a)
    for (std::size_t b = 0; b < gc.bins; ++b) {
      if (!gc.in_band(a, b) || (a > b ? a - b : b - a) > 5) continue;  // fully inside the fine band
      std::uint64_t sum = 0;
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) sum += gf.coincidences(2 * a + i, 2 * b + j);
      CHECK(gc.coincidences(a, b) == sum);
    }
}
