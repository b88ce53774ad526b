#include "photocorr/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "photocorr/csv.hpp"
#include "photocorr/error.hpp"
#include "photocorr/parallel.hpp"

namespace photocorr {

namespace {

__extension__ using u128 = unsigned __int128;

struct WindowBins {
  std::size_t first;
  std::size_t count;
  std::size_t max_lag;
};

// Channel-1 and channel-2 bin indices (relative to the window) of one shot.
void shot_bins(std::span<const TagRecord> shot, const SteadyStateWindow& w,
               std::vector<std::int64_t>& b1, std::vector<std::int64_t>& b2) {
  b1.clear();
  b2.clear();
  for (const auto& r : shot) {
    if (r.time_ps < w.t_start_ps || r.time_ps >= w.t_end_ps) continue;
    const auto bin = static_cast<std::int64_t>((r.time_ps - w.t_start_ps) / w.bin_width_ps);
    (r.channel == 1 ? b1 : b2).push_back(bin);
  }
}

// Symmetrised ratio-of-sums estimate from aggregated counts.
std::vector<double> estimate_g2(std::span<const std::uint64_t> n1, std::span<const std::uint64_t> n2,
                                std::span<const std::uint64_t> lag_counts, std::size_t grid_lag,
                                std::size_t lag, double shots) {
  const auto bins = static_cast<std::int64_t>(n1.size());
  const auto k_max = static_cast<std::int64_t>(lag);
  std::vector<double> raw(2 * lag + 1);
  for (std::int64_t k = -k_max; k <= k_max; ++k) {
    u128 den = 0;
    const std::int64_t t0 = std::max<std::int64_t>(0, -k);
    const std::int64_t t1 = std::min<std::int64_t>(bins, bins - k);
    for (std::int64_t t = t0; t < t1; ++t) den += static_cast<u128>(n1[t]) * n2[t + k];
    const double num = static_cast<double>(lag_counts[static_cast<std::size_t>(k + static_cast<std::int64_t>(grid_lag))]);
    raw[static_cast<std::size_t>(k + k_max)] =
        den == 0 ? kMissing : shots * num / static_cast<double>(den);
  }
  std::vector<double> sym(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) sym[i] = 0.5 * (raw[i] + raw[raw.size() - 1 - i]);
  return sym;
}

}  // namespace

void SteadyStateWindow::validate(std::uint64_t shot_duration_ps) const {
  require(bin_width_ps > 0, ErrorKind::config, "bin width must be positive");
  require(t_start_ps < t_end_ps, ErrorKind::config, "empty analysis window");
  require(t_end_ps <= shot_duration_ps, ErrorKind::config,
          "window end " + std::to_string(t_end_ps) + " ps beyond shot duration " +
              std::to_string(shot_duration_ps) + " ps");
  require(t_start_ps % bin_width_ps == 0 && t_end_ps % bin_width_ps == 0, ErrorKind::config,
          "window bounds must be multiples of the bin width");
  require(tau_max_ps % bin_width_ps == 0, ErrorKind::config,
          "tau_max must be a multiple of the bin width");
  require(tau_max_ps <= t_end_ps - t_start_ps, ErrorKind::config,
          "tau_max exceeds the window length");
}

SteadyStateWindow default_window(std::uint64_t shot_duration_ps, std::uint64_t bin_width_ps,
                                 std::uint64_t span_ps, std::uint64_t tau_max_ps) {
  SteadyStateWindow w;
  w.bin_width_ps = bin_width_ps;
  const std::uint64_t end = shot_duration_ps - shot_duration_ps % bin_width_ps;
  const std::uint64_t span = std::min(span_ps - span_ps % bin_width_ps, end);
  w.t_end_ps = end;
  w.t_start_ps = end - span;
  w.tau_max_ps = std::min(tau_max_ps - tau_max_ps % bin_width_ps, span);
  return w;
}

std::uint64_t CorrelationGrid::total_coincidences() const noexcept {
  return std::accumulate(nc.begin(), nc.end(), std::uint64_t{0});
}

CorrelationGrid coincidence_grid(const TagStream& stream, const SteadyStateWindow& window,
                                 const CorrelatorOptions& options) {
  window.validate(stream.header().shot_duration_ps);
  const std::size_t bins = window.bins();
  const std::size_t lag = window.max_lag_bins();
  const std::size_t shots = stream.shot_count();

  CorrelationGrid grid;
  grid.bin_width_ps = window.bin_width_ps;
  grid.t_start_ps = window.t_start_ps;
  grid.bins = bins;
  grid.max_lag_bins = lag;
  grid.shot_count = shots;
  grid.n1.assign(bins, 0);
  grid.n2.assign(bins, 0);
  grid.nc.assign(bins * bins, 0);

  const std::size_t block_count = std::min(std::max<std::size_t>(options.max_blocks, 1), shots);
  grid.blocks.resize(block_count);
  for (auto& b : grid.blocks) {
    b.n1.assign(bins, 0);
    b.n2.assign(bins, 0);
    b.lag_counts.assign(2 * lag + 1, 0);
  }

  const unsigned workers = std::max(1u, std::min<unsigned>(resolve_workers(options.workers),
                                                           std::max<std::size_t>(block_count, 1)));
  std::vector<std::vector<std::uint64_t>> partial(workers);

  parallel_chunks(block_count, workers, [&](unsigned worker, std::size_t begin, std::size_t end) {
    auto& nc = partial[worker];
    nc.assign(bins * bins, 0);
    std::vector<std::int64_t> b1, b2;
    const auto k = static_cast<std::int64_t>(lag);
    for (std::size_t blk = begin; blk < end; ++blk) {
      auto& block = grid.blocks[blk];
      const std::size_t s0 = shots * blk / block_count;
      const std::size_t s1 = shots * (blk + 1) / block_count;
      block.shots = s1 - s0;
      for (std::size_t s = s0; s < s1; ++s) {
        shot_bins(stream.shot(s), window, b1, b2);
        for (auto b : b1) ++block.n1[static_cast<std::size_t>(b)];
        for (auto b : b2) ++block.n2[static_cast<std::size_t>(b)];
        std::size_t lo = 0;
        for (auto a : b1) {
          while (lo < b2.size() && b2[lo] < a - k) ++lo;
          std::uint64_t* row = nc.data() + static_cast<std::size_t>(a) * bins;
          for (std::size_t j = lo; j < b2.size() && b2[j] <= a + k; ++j) {
            ++row[static_cast<std::size_t>(b2[j])];
            ++block.lag_counts[static_cast<std::size_t>(b2[j] - a + k)];
          }
        }
      }
    }
  });

  for (const auto& nc : partial)
    for (std::size_t i = 0; i < nc.size(); ++i) grid.nc[i] += nc[i];
  for (const auto& b : grid.blocks)
    for (std::size_t t = 0; t < bins; ++t) {
      grid.n1[t] += b.n1[t];
      grid.n2[t] += b.n2[t];
    }
  return grid;
}

G2Matrix g2_matrix(const CorrelationGrid& grid) {
  G2Matrix m;
  m.bin_width_ps = grid.bin_width_ps;
  m.t_start_ps = grid.t_start_ps;
  m.bins = grid.bins;
  m.values.assign(grid.bins * grid.bins, kMissing);
  const double shots = static_cast<double>(grid.shot_count);
  for (std::size_t a = 0; a < grid.bins; ++a) {
    if (grid.n1[a] == 0) continue;
    for (std::size_t b = 0; b < grid.bins; ++b) {
      if (grid.n2[b] == 0 || !grid.in_band(a, b)) continue;
      m.values[a * grid.bins + b] = shots * static_cast<double>(grid.coincidences(a, b)) /
                                    (static_cast<double>(grid.n1[a]) * static_cast<double>(grid.n2[b]));
    }
  }
  return m;
}

CoherenceSeries steady_state_g2(const CorrelationGrid& grid, const SteadyStateWindow& window,
                                const BootstrapOptions& options) {
  require(window.bin_width_ps == grid.bin_width_ps && window.t_start_ps == grid.t_start_ps &&
              window.bins() == grid.bins,
          ErrorKind::config, "window does not match the correlation grid; rebuild the grid");
  const std::size_t lag = window.max_lag_bins();
  require(lag <= grid.max_lag_bins, ErrorKind::config, "tau_max exceeds the grid's lag span");

  std::vector<std::uint64_t> lag_counts(2 * grid.max_lag_bins + 1, 0);
  for (const auto& b : grid.blocks)
    for (std::size_t i = 0; i < lag_counts.size(); ++i) lag_counts[i] += b.lag_counts[i];

  const double shots = static_cast<double>(grid.shot_count);
  std::vector<double> point = estimate_g2(grid.n1, grid.n2, lag_counts, grid.max_lag_bins, lag, shots);

  std::vector<double> sigma(point.size(), kMissing);
  const std::size_t nblocks = grid.blocks.size();
  if (grid.shot_count >= 2 && nblocks >= 2 && options.resamples >= 2) {
    std::vector<std::vector<double>> draws(options.resamples);
    parallel_chunks(options.resamples, resolve_workers(options.workers),
                    [&](unsigned, std::size_t begin, std::size_t end) {
                      std::vector<std::uint64_t> n1(grid.bins), n2(grid.bins), lc(lag_counts.size());
                      for (std::size_t r = begin; r < end; ++r) {
                        auto rng = make_rng(options.seed, r);
                        std::uniform_int_distribution<std::size_t> pick(0, nblocks - 1);
                        std::fill(n1.begin(), n1.end(), 0);
                        std::fill(n2.begin(), n2.end(), 0);
                        std::fill(lc.begin(), lc.end(), 0);
                        std::uint64_t s = 0;
                        for (std::size_t i = 0; i < nblocks; ++i) {
                          const auto& b = grid.blocks[pick(rng)];
                          s += b.shots;
                          for (std::size_t t = 0; t < grid.bins; ++t) {
                            n1[t] += b.n1[t];
                            n2[t] += b.n2[t];
                          }
                          for (std::size_t j = 0; j < lc.size(); ++j) lc[j] += b.lag_counts[j];
                        }
                        draws[r] = estimate_g2(n1, n2, lc, grid.max_lag_bins, lag, static_cast<double>(s));
                      }
                    });
    for (std::size_t i = 0; i < point.size(); ++i) {
      double mean = 0.0, m2 = 0.0;
      std::size_t n = 0;
      for (const auto& d : draws) {
        if (is_missing(d[i])) continue;
        ++n;
        const double delta = d[i] - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (d[i] - mean);
      }
      if (n >= 2 && !is_missing(point[i])) sigma[i] = std::sqrt(m2 / static_cast<double>(n - 1));
    }
  }

  CoherenceSeries out;
  out.kind = SeriesKind::g2;
  const auto step = static_cast<std::int64_t>(grid.bin_width_ps);
  out.tau_ps = symmetric_tau_grid(static_cast<std::int64_t>(lag) * step, step);
  for (double v : point) out.values.emplace_back(v, 0.0);
  out.sigma = std::move(sigma);
  return out;
}

std::vector<double> intensity_trace(const TagStream& stream, std::uint64_t bin_width_ps) {
  const auto counts = bin_counts(stream, bin_width_ps);
  std::vector<double> trace(counts.counts_ch1.size(), 0.0);
  const std::size_t shots = stream.shot_count();
  if (shots == 0) return trace;
  for (std::size_t b = 0; b < trace.size(); ++b)
    trace[b] = static_cast<double>(counts.counts_ch1[b] + counts.counts_ch2[b]) /
               static_cast<double>(shots);
  return trace;
}

void write_g2_tau_csv(const CoherenceSeries& g2, const std::filesystem::path& path) {
  CsvWriter csv(path, {"tau_ps", "g2", "stderr"});
  for (std::size_t i = 0; i < g2.size(); ++i) csv.row(g2.tau_ps[i], g2.real(i), g2.sigma[i]);
}

void write_g2_matrix_csv(const G2Matrix& matrix, const std::filesystem::path& path) {
  std::vector<std::string> columns{"t1_ps"};
  for (std::size_t b = 0; b < matrix.bins; ++b)
    columns.push_back(std::to_string(matrix.t_start_ps + b * matrix.bin_width_ps));
  CsvWriter csv(path, columns);
  std::vector<double> row(matrix.bins + 1);
  for (std::size_t a = 0; a < matrix.bins; ++a) {
    row[0] = static_cast<double>(matrix.t_start_ps + a * matrix.bin_width_ps);
    for (std::size_t b = 0; b < matrix.bins; ++b) row[b + 1] = matrix.at(a, b);
    csv.row(row);
  }
}

void write_intensity_csv(std::span<const double> trace, std::uint64_t bin_width_ps,
                         const std::filesystem::path& path) {
  CsvWriter csv(path, {"bin_start_ps", "intensity"});
  for (std::size_t b = 0; b < trace.size(); ++b) csv.row(b * bin_width_ps, trace[b]);
}

CoherenceSeries read_series_csv(const std::filesystem::path& path, SeriesKind kind,
                                std::string_view value_column) {
  const auto table = read_csv(path);
  const auto tau = table.column_values("tau_ps");
  const auto values = table.column_values(value_column);
  std::vector<double> sigma = table.column_values("stderr");
  std::vector<std::int64_t> grid;
  grid.reserve(tau.size());
  for (double t : tau) grid.push_back(static_cast<std::int64_t>(std::llround(t)));
  auto s = CoherenceSeries::real_series(kind, std::move(grid), values, sigma);
  s.validate();
  return s;
}

}  // namespace photocorr
