#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "photocorr/series.hpp"
#include "photocorr/tagstore.hpp"

namespace photocorr {

/// Region of the shot used for the stationary estimate, all in ps.
/// Bounds and lag span must be multiples of the bin width.
struct SteadyStateWindow {
  std::uint64_t t_start_ps = 0;
  std::uint64_t t_end_ps = 0;
  std::uint64_t tau_max_ps = 50'000;
  std::uint64_t bin_width_ps = 1'000;

  void validate(std::uint64_t shot_duration_ps) const;
  std::size_t first_bin() const noexcept { return t_start_ps / bin_width_ps; }
  std::size_t bins() const noexcept { return (t_end_ps - t_start_ps) / bin_width_ps; }
  std::size_t max_lag_bins() const noexcept { return tau_max_ps / bin_width_ps; }
};

/// Last 250 ns of the shot (or the whole shot if shorter), |tau| <= 50 ns, 1 ns bins.
SteadyStateWindow default_window(std::uint64_t shot_duration_ps,
                                 std::uint64_t bin_width_ps = 1'000,
                                 std::uint64_t span_ps = 250'000,
                                 std::uint64_t tau_max_ps = 50'000);

/// Partial sums of a contiguous group of shots; the bootstrap resamples these.
struct ShotBlock {
  std::uint64_t shots = 0;
  std::vector<std::uint64_t> n1;          // per window bin
  std::vector<std::uint64_t> n2;          // per window bin
  std::vector<std::uint64_t> lag_counts;  // index lag + max_lag, lag = b2 - b1
};

/// Binned singles and the cross-channel coincidence matrix over a window.
///
/// nc is row-major bins x bins with rows indexed by the channel-1 bin and
/// columns by the channel-2 bin. Only pairs with |b2 - b1| <= max_lag_bins are
/// counted; entries outside that band are never populated.
struct CorrelationGrid {
  std::uint64_t bin_width_ps = 0;
  std::uint64_t t_start_ps = 0;
  std::size_t bins = 0;
  std::size_t max_lag_bins = 0;
  std::uint64_t shot_count = 0;
  std::vector<std::uint64_t> n1;
  std::vector<std::uint64_t> n2;
  std::vector<std::uint64_t> nc;
  std::vector<ShotBlock> blocks;

  std::uint64_t coincidences(std::size_t a, std::size_t b) const noexcept { return nc[a * bins + b]; }
  std::uint64_t total_coincidences() const noexcept;
  bool in_band(std::size_t a, std::size_t b) const noexcept {
    return (a > b ? a - b : b - a) <= max_lag_bins;
  }
};

struct CorrelatorOptions {
  unsigned workers = 1;
  std::size_t max_blocks = 256;
};

/// Within-shot coincidence counting; two-pointer merge over time-sorted
/// tags, so the cost is linear in tags plus counted pairs.
CorrelationGrid coincidence_grid(const TagStream& stream, const SteadyStateWindow& window,
                                 const CorrelatorOptions& options = {});

/// g2(t1, t2) over a window, row t1 (channel 1), column t2 (channel 2).
struct G2Matrix {
  std::uint64_t bin_width_ps = 0;
  std::uint64_t t_start_ps = 0;
  std::size_t bins = 0;
  std::vector<double> values;  // NaN where singles vanish or outside the lag band

  double at(std::size_t a, std::size_t b) const noexcept { return values[a * bins + b]; }
};

G2Matrix g2_matrix(const CorrelationGrid& grid);

struct BootstrapOptions {
  std::size_t resamples = 200;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

/// Stationary g2(tau) from the grid as a ratio of sums over the window,
/// averaged over tau <-> -tau (equivalently channel exchange). Errors come
/// from a bootstrap over shot blocks; with fewer than two shots they are NaN.
///
/// `window` must have the grid's bounds and bin width; its tau_max may be
/// smaller than the grid's.
CoherenceSeries steady_state_g2(const CorrelationGrid& grid, const SteadyStateWindow& window,
                                const BootstrapOptions& options = {});

/// Counts per bin per shot summed over both detectors.
std::vector<double> intensity_trace(const TagStream& stream, std::uint64_t bin_width_ps);

void write_g2_tau_csv(const CoherenceSeries& g2, const std::filesystem::path& path);
void write_g2_matrix_csv(const G2Matrix& matrix, const std::filesystem::path& path);
void write_intensity_csv(std::span<const double> trace, std::uint64_t bin_width_ps,
                         const std::filesystem::path& path);

/// Reads a (tau_ps, <value_column>, stderr) CSV back into a real series.
CoherenceSeries read_series_csv(const std::filesystem::path& path, SeriesKind kind,
                                std::string_view value_column);

}  // namespace photocorr
