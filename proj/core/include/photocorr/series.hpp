#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace photocorr {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return v != v; }

enum class SeriesKind { g2, g1, connected };

const char* to_string(SeriesKind kind) noexcept;

/// Correlation function sampled on a symmetric lag grid.
///
/// `values` is complex so that g1 and the anomalous correlator fit the same
/// container; g2 and C carry a zero imaginary part. Missing points (no
/// singles, no pairs) are NaN in both the value and the error.
struct CoherenceSeries {
  SeriesKind kind = SeriesKind::g2;
  std::vector<std::int64_t> tau_ps;
  std::vector<std::complex<double>> values;
  std::vector<double> sigma;  // standard error, NaN when unavailable

  std::size_t size() const noexcept { return tau_ps.size(); }
  double real(std::size_t i) const noexcept { return values[i].real(); }
  double magnitude(std::size_t i) const noexcept { return std::abs(values[i]); }

  /// Index of lag `tau`, if present.
  std::optional<std::size_t> index_of(std::int64_t tau) const noexcept;

  /// Spacing of the grid if uniform, otherwise 0.
  std::int64_t uniform_step() const noexcept;

  /// Checks sizes, symmetry of the grid and non-negative errors.
  void validate() const;

  static CoherenceSeries real_series(SeriesKind kind, std::vector<std::int64_t> tau,
                                     std::span<const double> values,
                                     std::span<const double> sigma = {});
};

/// Symmetric lag grid -max..max in steps of `step` (both in ps).
std::vector<std::int64_t> symmetric_tau_grid(std::int64_t max_ps, std::int64_t step_ps);

/// True when the two series share an identical lag grid.
bool same_grid(const CoherenceSeries& a, const CoherenceSeries& b) noexcept;

}  // namespace photocorr
