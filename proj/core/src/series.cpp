#include "photocorr/series.hpp"

#include <algorithm>
#include <string>

#include "photocorr/error.hpp"

namespace photocorr {

const char* to_string(SeriesKind kind) noexcept {
  switch (kind) {
    case SeriesKind::g2: return "g2";
    case SeriesKind::g1: return "g1";
    case SeriesKind::connected: return "connected";
  }
  return "?";
}

std::optional<std::size_t> CoherenceSeries::index_of(std::int64_t tau) const noexcept {
  auto it = std::lower_bound(tau_ps.begin(), tau_ps.end(), tau);
  if (it == tau_ps.end() || *it != tau) return std::nullopt;
  return static_cast<std::size_t>(it - tau_ps.begin());
}

std::int64_t CoherenceSeries::uniform_step() const noexcept {
  if (tau_ps.size() < 2) return 0;
  const std::int64_t step = tau_ps[1] - tau_ps[0];
  for (std::size_t i = 2; i < tau_ps.size(); ++i)
    if (tau_ps[i] - tau_ps[i - 1] != step) return 0;
  return step;
}

void CoherenceSeries::validate() const {
  require(values.size() == tau_ps.size() && sigma.size() == tau_ps.size(),
          ErrorKind::validation, "series arrays have mismatched lengths");
  require(std::is_sorted(tau_ps.begin(), tau_ps.end()), ErrorKind::validation,
          "tau grid must be increasing");
  const std::size_t n = tau_ps.size();
  for (std::size_t i = 0; i < n; ++i) {
    require(tau_ps[i] == -tau_ps[n - 1 - i], ErrorKind::validation,
            "tau grid is not symmetric about zero");
    require(is_missing(sigma[i]) || sigma[i] >= 0.0, ErrorKind::validation,
            "negative standard error at tau=" + std::to_string(tau_ps[i]));
  }
}

CoherenceSeries CoherenceSeries::real_series(SeriesKind kind, std::vector<std::int64_t> tau,
                                             std::span<const double> values,
                                             std::span<const double> sigma) {
  require(values.size() == tau.size(), ErrorKind::validation, "value/grid length mismatch");
  require(sigma.empty() || sigma.size() == tau.size(), ErrorKind::validation,
          "sigma/grid length mismatch");
  CoherenceSeries s;
  s.kind = kind;
  s.tau_ps = std::move(tau);
  s.values.reserve(values.size());
  for (double v : values) s.values.emplace_back(v, 0.0);
  if (sigma.empty())
    s.sigma.assign(s.tau_ps.size(), kMissing);
  else
    s.sigma.assign(sigma.begin(), sigma.end());
  return s;
}

std::vector<std::int64_t> symmetric_tau_grid(std::int64_t max_ps, std::int64_t step_ps) {
  require(step_ps > 0 && max_ps >= 0, ErrorKind::config, "invalid tau grid");
  const std::int64_t k = max_ps / step_ps;
  std::vector<std::int64_t> grid;
  grid.reserve(static_cast<std::size_t>(2 * k + 1));
  for (std::int64_t i = -k; i <= k; ++i) grid.push_back(i * step_ps);
  return grid;
}

bool same_grid(const CoherenceSeries& a, const CoherenceSeries& b) noexcept {
  return a.tau_ps == b.tau_ps;
}

}  // namespace photocorr
