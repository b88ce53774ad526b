#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace photocorr::detail {

/// Arrival times (ps from the block start, ascending) of a Poisson process
/// whose expected count in sample j is mu[j], by inverting the integrated rate.
template <typename Rng>
void poisson_arrivals(std::span<const double> mu, std::uint64_t dt_ps, Rng& rng, std::vector<double>& out) {
  std::exponential_distribution<double> exp1(1.0);
  double need = exp1(rng);
  const double dt = static_cast<double>(dt_ps);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double m = mu[j];
    if (m <= 0.0) continue;
    double used = 0.0;  // fraction of sample j already consumed
    while (need <= m * (1.0 - used)) {
      used += need / m;
      // Keep the arrival inside sample j despite rounding.
      out.push_back(std::min((static_cast<double>(j) + used) * dt, (static_cast<double>(j) + 1.0) * dt - 0.5));
      need = exp1(rng);
    }
    need -= m * (1.0 - used);
  }
}

}  // namespace photocorr::detail
