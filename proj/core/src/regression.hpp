#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "photocorr/cumulant.hpp"
#include "photocorr/liouville.hpp"

namespace photocorr::detail {

/// Ordered moments of (a(t), b(t+tau), c(t+tau), d(t)) in the steady state
/// rho, for each non-negative ascending lag, by the quantum regression
/// theorem: <a X d> = Tr[X exp(L tau)(d rho a)] with X the ordered product
/// of the factors taken at t+tau.
std::vector<MomentTable> regression_moments(quantum::Propagator& prop, const quantum::Matrix& rho,
                                            const quantum::Matrix& a, const quantum::Matrix& b,
                                            const quantum::Matrix& c, const quantum::Matrix& d,
                                            std::span<const std::int64_t> lags_ps);

/// Distinct |tau| values of a grid, ascending, and the position of each input lag among them.
struct LagIndex {
  std::vector<std::int64_t> lags;
  std::vector<std::size_t> position;
};
LagIndex index_lags(std::span<const std::int64_t> tau_ps);

}  // namespace photocorr::detail
