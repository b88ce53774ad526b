#include <algorithm>
#include <cmath>
#include <numbers>

#include "photocorr/error.hpp"
#include "photocorr/qsim.hpp"
#include "regression.hpp"

namespace photocorr {

namespace detail {

std::vector<MomentTable> regression_moments(quantum::Propagator& prop, const quantum::Matrix& rho,
                                            const quantum::Matrix& a, const quantum::Matrix& b,
                                            const quantum::Matrix& c, const quantum::Matrix& d,
                                            std::span<const std::int64_t> lags_ps) {
  using quantum::vec;
  // state index: bit 0 -> a on the right, bit 1 -> d on the left
  std::vector<quantum::Vector> states = {vec(rho), vec(rho * a), vec(d * rho), vec(d * rho * a)};
  const Eigen::Index dim = rho.rows();
  // contraction index: bit 0 -> b, bit 1 -> c
  const quantum::RowVector x[4] = {
      quantum::trace_functional(quantum::Matrix::Identity(dim, dim)), quantum::trace_functional(b),
      quantum::trace_functional(c), quantum::trace_functional(b * c)};

  std::vector<MomentTable> out(lags_ps.size());
  prop.sweep(std::move(states), lags_ps, [&](std::size_t k, const std::vector<quantum::Vector>& s) {
    MomentTable& m = out[k];
    for (unsigned mask = 0; mask < 16; ++mask) {
      const unsigned si = ((mask & kA) ? 1u : 0u) | ((mask & kD) ? 2u : 0u);
      const unsigned xi = ((mask & kB) ? 1u : 0u) | ((mask & kC) ? 2u : 0u);
      m[mask] = (x[xi] * s[si])(0);
    }
    m[0] = 1.0;
  });
  return out;
}

LagIndex index_lags(std::span<const std::int64_t> tau_ps) {
  LagIndex idx;
  idx.lags.reserve(tau_ps.size());
  for (auto t : tau_ps) idx.lags.push_back(t < 0 ? -t : t);
  std::sort(idx.lags.begin(), idx.lags.end());
  idx.lags.erase(std::unique(idx.lags.begin(), idx.lags.end()), idx.lags.end());
  idx.position.reserve(tau_ps.size());
  for (auto t : tau_ps) {
    const auto it = std::lower_bound(idx.lags.begin(), idx.lags.end(), t < 0 ? -t : t);
    idx.position.push_back(static_cast<std::size_t>(it - idx.lags.begin()));
  }
  return idx;
}

}  // namespace detail

void TwoLevelParams::validate() const {
  require(std::isfinite(rabi) && rabi >= 0.0, ErrorKind::config, "rabi must be finite and >= 0");
  require(std::isfinite(gamma_hz) && gamma_hz > 0.0, ErrorKind::config, "gamma_hz must be > 0");
  require(std::isfinite(detuning), ErrorKind::config, "detuning must be finite");
}

double TwoLevelParams::ps_per_gamma() const { return 1e12 / (2.0 * std::numbers::pi * gamma_hz); }

SingleAtomModel::SingleAtomModel(const TwoLevelParams& p, double phase) : p_(p) {
  p.validate();
  using quantum::Matrix;
  sm_ = Matrix::Zero(2, 2);
  sm_(1, 0) = 1.0;  // |g><e|
  sp_ = sm_.adjoint();
  const std::complex<double> e_phase = std::polar(1.0, -phase);
  h_ = -p.detuning * sp_ * sm_ + 0.5 * p.rabi * (e_phase * sp_ + std::conj(e_phase) * sm_);
  const Matrix collapse[1] = {sm_};
  l_ = quantum::liouvillian(h_, collapse);
  rho_ = quantum::steady_state(l_, 2);
  pop_ = (sp_ * sm_ * rho_).trace().real();
  dipole_ = (sm_ * rho_).trace();
}

double SingleAtomModel::coherent_fraction() const noexcept {
  return pop_ > 0.0 ? std::norm(dipole_) / pop_ : 0.0;
}

std::vector<std::complex<double>> SingleAtomModel::g1(std::span<const std::int64_t> lags_ps) const {
  std::vector<std::complex<double>> out(lags_ps.size());
  if (pop_ <= 0.0) {
    std::fill(out.begin(), out.end(), std::complex<double>{kMissing, 0.0});
    return out;
  }
  quantum::Propagator prop(l_, p_.ps_per_gamma());
  const auto tr = quantum::trace_functional(sm_);
  prop.sweep({quantum::vec(rho_ * sp_)}, lags_ps, [&](std::size_t k, const std::vector<quantum::Vector>& s) {
    out[k] = (tr * s[0])(0) / pop_;
  });
  return out;
}

std::vector<double> SingleAtomModel::g2(std::span<const std::int64_t> lags_ps) const {
  std::vector<double> out(lags_ps.size());
  if (pop_ <= 0.0) {
    std::fill(out.begin(), out.end(), kMissing);
    return out;
  }
  quantum::Propagator prop(l_, p_.ps_per_gamma());
  const auto tr = quantum::trace_functional(sp_ * sm_);
  prop.sweep({quantum::vec(sm_ * rho_ * sp_)}, lags_ps, [&](std::size_t k, const std::vector<quantum::Vector>& s) {
    out[k] = (tr * s[0])(0).real() / (pop_ * pop_);
  });
  return out;
}

std::vector<double> SingleAtomModel::transient_population(std::span<const std::int64_t> times_ps) const {
  quantum::Matrix ground = quantum::Matrix::Zero(2, 2);
  ground(1, 1) = 1.0;
  quantum::Propagator prop(l_, p_.ps_per_gamma());
  const auto tr = quantum::trace_functional(sp_ * sm_);
  std::vector<double> out(times_ps.size());
  prop.sweep({quantum::vec(ground)}, times_ps, [&](std::size_t k, const std::vector<quantum::Vector>& s) {
    out[k] = (tr * s[0])(0).real();
  });
  return out;
}

std::vector<double> SingleAtomModel::inelastic_spectrum(std::span<const double> omega) const {
  // Inelastic source: rho sigma+ minus its stationary value <sigma+> rho.
  const quantum::Vector rho_v = quantum::vec(rho_);
  const quantum::Vector src = quantum::vec(rho_ * sp_) - (sp_ * rho_).trace() * rho_v;
  const quantum::RowVector one = quantum::trace_functional(quantum::Matrix::Identity(2, 2));
  const quantum::Matrix shifted = l_ - rho_v * one;
  const auto tr = quantum::trace_functional(sm_);
  const std::complex<double> i{0.0, 1.0};
  std::vector<double> out(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) {
    quantum::Matrix m = shifted;
    m.diagonal().array() += i * omega[k];
    const quantum::Vector y = m.partialPivLu().solve(src);
    out[k] = 2.0 * (-(tr * y)(0)).real();
  }
  return out;
}

BlochSteadyState bloch_steady_state(const TwoLevelParams& p) {
  const SingleAtomModel m(p);
  return {m.excited_pop(), m.dipole()};
}

std::vector<MomentTable> single_atom_moments(const SingleAtomModel& atom, std::span<const std::int64_t> lags_ps) {
  quantum::Propagator prop(atom.liouvillian(), atom.params().ps_per_gamma());
  return detail::regression_moments(prop, atom.steady_state(), atom.raising(), atom.raising(), atom.lowering(),
                                    atom.lowering(), lags_ps);
}

namespace {

CoherenceSeries make_series(SeriesKind kind, std::span<const std::int64_t> tau_ps) {
  CoherenceSeries s;
  s.kind = kind;
  s.tau_ps.assign(tau_ps.begin(), tau_ps.end());
  s.values.resize(tau_ps.size());
  s.sigma.assign(tau_ps.size(), 0.0);
  return s;
}

// Quadrature step dividing the bin, at most bin/subdivisions.
std::int64_t quadrature_step(std::int64_t bin_ps, int subdivisions) {
  require(bin_ps > 0 && subdivisions > 0, ErrorKind::config, "bin width and subdivisions must be positive");
  std::int64_t h = std::max<std::int64_t>(1, bin_ps / subdivisions);
  while (bin_ps % h != 0) ++h;
  return h;
}

// Triangular bin average of an even function tabulated at multiples of h.
CoherenceSeries triangular_average(SeriesKind kind, std::span<const std::int64_t> tau_ps, std::int64_t bin_ps,
                                   std::int64_t h, const std::vector<double>& fine) {
  const std::int64_t s = bin_ps / h;
  auto out = make_series(kind, tau_ps);
  for (std::size_t i = 0; i < tau_ps.size(); ++i) {
    require(tau_ps[i] % h == 0, ErrorKind::alignment, "lag grid not aligned to the quadrature step");
    double acc = 0.0;
    for (std::int64_t j = -s; j <= s; ++j) {
      const std::int64_t node = tau_ps[i] / h + j;
      const double w = static_cast<double>(s - (j < 0 ? -j : j)) / static_cast<double>(s * s);
      acc += w * fine[static_cast<std::size_t>(node < 0 ? -node : node)];
    }
    out.values[i] = {acc, 0.0};
  }
  return out;
}

std::vector<std::int64_t> fine_grid(std::span<const std::int64_t> tau_ps, std::int64_t bin_ps, std::int64_t h) {
  std::int64_t max_tau = 0;
  for (auto t : tau_ps) max_tau = std::max(max_tau, t < 0 ? -t : t);
  std::vector<std::int64_t> grid;
  for (std::int64_t t = 0; t <= max_tau + bin_ps; t += h) grid.push_back(t);
  return grid;
}

}  // namespace

CoherenceSeries single_atom_g1(const TwoLevelParams& p, std::span<const std::int64_t> tau_ps) {
  const SingleAtomModel m(p);
  const auto idx = detail::index_lags(tau_ps);
  const auto v = m.g1(idx.lags);
  auto out = make_series(SeriesKind::g1, tau_ps);
  for (std::size_t i = 0; i < tau_ps.size(); ++i) {
    const auto g = v[idx.position[i]];
    out.values[i] = tau_ps[i] < 0 ? std::conj(g) : g;
  }
  return out;
}

CoherenceSeries single_atom_g2(const TwoLevelParams& p, std::span<const std::int64_t> tau_ps) {
  const SingleAtomModel m(p);
  const auto idx = detail::index_lags(tau_ps);
  const auto v = m.g2(idx.lags);
  auto out = make_series(SeriesKind::g2, tau_ps);
  for (std::size_t i = 0; i < tau_ps.size(); ++i) out.values[i] = {v[idx.position[i]], 0.0};
  return out;
}

CoherenceSeries single_atom_g2_binned(const TwoLevelParams& p, std::span<const std::int64_t> tau_ps,
                                      std::int64_t bin_ps, int subdivisions) {
  const std::int64_t h = quadrature_step(bin_ps, subdivisions);
  const auto grid = fine_grid(tau_ps, bin_ps, h);
  const auto fine = SingleAtomModel(p).g2(grid);
  return triangular_average(SeriesKind::g2, tau_ps, bin_ps, h, fine);
}

CoherenceSeries single_atom_g1_binned(const TwoLevelParams& p, std::span<const std::int64_t> tau_ps,
                                      std::int64_t bin_ps, int subdivisions) {
  const std::int64_t h = quadrature_step(bin_ps, subdivisions);
  const auto grid = fine_grid(tau_ps, bin_ps, h);
  const auto g1 = SingleAtomModel(p).g1(grid);
  std::vector<double> fine(g1.size());
  for (std::size_t i = 0; i < g1.size(); ++i) fine[i] = std::norm(g1[i]);
  auto out = triangular_average(SeriesKind::g1, tau_ps, bin_ps, h, fine);
  for (auto& v : out.values) v = {std::sqrt(std::max(0.0, v.real())), 0.0};
  return out;
}

}  // namespace photocorr
