#include <cmath>
#include <numbers>
#include <string>

#include "photocorr/error.hpp"
#include "photocorr/qsim.hpp"
#include "regression.hpp"

namespace photocorr {

namespace {

double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

quantum::Matrix embed(const quantum::Matrix& op, std::size_t atom, std::size_t atoms) {
  quantum::Matrix out = quantum::Matrix::Identity(1, 1);
  for (std::size_t n = 0; n < atoms; ++n)
    out = quantum::kron(out, n == atom ? op : quantum::Matrix::Identity(2, 2));
  return out;
}

std::vector<MomentTable> full_route(const TwoLevelParams& p, const EnsembleGeometry& g,
                                    std::span<const std::int64_t> lags) {
  const std::size_t n_atoms = g.positions.size();
  const auto dim = static_cast<Eigen::Index>(1) << n_atoms;
  quantum::Matrix h = quantum::Matrix::Zero(dim, dim);
  quantum::Matrix e_plus = quantum::Matrix::Zero(dim, dim);
  std::vector<quantum::Matrix> collapse;
  for (std::size_t n = 0; n < n_atoms; ++n) {
    const SingleAtomModel atom(p, g.drive_phase(n));
    h += embed(atom.hamiltonian(), n, n_atoms);
    const quantum::Matrix sm_n = embed(atom.lowering(), n, n_atoms);
    collapse.push_back(sm_n);
    e_plus += std::polar(1.0, -g.detection_phase(n)) * sm_n;
  }
  const quantum::Matrix l = quantum::liouvillian(h, collapse);
  const quantum::Matrix rho = quantum::steady_state(l, dim);
  const quantum::Matrix e_minus = e_plus.adjoint();
  quantum::Propagator prop(l, p.ps_per_gamma());
  return detail::regression_moments(prop, rho, e_minus, e_minus, e_plus, e_plus, lags);
}

std::vector<MomentTable> factorized_route(const TwoLevelParams& p, const EnsembleGeometry& g,
                                          std::span<const std::int64_t> lags) {
  const std::size_t n_atoms = g.positions.size();
  std::vector<std::vector<MomentTable>> per_atom;
  std::vector<std::complex<double>> coef_minus, coef_plus;
  for (std::size_t n = 0; n < n_atoms; ++n) {
    per_atom.push_back(single_atom_moments(SingleAtomModel(p, g.drive_phase(n)), lags));
    coef_plus.push_back(std::polar(1.0, -g.detection_phase(n)));
    coef_minus.push_back(std::conj(coef_plus.back()));
  }
  std::vector<MomentTable> out(lags.size());
  for (std::size_t k = 0; k < lags.size(); ++k) {
    for (unsigned mask = 0; mask < 16; ++mask) {
      unsigned factors[4];
      int nf = 0;
      for (unsigned bit = 1; bit < 16; bit <<= 1)
        if (mask & bit) factors[nf++] = bit;
      // Every assignment of the chosen factors to atoms; distinct atoms
      // commute and are uncorrelated, so the moment factorises per atom.
      std::size_t assignments = 1;
      for (int f = 0; f < nf; ++f) assignments *= n_atoms;
      std::complex<double> total{};
      for (std::size_t a = 0; a < assignments; ++a) {
        unsigned sub[kMaxOracleAtoms] = {};
        std::complex<double> term{1.0, 0.0};
        std::size_t code = a;
        for (int f = 0; f < nf; ++f) {
          const std::size_t atom = code % n_atoms;
          code /= n_atoms;
          sub[atom] |= factors[f];
          term *= (factors[f] & (kA | kB)) ? coef_minus[atom] : coef_plus[atom];
        }
        for (std::size_t n = 0; n < n_atoms; ++n) term *= per_atom[n][k][sub[n]];
        total += term;
      }
      out[k][mask] = total;
    }
  }
  return out;
}

}  // namespace

void EnsembleGeometry::validate() const {
  const auto unit = [](const std::array<double, 3>& v, const char* name) {
    require(std::abs(std::sqrt(dot(v, v)) - 1.0) <= 1e-12, ErrorKind::config,
            std::string(name) + " must be a unit vector");
  };
  unit(k_las_dir, "k_las_dir");
  unit(detect_dir, "detect_dir");
  require(std::isfinite(wavelength) && wavelength > 0.0, ErrorKind::config, "wavelength must be > 0");
  for (const auto& r : positions)
    require(std::isfinite(r[0]) && std::isfinite(r[1]) && std::isfinite(r[2]), ErrorKind::config,
            "atom positions must be finite");
}

double EnsembleGeometry::drive_phase(std::size_t atom) const {
  return 2.0 * std::numbers::pi / wavelength * dot(k_las_dir, positions[atom]);
}

double EnsembleGeometry::detection_phase(std::size_t atom) const {
  return 2.0 * std::numbers::pi / wavelength * dot(detect_dir, positions[atom]);
}

FewAtomCorrelators fewatom_collective_correlators(const TwoLevelParams& p, const EnsembleGeometry& g,
                                                  std::span<const std::int64_t> tau_ps, FewAtomMethod method) {
  p.validate();
  g.validate();
  require(!g.positions.empty(), ErrorKind::domain, "at least one atom is required");
  require(g.positions.size() <= kMaxOracleAtoms, ErrorKind::size,
          "few-atom oracle supports at most " + std::to_string(kMaxOracleAtoms) + " atoms (Liouville dimension 4^N)");
  const auto idx = detail::index_lags(tau_ps);
  const auto tables =
      method == FewAtomMethod::full_liouvillian ? full_route(p, g, idx.lags) : factorized_route(p, g, idx.lags);

  FewAtomCorrelators out;
  const double intensity = tables.empty() ? 0.0 : tables.front()[kA | kD].real();
  require(intensity > 0.0, ErrorKind::domain, "collective mode carries no intensity (undriven atoms)");
  out.intensity = intensity;
  out.mean_field = tables.empty() ? 0.0 : std::norm(tables.front()[kA]) / intensity;

  auto init = [&](CoherenceSeries& s, SeriesKind kind) {
    s.kind = kind;
    s.tau_ps.assign(tau_ps.begin(), tau_ps.end());
    s.values.resize(tau_ps.size());
    s.sigma.assign(tau_ps.size(), 0.0);
  };
  init(out.g1, SeriesKind::g1);
  init(out.g2, SeriesKind::g2);
  init(out.anomalous, SeriesKind::g1);
  init(out.connected, SeriesKind::connected);
  out.moments.reserve(tau_ps.size());
  const double i2 = intensity * intensity;
  for (std::size_t i = 0; i < tau_ps.size(); ++i) {
    const MomentTable& m = tables[idx.position[i]];
    out.moments.push_back(m);
    const auto g1 = m[kA | kC] / intensity;
    out.g1.values[i] = tau_ps[i] < 0 ? std::conj(g1) : g1;
    out.g2.values[i] = m[kA | kB | kC | kD] / i2;
    out.anomalous.values[i] = m[kA | kB] / intensity;
    out.connected.values[i] = kubo_decomposition(m).connected / i2;
  }
  return out;
}

}  // namespace photocorr
