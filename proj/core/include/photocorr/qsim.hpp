#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "photocorr/cumulant.hpp"
#include "photocorr/liouville.hpp"
#include "photocorr/series.hpp"
#include "photocorr/tagstore.hpp"

namespace photocorr {

/// Driven two-level emitter. Rabi frequency and detuning are in units of the
/// natural linewidth Gamma; Gamma/2pi = gamma_hz.
struct TwoLevelParams {
  double rabi = 0.0;
  double gamma_hz = 6.0e6;
  double detuning = 0.0;

  void validate() const;
  /// Picoseconds per 1/Gamma.
  double ps_per_gamma() const;
};

struct BlochSteadyState {
  double excited_pop = 0.0;
  std::complex<double> dipole;  // <sigma->
};

BlochSteadyState bloch_steady_state(const TwoLevelParams& p);

/// Single-atom Liouvillian model in the frame rotating at the drive.
///
/// Basis order is (|e>, |g>). The drive phase `phase` multiplies sigma+ by
/// exp(-i phase) in the Hamiltonian.
class SingleAtomModel {
 public:
  explicit SingleAtomModel(const TwoLevelParams& p, double phase = 0.0);

  const TwoLevelParams& params() const noexcept { return p_; }
  const quantum::Matrix& hamiltonian() const noexcept { return h_; }
  const quantum::Matrix& liouvillian() const noexcept { return l_; }
  const quantum::Matrix& steady_state() const noexcept { return rho_; }
  const quantum::Matrix& lowering() const noexcept { return sm_; }
  const quantum::Matrix& raising() const noexcept { return sp_; }
  double excited_pop() const noexcept { return pop_; }
  std::complex<double> dipole() const noexcept { return dipole_; }
  /// |<sigma->|^2 / <sigma+ sigma->, the elastic fraction of the emission.
  double coherent_fraction() const noexcept;

  /// g1 and g2 at non-negative lags (ps), ascending.
  std::vector<std::complex<double>> g1(std::span<const std::int64_t> lags_ps) const;
  std::vector<double> g2(std::span<const std::int64_t> lags_ps) const;

  /// <sigma+ sigma-> at times after switching on the drive in |g>.
  std::vector<double> transient_population(std::span<const std::int64_t> times_ps) const;

  /// Incoherent fluorescence spectrum at detunings `omega` (units of Gamma)
  /// from the drive, from the resolvent of the generator. Not normalised.
  std::vector<double> inelastic_spectrum(std::span<const double> omega) const;

 private:
  TwoLevelParams p_;
  quantum::Matrix h_, l_, rho_, sm_, sp_;
  double pop_ = 0.0;
  std::complex<double> dipole_;
};

/// <sigma+(t) sigma-(t+tau)>/<sigma+ sigma-> on any lag grid; g1(-tau) = conj g1(tau).
CoherenceSeries single_atom_g1(const TwoLevelParams& p, std::span<const std::int64_t> tau_ps);

/// <sigma+(t) sigma+ sigma-(t+tau) sigma-(t)>/<sigma+ sigma->^2, even in tau.
CoherenceSeries single_atom_g2(const TwoLevelParams& p, std::span<const std::int64_t> tau_ps);

/// What a correlator with bins of width `bin_ps` reports: g2 averaged over
/// the triangular lag kernel of one bin. `subdivisions` sets the quadrature.
CoherenceSeries single_atom_g2_binned(const TwoLevelParams& p, std::span<const std::int64_t> tau_ps,
                                      std::int64_t bin_ps, int subdivisions = 64);

/// Binned counterpart of g1 for Siegert comparisons: the value at each lag
/// is sqrt of the triangular bin average of |g1|^2, so that 1 + value^2 is
/// the binned chaotic-light g2.
CoherenceSeries single_atom_g1_binned(const TwoLevelParams& p, std::span<const std::int64_t> tau_ps,
                                      std::int64_t bin_ps, int subdivisions = 64);

/// Atom positions and directions. Positions use the same length unit as the
/// wavelength (the default wavelength of 1 means positions in units of lambda).
struct EnsembleGeometry {
  std::vector<std::array<double, 3>> positions;
  std::array<double, 3> k_las_dir{1.0, 0.0, 0.0};
  std::array<double, 3> detect_dir{0.0, 0.0, 1.0};
  double wavelength = 1.0;

  void validate() const;
  double drive_phase(std::size_t atom) const;      // k_las . r_n
  double detection_phase(std::size_t atom) const;  // k u . r_n
};

enum class FewAtomMethod { full_liouvillian, factorized };

/// Correlators of the collective detection mode E+ = sum_n sigma-_n exp(-i k u.r_n).
///
/// `moments[i]` holds the ordered moments of (E-(t), E-(t+tau), E+(t+tau), E+(t))
/// at lag |tau_i| (see MomentTable). g1, g2, anomalous and connected are the
/// moments normalised by the intensity <E- E+> (its square for g2 and C).
/// Negative lags mirror the positive ones: g1 is conjugated, the rest are even.
struct FewAtomCorrelators {
  CoherenceSeries g1;
  CoherenceSeries g2;
  CoherenceSeries anomalous;  // <E-(t) E-(t+tau)>/<I>
  CoherenceSeries connected;  // <ABCD>_c/<I>^2
  double intensity = 0.0;
  double mean_field = 0.0;    // |<E->|^2/<I>
  std::vector<MomentTable> moments;
};

inline constexpr std::size_t kMaxOracleAtoms = 4;

/// Exact correlators for N <= 4 independent, individually driven atoms.
FewAtomCorrelators fewatom_collective_correlators(const TwoLevelParams& p, const EnsembleGeometry& g,
                                                  std::span<const std::int64_t> tau_ps,
                                                  FewAtomMethod method = FewAtomMethod::full_liouvillian);

/// Ordered single-atom moments of (sigma+(t), sigma+(t+tau), sigma-(t+tau), sigma-(t))
/// at the given non-negative lags; the building block of the factorised route.
std::vector<MomentTable> single_atom_moments(const SingleAtomModel& atom,
                                             std::span<const std::int64_t> lags_ps);

struct McwfOptions {
  double dt_gamma = 0.0;  // integration step in 1/Gamma; 0 picks min(0.01, 0.01/rabi)
  unsigned workers = 1;
};

/// Quantum-jump photon stream of one atom switched on in |g> at each shot start.
/// Each emission is detected with probability `efficiency`, then routed to
/// channel 1 or 2 with equal probability; a channel ignores clicks within
/// `dead_time_ps` of its previous click.
TagStream mcwf_photon_stream(const TwoLevelParams& p, std::uint64_t duration_ps, std::size_t shots,
                             std::uint64_t seed, double efficiency = 1.0, std::uint64_t dead_time_ps = 0,
                             const McwfOptions& options = {});

/// Sampled classical field amplitude; shots are stored back to back.
struct FieldTrace {
  std::uint64_t dt_ps = 0;
  std::size_t samples_per_shot = 0;
  std::vector<std::complex<double>> samples;
  double mean_intensity = 0.0;

  std::size_t shots() const noexcept { return samples_per_shot ? samples.size() / samples_per_shot : 0; }
  std::span<const std::complex<double>> shot(std::size_t i) const noexcept {
    return {samples.data() + i * samples_per_shot, samples_per_shot};
  }
  void update_mean_intensity();
  void validate() const;
};

/// Stationary Gaussian field of N independent emitters, one unit of intensity
/// per emitter, with autocorrelation N g1(tau) of the single atom.
///
/// The fluctuating part is drawn by circulant-embedding spectral synthesis;
/// the elastic part is a constant per shot with a random complex Gaussian
/// amplitude of variance N times the coherent fraction.
class ChaoticSynthesizer {
 public:
  ChaoticSynthesizer(const TwoLevelParams& p, double n_emitters, std::size_t samples, std::uint64_t dt_ps);
  ~ChaoticSynthesizer();
  ChaoticSynthesizer(const ChaoticSynthesizer&) = delete;
  ChaoticSynthesizer& operator=(const ChaoticSynthesizer&) = delete;

  std::size_t samples() const noexcept { return samples_; }
  std::size_t fft_size() const noexcept { return m_; }

  /// Fills `out` (size samples()) with shot `shot` of a run seeded by `seed`.
  void draw(std::uint64_t seed, std::uint64_t shot, std::span<std::complex<double>> out);

 private:
  struct Plan;
  std::size_t samples_;
  std::size_t m_;
  double elastic_sigma_;
  std::vector<double> amplitude_;  // sqrt(eigenvalue / M)
  Plan* plan_;
};

/// Largest sample spacing chaotic_field accepts: 0.05/max(rabi, 1) in 1/Gamma.
double max_field_dt_ps(const TwoLevelParams& p);

FieldTrace chaotic_field(const TwoLevelParams& p, double n_emitters, std::uint64_t duration_ps,
                         std::uint64_t dt_ps, std::uint64_t seed, std::size_t shots = 1);

/// Adds a constant amplitude to every sample.
FieldTrace coherent_admixture(FieldTrace f, std::complex<double> amplitude);

/// Amplitude whose intensity is the fraction f of the total when added to a
/// zero-mean field of mean intensity `incoherent_intensity`.
double coherent_amplitude_for_fraction(double fraction, double incoherent_intensity);

/// Doubly stochastic Poisson photons with rate efficiency * rate_per_ns * |E|^2,
/// each routed to channel 1 or 2 with equal probability. The trace is cut
/// into `shots` equal shots. Throws Error(accuracy) if the mean count per
/// sample exceeds 0.1.
TagStream sample_photons(const FieldTrace& f, double mean_rate_per_ns, std::size_t shots, std::uint64_t seed,
                         double efficiency = 1.0);

/// chaotic_field + coherent_admixture + sample_photons shot by shot without
/// holding the whole field. Produces the same stream as the composed calls
/// with field seed `seed` and photon seed photon_seed(seed).
struct FieldStreamConfig {
  TwoLevelParams params;
  double n_emitters = 1.0;
  std::complex<double> coherent_amplitude{0.0, 0.0};
  std::uint64_t duration_ps = 400'000;
  std::uint64_t dt_ps = 0;  // 0 picks the largest allowed step, rounded down to whole ps
  std::size_t shots = 1;
  std::uint64_t seed = 1;
  double rate_per_ns = 0.01;
  double efficiency = 1.0;
  unsigned workers = 1;
};

std::uint64_t photon_seed(std::uint64_t seed) noexcept;
std::uint64_t resolve_field_dt(const FieldStreamConfig& c);
TagStream simulate_field_stream(const FieldStreamConfig& c);

/// Removes cross-channel pairs closer than tau_c: scanning pairs in time
/// order, while both members survive one of them (chosen evenly) is deleted
/// with probability delete_prob.
TagStream nongaussian_fixture(const TagStream& s, double delete_prob, std::uint64_t tau_c_ps, std::uint64_t seed);

}  // namespace photocorr
