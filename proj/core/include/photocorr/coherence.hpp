#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "photocorr/cumulant.hpp"
#include "photocorr/series.hpp"

namespace photocorr {

/// g2 = 1 + |g1|^2, pointwise, with sigma_g2 = 2|g1| sigma_g1.
CoherenceSeries siegert_prediction(const CoherenceSeries& g1);

/// Second-order ingredients of the Gaussian (Wick) expansion of g2.
///
/// `g1` is <E-(t) E+(t+tau)>/<I>, `anomalous` is <E-(t) E-(t+tau)>/<I> on the
/// same grid, and `mean_field_ratio` is |<E->|^2/<I>. The anomalous term
/// oscillates at optical frequencies in practice and defaults to zero.
struct GaussianDecomposition {
  CoherenceSeries g1;
  std::vector<std::complex<double>> anomalous;  // empty means identically zero
  double mean_field_ratio = 0.0;

  std::complex<double> anomalous_at(std::size_t i) const noexcept {
    return anomalous.empty() ? std::complex<double>{} : anomalous[i];
  }
  void validate() const;
};

struct GaussianG2 {
  // 1 + |g1|^2 - 2 (mean field ratio)^2 + |anomalous|^2, the full Wick form.
  CoherenceSeries with_mean_field;
  // 1 + |g1|^2 + |anomalous|^2, the zero-mean form used for C(tau).
  CoherenceSeries zero_mean;
};

/// Evaluates the Gaussian-statistics prediction for g2.
///
/// The factorisation of two-time correlators assumed here is exact at tau = 0
/// and an approximation for tau != 0 in interacting systems.
GaussianG2 gaussian_g2(const GaussianDecomposition& d);

struct ConnectedCorrelation {
  CoherenceSeries connected;  // C(tau) = g2 - g2_gauss
  CoherenceSeries bound;      // 1 + |g1|^2 - g2, a lower bound on |C| when the anomalous term is dropped
  CoherenceSeries g2_gauss;   // zero-mean Gaussian prediction
};

/// C(tau) and its data-only lower bound. Throws Error(bias) when the
/// decomposition's mean-field ratio exceeds `mean_field_threshold`, since the
/// zero-mean expansion would then be biased.
ConnectedCorrelation connected_correlation(const CoherenceSeries& g2, const GaussianDecomposition& d,
                                           double mean_field_threshold = 0.05);

/// f(tau) = g2 / g2_gauss; NaN where g2_gauss vanishes.
CoherenceSeries pair_fraction(const CoherenceSeries& g2, const CoherenceSeries& g2_gauss);

/// max over tau of |C - g2_gauss (f - 1)|; zero up to rounding for consistent inputs.
double pair_fraction_identity_residual(const CoherenceSeries& connected,
                                       const CoherenceSeries& g2_gauss, const CoherenceSeries& f);

/// Sample fourth-order joint cumulant of (A, B, C, D), including third-order
/// terms weighted by the means. Needs at least two samples.
std::complex<double> fourth_cumulant(std::span<const Sample4> samples);

struct CumulantEstimate {
  std::complex<double> value;
  double sigma = 0.0;  // delete-one-block jackknife error of the complex value
};

CumulantEstimate fourth_cumulant_with_error(std::span<const Sample4> samples,
                                            std::size_t jackknife_blocks = 64);

struct TailBound {
  double bound = 0.0;  // mean + sigma
  double mean = 0.0;
  double sigma = 0.0;
  std::size_t points = 0;
};

/// Upper bound on |<E->|^2/<I> from the long-lag plateau of |g1|, using lags >= tail_start.
TailBound mean_field_from_g1_tail(const CoherenceSeries& g1, std::int64_t tail_start_ps);

/// 10/Gamma in ps for a linewidth Gamma/2pi = gamma_hz.
std::int64_t default_tail_start_ps(double gamma_hz = 6.0e6);

struct ScalingPoint {
  double atoms = 0.0;
  double intensity = 0.0;
};

struct ScalingFit {
  std::vector<ScalingPoint> points;
  double exponent = 0.0;        // slope of log I vs log N
  double exponent_sigma = 0.0;
  double prefactor = 0.0;       // I = prefactor * N^exponent
  double linear = 0.0;          // a in I = a N + b N^2
  double quadratic = 0.0;       // b
  double quadratic_sigma = 0.0;
  double coherent_bound = 0.0;  // upper bound on |<E->|^2/<I> at the largest N

  double power_law(double n) const;
  double two_term(double n) const { return linear * n + quadratic * n * n; }
};

/// Power-law fit plus the two-term bound on a coherent (N^2) contribution.
///
/// The quadratic coefficient is taken at its `confidence_sigmas` upper limit
/// from a relative-error weighted least-squares fit; the bound is
/// b N^2 / (a N + b N^2) at the largest N, clamped to [0, 1].
ScalingFit intensity_scaling_fit(std::span<const ScalingPoint> points, double confidence_sigmas = 2.0);

/// Largest reduction of g2 the mean-field term can cause: 2 r^2 for r = |<E->|^2/<I>.
inline double max_g2_bias(double mean_field_ratio) { return 2.0 * mean_field_ratio * mean_field_ratio; }

/// (tau_ps, g2, siegert, g2_gauss, C, C_stderr, bound)
void write_connected_csv(const CoherenceSeries& g2, const CoherenceSeries& siegert,
                         const ConnectedCorrelation& c, const std::filesystem::path& path);

/// (N, intensity, fit, residual); the fit column is the power law.
void write_scaling_csv(const ScalingFit& fit, const std::filesystem::path& path);

}  // namespace photocorr
