#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "photocorr/qsim.hpp"
#include "photocorr/series.hpp"
#include "photocorr/tagstore.hpp"

namespace photocorr {

/// Local oscillator detuned by omega_lo_hz from the scattered light, and the
/// mean intensities of both beams in the same (arbitrary) unit.
struct HeterodyneConfig {
  double omega_lo_hz = 110e6;  // omega_LO / 2pi
  double i_lo = 1.0;
  double i_sc = 0.1;

  void validate() const;
};

struct AlphaBeta {
  double alpha = 0.0;  // I_sc^2 / (I_sc + I_lo)^2
  double beta = 0.0;   // 2 I_sc I_lo / (I_sc + I_lo)^2
};

AlphaBeta alpha_beta(const HeterodyneConfig& c);

/// g2_HD(tau) = 1 + alpha (g2 - 1) - beta cos(omega_LO tau) Re g1 on the
/// common grid of g1 and g2. Throws Error(accuracy) when the grid step
/// exceeds pi/omega_LO.
CoherenceSeries g2_hd_model(const CoherenceSeries& g1, const CoherenceSeries& g2, const HeterodyneConfig& c);

struct DemodOptions {
  double cutoff_hz = 0.0;           // low-pass cutoff; 0 means omega_LO/2 (over 2pi)
  double kernel_cutoff_periods = 2;  // filter half-length in periods of the cutoff
  double atomic_bandwidth_hz = 0.0;  // if set, checked against the cutoff
  std::int64_t bin_width_ps = 0;     // if set, undo the bin-averaging loss at omega_LO
};

/// Lock-in extraction of Re g1 from a symmetric, uniformly sampled g2_HD(tau):
/// subtract 1, mix with cos(omega_LO tau), low-pass with a Blackman-windowed
/// sinc and divide by -beta/2. The grid is treated as one period of an even
/// periodic signal, so no points are lost at the edges.
CoherenceSeries demodulate_g1(const CoherenceSeries& g2_hd, const HeterodyneConfig& c, const DemodOptions& o = {});

enum class SpectralWindow { tukey, hann, rectangular };

struct SpectrumOptions {
  double band_half_width_hz = 0.0;  // 0 means omega_LO/2 (over 2pi)
  double step_hz = 0.0;             // 0 means a quarter of the resolution 1/(n dtau)
  SpectralWindow window = SpectralWindow::tukey;
  double tukey_alpha = 0.3;
};

/// S at angular detunings from the drive, normalised so that S(0) = 1.
struct SpectrumSeries {
  std::vector<double> omega_rad_per_s;
  std::vector<double> values;
  double resolution_rad_per_s = 0.0;  // 2pi/(n dtau) for measured spectra, 0 for references
};

/// Window weights used for the spectrum estimate on an n-point grid.
std::vector<double> spectral_window(std::size_t n, const SpectrumOptions& o);

/// Windowed Fourier transform of g2_HD - 1 in the band omega_LO +- half width,
/// shifted to baseband and normalised to S(0) = 1.
SpectrumSeries spectrum_from_hd(const CoherenceSeries& g2_hd, const HeterodyneConfig& c,
                                const SpectrumOptions& o = {});

/// Sum of |X_k|^2 / n over the DFT bins of the windowed g2_HD - 1 that fall in
/// the band; by Parseval this is beta^2/4 sum |w g1|^2 when the band holds the
/// whole beat component.
double hd_band_power(const CoherenceSeries& g2_hd, const HeterodyneConfig& c, const SpectrumOptions& o = {});

/// Indices of local maxima of a spectrum.
std::vector<std::size_t> spectrum_peaks(const SpectrumSeries& s);

/// Single-atom resonance fluorescence spectrum (incoherent part) at angular
/// detunings from the drive, normalised so that S(0) = 1. Throws
/// Error(domain) for an undriven atom, whose emission is purely elastic.
SpectrumSeries mollow_reference(const TwoLevelParams& p, std::span<const double> omega_rad_per_s);

/// Two-port beat stream of the chaotic (plus coherent) field against the local
/// oscillator. Channel 1 sees |L + E|^2/2 and channel 2 |L - E|^2/2, with the
/// LO phase random per shot and its intensity set by i_lo/i_sc relative to
/// the field's expected intensity.
struct BeatStreamConfig {
  FieldStreamConfig field;
  HeterodyneConfig het;
};

TagStream simulate_beat_stream(const BeatStreamConfig& c);

/// (tau_ps, g2_hd)
void write_g2_hd_csv(const CoherenceSeries& g2_hd, const std::filesystem::path& path);
/// (tau_ps, g1_recovered, stderr)
void write_g1_csv(const CoherenceSeries& g1, const std::filesystem::path& path);
/// (omega_rad_per_s, S_normalized)
void write_spectrum_csv(const SpectrumSeries& s, const std::filesystem::path& path);

}  // namespace photocorr
