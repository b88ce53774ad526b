#include "photocorr/heterodyne.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "photocorr/csv.hpp"
#include "photocorr/error.hpp"
#include "photocorr/parallel.hpp"
#include "sampling.hpp"

namespace photocorr {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform_step_seconds(const CoherenceSeries& s, const char* what) {
  s.validate();
  const std::int64_t step = s.uniform_step();
  require(step > 0 && s.size() >= 3, ErrorKind::alignment, std::string(what) + " needs a uniform lag grid");
  return static_cast<double>(step) * 1e-12;
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

}  // namespace

void HeterodyneConfig::validate() const {
  require(std::isfinite(omega_lo_hz) && omega_lo_hz > 0.0, ErrorKind::config, "omega_lo_hz must be > 0");
  require(std::isfinite(i_lo) && i_lo >= 0.0 && std::isfinite(i_sc) && i_sc >= 0.0, ErrorKind::config,
          "LO and scattered intensities must be >= 0");
}

AlphaBeta alpha_beta(const HeterodyneConfig& c) {
  c.validate();
  const double total = c.i_lo + c.i_sc;
  require(total > 0.0, ErrorKind::domain, "LO and scattered intensities are both zero");
  return {c.i_sc * c.i_sc / (total * total), 2.0 * c.i_sc * c.i_lo / (total * total)};
}

CoherenceSeries g2_hd_model(const CoherenceSeries& g1, const CoherenceSeries& g2, const HeterodyneConfig& c) {
  require(same_grid(g1, g2), ErrorKind::alignment, "g1 and g2 must share a lag grid");
  const auto ab = alpha_beta(c);
  const double step = uniform_step_seconds(g1, "heterodyne model");
  const double omega = 2.0 * kPi * c.omega_lo_hz;
  require(step <= kPi / omega, ErrorKind::accuracy,
          "aliasing: lag step exceeds pi/omega_LO (" + format_number(kPi / omega * 1e12) + " ps)");
  CoherenceSeries out;
  out.kind = SeriesKind::g2;
  out.tau_ps = g1.tau_ps;
  out.values.resize(g1.size());
  out.sigma.assign(g1.size(), 0.0);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    const double tau = static_cast<double>(g1.tau_ps[i]) * 1e-12;
    out.values[i] = {1.0 + ab.alpha * (g2.real(i) - 1.0) - ab.beta * std::cos(omega * tau) * g1.real(i), 0.0};
  }
  return out;
}

CoherenceSeries demodulate_g1(const CoherenceSeries& g2_hd, const HeterodyneConfig& c, const DemodOptions& o) {
  const auto ab = alpha_beta(c);
  require(ab.beta > 0.0, ErrorKind::no_signal, "beta = 0: the record carries no beat note to demodulate");
  const double step = uniform_step_seconds(g2_hd, "demodulation");
  const double f_lo = c.omega_lo_hz;
  const double fc = o.cutoff_hz > 0.0 ? o.cutoff_hz : 0.5 * f_lo;
  const double bw = o.atomic_bandwidth_hz;
  require(fc < f_lo, ErrorKind::separability, "low-pass cutoff must lie below omega_LO");
  require(bw <= 0.0 || (bw < fc && f_lo - bw > fc), ErrorKind::separability,
          "no cutoff separates the atomic band (" + format_number(bw) + " Hz) from omega_LO (" +
              format_number(f_lo) + " Hz)");
  const double fs = 1.0 / step;
  require(f_lo + fc < 0.5 * fs, ErrorKind::separability,
          "lag step too coarse: the beat note and its image alias into the pass band");
  for (std::size_t i = 0; i < g2_hd.size(); ++i)
    require(std::isfinite(g2_hd.real(i)), ErrorKind::domain, "g2_HD has missing points; demodulation needs all lags");

  // One period of the even periodic continuation: drop the duplicate end point.
  const std::size_t n = g2_hd.size() - 1;
  const double omega = 2.0 * kPi * f_lo;
  std::vector<double> x(n), var(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double cj = std::cos(omega * static_cast<double>(g2_hd.tau_ps[j]) * 1e-12);
    x[j] = (g2_hd.real(j) - 1.0) * cj;
    var[j] = is_missing(g2_hd.sigma[j]) ? kMissing : g2_hd.sigma[j] * g2_hd.sigma[j] * cj * cj;
  }
  const auto half = static_cast<std::ptrdiff_t>(
      std::min<double>(std::round(o.kernel_cutoff_periods / fc / step), static_cast<double>(n / 2 - 1)));
  std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (std::ptrdiff_t k = -half; k <= half; ++k) {
    // Blackman window over 2*half+3 points with the zero end points dropped.
    const double u = static_cast<double>(k + half + 1) / static_cast<double>(2 * half + 2);
    const double w = 0.42 - 0.5 * std::cos(2.0 * kPi * u) + 0.08 * std::cos(4.0 * kPi * u);
    const double v = 2.0 * fc * step * sinc(2.0 * fc * step * static_cast<double>(k)) * w;
    h[static_cast<std::size_t>(k + half)] = v;
    sum += v;
  }
  for (auto& v : h) v /= sum;

  double gain = -0.5 * ab.beta;
  if (o.bin_width_ps > 0) {
    const double s = sinc(f_lo * static_cast<double>(o.bin_width_ps) * 1e-12);
    gain *= s * s;
  }
  CoherenceSeries out;
  out.kind = SeriesKind::g1;
  out.tau_ps = g2_hd.tau_ps;
  out.values.resize(n + 1);
  out.sigma.resize(n + 1);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t j = 0; j < sn; ++j) {
    double acc = 0.0;
    double acc_var = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
      const auto idx = static_cast<std::size_t>(((j - k) % sn + sn) % sn);
      const double hk = h[static_cast<std::size_t>(k + half)];
      acc += hk * x[idx];
      acc_var += hk * hk * var[idx];
    }
    out.values[static_cast<std::size_t>(j)] = {acc / gain, 0.0};
    out.sigma[static_cast<std::size_t>(j)] = std::sqrt(acc_var) / std::abs(gain);
  }
  out.values[n] = out.values[0];
  out.sigma[n] = out.sigma[0];
  return out;
}

std::vector<double> spectral_window(std::size_t n, const SpectrumOptions& o) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(n - 1);
    switch (o.window) {
      case SpectralWindow::rectangular:
        break;
      case SpectralWindow::hann:
        w[j] = 0.5 * (1.0 - std::cos(2.0 * kPi * x));
        break;
      case SpectralWindow::tukey: {
        const double a = std::clamp(o.tukey_alpha, 0.0, 1.0);
        const double edge = std::min(x, 1.0 - x);
        if (a > 0.0 && edge < 0.5 * a) w[j] = 0.5 * (1.0 - std::cos(2.0 * kPi * edge / a));
        break;
      }
    }
  }
  return w;
}

namespace {

struct BandSetup {
  double step = 0.0;
  double band = 0.0;
  std::vector<double> weighted;  // w (g2_HD - 1)
  std::vector<double> tau;       // seconds
};

BandSetup band_setup(const CoherenceSeries& g2_hd, const HeterodyneConfig& c, const SpectrumOptions& o) {
  c.validate();
  BandSetup b;
  b.step = uniform_step_seconds(g2_hd, "spectrum");
  b.band = o.band_half_width_hz > 0.0 ? o.band_half_width_hz : 0.5 * c.omega_lo_hz;
  require(b.band < c.omega_lo_hz, ErrorKind::separability,
          "spectral band of half width " + format_number(b.band) + " Hz around omega_LO overlaps DC");
  require(c.omega_lo_hz + b.band < 0.5 / b.step, ErrorKind::separability,
          "lag step too coarse for the band around omega_LO");
  const auto w = spectral_window(g2_hd.size(), o);
  b.weighted.resize(g2_hd.size());
  b.tau.resize(g2_hd.size());
  for (std::size_t j = 0; j < g2_hd.size(); ++j) {
    require(std::isfinite(g2_hd.real(j)), ErrorKind::domain, "g2_HD has missing points");
    b.weighted[j] = w[j] * (g2_hd.real(j) - 1.0);
    b.tau[j] = static_cast<double>(g2_hd.tau_ps[j]) * 1e-12;
  }
  return b;
}

std::complex<double> transform(const BandSetup& b, double f) {
  std::complex<double> acc{};
  for (std::size_t j = 0; j < b.tau.size(); ++j) acc += b.weighted[j] * std::polar(1.0, -2.0 * kPi * f * b.tau[j]);
  return acc;
}

}  // namespace

SpectrumSeries spectrum_from_hd(const CoherenceSeries& g2_hd, const HeterodyneConfig& c, const SpectrumOptions& o) {
  const auto b = band_setup(g2_hd, c, o);
  const double resolution = 1.0 / (static_cast<double>(g2_hd.size()) * b.step);
  const double df = o.step_hz > 0.0 ? o.step_hz : 0.25 * resolution;
  const auto k_max = static_cast<std::ptrdiff_t>(std::floor(b.band / df));
  const double centre = transform(b, c.omega_lo_hz).real();
  require(centre != 0.0 && std::isfinite(centre), ErrorKind::no_signal, "no spectral weight at omega_LO");
  SpectrumSeries s;
  s.resolution_rad_per_s = 2.0 * kPi * resolution;
  for (std::ptrdiff_t k = -k_max; k <= k_max; ++k) {
    const double delta = static_cast<double>(k) * df;
    s.omega_rad_per_s.push_back(2.0 * kPi * delta);
    s.values.push_back(k == 0 ? 1.0 : transform(b, c.omega_lo_hz + delta).real() / centre);
  }
  return s;
}

double hd_band_power(const CoherenceSeries& g2_hd, const HeterodyneConfig& c, const SpectrumOptions& o) {
  const auto b = band_setup(g2_hd, c, o);
  const auto n = static_cast<double>(g2_hd.size());
  const double df = 1.0 / (n * b.step);
  const auto k_lo = static_cast<std::ptrdiff_t>(std::ceil((c.omega_lo_hz - b.band) / df));
  const auto k_hi = static_cast<std::ptrdiff_t>(std::floor((c.omega_lo_hz + b.band) / df));
  double power = 0.0;
  for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) power += std::norm(transform(b, static_cast<double>(k) * df));
  return power / n;
}

std::vector<std::size_t> spectrum_peaks(const SpectrumSeries& s) {
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < s.values.size(); ++i)
    if (s.values[i] > s.values[i - 1] && s.values[i] >= s.values[i + 1]) peaks.push_back(i);
  return peaks;
}

SpectrumSeries mollow_reference(const TwoLevelParams& p, std::span<const double> omega_rad_per_s) {
  p.validate();
  require(p.rabi > 0.0, ErrorKind::domain, "undriven atom: no inelastic spectrum to reference");
  const SingleAtomModel atom(p);
  const double to_gamma = 1.0 / (2.0 * kPi * p.gamma_hz);
  std::vector<double> omega(omega_rad_per_s.size() + 1, 0.0);
  for (std::size_t i = 0; i < omega_rad_per_s.size(); ++i) omega[i + 1] = omega_rad_per_s[i] * to_gamma;
  const auto s = atom.inelastic_spectrum(omega);
  SpectrumSeries out;
  out.omega_rad_per_s.assign(omega_rad_per_s.begin(), omega_rad_per_s.end());
  out.values.resize(omega_rad_per_s.size());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = omega_rad_per_s[i] == 0.0 ? 1.0 : s[i + 1] / s[0];
  return out;
}

TagStream simulate_beat_stream(const BeatStreamConfig& c) {
  const auto& f = c.field;
  c.het.validate();
  require(c.het.i_sc > 0.0, ErrorKind::no_signal, "i_sc = 0: nothing to beat against the LO");
  const std::uint64_t dt_ps = resolve_field_dt(f);
  require(f.duration_ps > 0 && f.duration_ps % dt_ps == 0, ErrorKind::config,
          "field duration must be a positive multiple of the sample step");
  require(f.shots > 0, ErrorKind::config, "at least one shot is required");
  require(f.efficiency > 0.0 && f.efficiency <= 1.0, ErrorKind::config, "efficiency must be in (0, 1]");
  const double dt_s = static_cast<double>(dt_ps) * 1e-12;
  require(dt_s * c.het.omega_lo_hz <= 0.05, ErrorKind::accuracy,
          "field step does not resolve the beat note (needs <= 1/20 of an LO period)");
  const double field_intensity = f.n_emitters + std::norm(f.coherent_amplitude);
  const double lo = std::sqrt(c.het.i_lo / c.het.i_sc * field_intensity);
  const double scale = f.efficiency * f.rate_per_ns * static_cast<double>(dt_ps) * 1e-3;
  require(scale * 0.5 * (lo * lo + field_intensity) <= 0.1, ErrorKind::accuracy,
          "aliasing: too many expected photons per field sample (limit 0.1); lower the rate");
  const std::size_t n = f.duration_ps / dt_ps;
  const double omega = 2.0 * kPi * c.het.omega_lo_hz;
  const std::uint64_t pseed = photon_seed(f.seed);

  StreamHeader header;
  header.shot_duration_ps = f.duration_ps;
  header.bin_width_ps = std::gcd<std::uint64_t>(f.duration_ps, 1000);
  TagStream stream(header);
  std::vector<std::vector<TagRecord>> per_shot(f.shots);
  parallel_chunks(f.shots, f.workers, [&](unsigned, std::size_t begin, std::size_t end) {
    ChaoticSynthesizer synth(f.params, f.n_emitters, n, dt_ps);
    std::vector<std::complex<double>> field(n);
    std::vector<double> mu1(n), mu2(n), t1, t2;
    std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
    for (std::size_t s = begin; s < end; ++s) {
      synth.draw(f.seed, s, field);
      Rng rng = make_rng(pseed, s);
      const double theta = uni(rng);
      for (std::size_t j = 0; j < n; ++j) {
        const auto e = field[j] + f.coherent_amplitude;
        const auto l = std::polar(lo, theta - omega * static_cast<double>(j) * dt_s);
        mu1[j] = scale * 0.5 * std::norm(l + e);
        mu2[j] = scale * 0.5 * std::norm(l - e);
      }
      t1.clear();
      t2.clear();
      detail::poisson_arrivals(mu1, dt_ps, rng, t1);
      detail::poisson_arrivals(mu2, dt_ps, rng, t2);
      auto& out = per_shot[s];
      out.reserve(t1.size() + t2.size());
      std::size_t a = 0, b = 0;
      while (a < t1.size() || b < t2.size()) {
        if (b == t2.size() || (a < t1.size() && t1[a] <= t2[b]))
          out.push_back({1, static_cast<std::uint64_t>(t1[a++])});
        else
          out.push_back({2, static_cast<std::uint64_t>(t2[b++])});
      }
    }
  });
  std::size_t total = 0;
  for (const auto& v : per_shot) total += v.size();
  stream.reserve(f.shots, total);
  for (const auto& v : per_shot) stream.append_shot(v);
  return stream;
}

void write_g2_hd_csv(const CoherenceSeries& g2_hd, const std::filesystem::path& path) {
  CsvWriter csv(path, {"tau_ps", "g2_hd"});
  for (std::size_t i = 0; i < g2_hd.size(); ++i) csv.row(g2_hd.tau_ps[i], g2_hd.real(i));
}

void write_g1_csv(const CoherenceSeries& g1, const std::filesystem::path& path) {
  CsvWriter csv(path, {"tau_ps", "g1_recovered", "stderr"});
  for (std::size_t i = 0; i < g1.size(); ++i) csv.row(g1.tau_ps[i], g1.real(i), g1.sigma[i]);
}

void write_spectrum_csv(const SpectrumSeries& s, const std::filesystem::path& path) {
  CsvWriter csv(path, {"omega_rad_per_s", "S_normalized"});
  for (std::size_t i = 0; i < s.values.size(); ++i) csv.row(s.omega_rad_per_s[i], s.values[i]);
}

}  // namespace photocorr
