#include <doctest.h>

#include <cmath>
#include <numbers>

#include "photocorr/coherence.hpp"
#include "photocorr/error.hpp"
#include "photocorr/heterodyne.hpp"
#include "photocorr/qsim.hpp"

using namespace photocorr;
using std::numbers::pi;

namespace {

// g2_HD written out directly from its definition.
CoherenceSeries beat_record(const CoherenceSeries& g1, const CoherenceSeries& g2, const HeterodyneConfig& c) {
  const double s = c.i_sc, l = c.i_lo, tot = (s + l) * (s + l);
  std::vector<double> v(g1.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    const double t = static_cast<double>(g1.tau_ps[i]) * 1e-12;
    v[i] = 1.0 + s * s / tot * (g2.real(i) - 1.0) -
           2.0 * s * l / tot * std::cos(2.0 * pi * c.omega_lo_hz * t) * g1.values[i].real();
  }
  return CoherenceSeries::real_series(SeriesKind::g2, g1.tau_ps, v, std::vector<double>(v.size(), 0.0));
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("mixing weights") {
  auto ab = alpha_beta({110e6, 0.0, 1.0});
  CHECK(ab.alpha == 1.0);
  CHECK(ab.beta == 0.0);
  ab = alpha_beta({110e6, 1.0, 1.0});
  CHECK(ab.alpha == doctest::Approx(0.25));
  CHECK(ab.beta == doctest::Approx(0.5));
  ab = alpha_beta({110e6, 1.0, 0.1});
  CHECK(ab.alpha == doctest::Approx(0.01 / 1.21));
  CHECK(ab.beta == doctest::Approx(0.2 / 1.21));
  const auto swapped = alpha_beta({110e6, 0.1, 1.0});
  CHECK(swapped.beta == doctest::Approx(ab.beta));
  CHECK(kind_of([] { alpha_beta({110e6, 0.0, 0.0}); }) == ErrorKind::domain);
  CHECK(kind_of([] { HeterodyneConfig{-1.0}.validate(); }) == ErrorKind::config);
}

TEST_CASE("beat model") {
  const TwoLevelParams p{4.5};
  const auto tau = symmetric_tau_grid(20'000, 100);
  const auto g1 = single_atom_g1(p, tau);
  const auto g2 = single_atom_g2(p, tau);
  const HeterodyneConfig c{110e6, 1.0, 0.1};
  const auto model = g2_hd_model(g1, g2, c);
  const auto ref = beat_record(g1, g2, c);
  for (std::size_t i = 0; i < tau.size(); ++i) CHECK(model.real(i) == doctest::Approx(ref.real(i)).epsilon(1e-12));
  // pure LO: flat
  const auto lo_only = g2_hd_model(g1, g2, {110e6, 1.0, 0.0});
  for (std::size_t i = 0; i < tau.size(); ++i) CHECK(lo_only.real(i) == 1.0);
  // grid too coarse for the beat
  const auto coarse = symmetric_tau_grid(20'000, 5000);
  CHECK(kind_of([&] { g2_hd_model(single_atom_g1(p, coarse), single_atom_g2(p, coarse), c); }) ==
        ErrorKind::accuracy);
}

TEST_CASE("demodulation recovers Re g1") {
  const TwoLevelParams p{5.0};
  const auto tau = symmetric_tau_grid(50'000, 100);
  const auto g1 = single_atom_g1(p, tau);
  const HeterodyneConfig c{600e6, 1.0, 0.1};
  const auto rec = demodulate_g1(beat_record(g1, single_atom_g2(p, tau), c), c);
  REQUIRE(rec.size() == tau.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) sq += std::pow(rec.real(i) - g1.values[i].real(), 2);
  CHECK(std::sqrt(sq / static_cast<double>(tau.size())) < 1e-3);
  CHECK(rec.real(*rec.index_of(0)) == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("demodulation of a record without beat") {
  const auto tau = symmetric_tau_grid(50'000, 100);
  const HeterodyneConfig c{600e6, 1.0, 0.1};
  const auto flat = CoherenceSeries::real_series(SeriesKind::g2, tau, std::vector<double>(tau.size(), 1.0),
                                                 std::vector<double>(tau.size(), 0.0));
  const auto rec = demodulate_g1(flat, c);
  for (std::size_t i = 0; i < tau.size(); ++i) CHECK(std::abs(rec.real(i)) < 1e-12);
  CHECK(kind_of([&] { demodulate_g1(flat, {600e6, 0.0, 0.1}); }) == ErrorKind::no_signal);
  DemodOptions wide;
  wide.cutoff_hz = 700e6;
  CHECK(kind_of([&] { demodulate_g1(flat, c, wide); }) == ErrorKind::separability);
}

TEST_CASE("spectrum of a purely coherent field is a line at the drive") {
  const auto tau = symmetric_tau_grid(50'000, 100);
  const HeterodyneConfig c{110e6, 1.0, 0.1};
  auto g1 = CoherenceSeries::real_series(SeriesKind::g1, tau, std::vector<double>(tau.size(), 1.0),
                                         std::vector<double>(tau.size(), 0.0));
  const auto g2 = CoherenceSeries::real_series(SeriesKind::g2, tau, std::vector<double>(tau.size(), 1.0),
                                               std::vector<double>(tau.size(), 0.0));
  const auto s = spectrum_from_hd(beat_record(g1, g2, c), c);
  const auto peaks = spectrum_peaks(s);
  REQUIRE(peaks.size() >= 1);
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.values.size(); ++i)
    if (s.values[i] > s.values[best]) best = i;
  CHECK(std::abs(s.omega_rad_per_s[best]) < 1e-6);
  CHECK(s.values[best] == doctest::Approx(1.0));
}

TEST_CASE("Mollow triplet through the beat record") {
  const TwoLevelParams p{4.5};
  const auto tau = symmetric_tau_grid(50'000, 100);
  const HeterodyneConfig c{110e6, 1.0, 0.1};
  const auto g1 = single_atom_g1(p, tau);
  const auto hd = beat_record(g1, single_atom_g2(p, tau), c);
  const auto s = spectrum_from_hd(hd, c);
  CHECK(s.resolution_rad_per_s == doctest::Approx(2.0 * pi / (1001 * 100e-12)));

  const auto zero = std::min_element(s.omega_rad_per_s.begin(), s.omega_rad_per_s.end(),
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
  CHECK(s.values[static_cast<std::size_t>(zero - s.omega_rad_per_s.begin())] == doctest::Approx(1.0));

  const double gamma = 2.0 * pi * p.gamma_hz;
  const double side = std::sqrt(4.5 * 4.5 - 1.0 / 16.0) * gamma;
  int found = 0;
  for (auto k : spectrum_peaks(s)) {
    const double w = s.omega_rad_per_s[k];
    if (std::abs(std::abs(w) - side) < s.resolution_rad_per_s) ++found;
  }
  CHECK(found == 2);

  // Parseval: the band carries beta^2/4 sum |w Re g1|^2
  const auto win = spectral_window(tau.size(), {});
  double expect = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) expect += std::pow(win[i] * g1.values[i].real(), 2);
  expect *= std::pow(alpha_beta(c).beta, 2) / 4.0;
  CHECK(hd_band_power(hd, c) == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("spectral windows") {
  SpectrumOptions o;
  const auto t = spectral_window(101, o);
  CHECK(t[50] == 1.0);
  CHECK(t[0] == doctest::Approx(0.0).scale(1.0));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == doctest::Approx(t[100 - i]));
  o.window = SpectralWindow::rectangular;
  for (double v : spectral_window(11, o)) CHECK(v == 1.0);
  o.window = SpectralWindow::hann;
  const auto h = spectral_window(101, o);
  CHECK(h[25] == doctest::Approx(0.5));
}

TEST_CASE("Mollow reference") {
  const TwoLevelParams p{20.0};
  const double gamma = 2.0 * pi * p.gamma_hz;
  const double side = std::sqrt(400.0 - 1.0 / 16.0) * gamma;
  std::vector<double> w{0.0, side, -side};
  for (int k = -20; k <= 20; ++k) w.push_back(0.01 * k * gamma + side);
  const auto s = mollow_reference(p, w);
  CHECK(s.values[0] == doctest::Approx(1.0));
  CHECK(s.values[1] == doctest::Approx(s.values[2]).epsilon(1e-9));
  double top = 0.0;
  for (std::size_t i = 3; i < w.size(); ++i) top = std::max(top, s.values[i]);
  // side peaks: weight 1/4, width 3/2 against weight 1/2, width 1
  CHECK(top == doctest::Approx(1.0 / 3.0).epsilon(0.02));
  CHECK(kind_of([&] { mollow_reference({0.0}, w); }) == ErrorKind::domain);
}

TEST_CASE("beat stream needs scattered light") {
  BeatStreamConfig c;
  c.field.params = {5.0};
  c.field.n_emitters = 10.0;
  c.field.shots = 2;
  c.het.i_sc = 0.0;
  CHECK(kind_of([&] { simulate_beat_stream(c); }) == ErrorKind::no_signal);
}
