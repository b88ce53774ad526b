#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <unistd.h>

#include "cli.hpp"
#include "photocorr/coherence.hpp"
#include "photocorr/correlator.hpp"
#include "photocorr/cumulant.hpp"
#include "photocorr/heterodyne.hpp"
#include "photocorr/qsim.hpp"
#include "photocorr/tagstore.hpp"

using namespace photocorr;
namespace fs = std::filesystem;
using cd = std::complex<double>;
using std::numbers::pi;

namespace {

constexpr int kSkip = 77;

struct Outcome {
  bool pass = true;
  std::string detail;
  bool unmeasurable = false;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail += (detail.empty() ? "" : "; ") + std::string(ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CoherenceSeries measure_g2(const TagStream& s, const SteadyStateWindow& w, std::size_t resamples = 200) {
  return steady_state_g2(coincidence_grid(s, w), w, {resamples, 1, 1});
}

// Largest |x - ref| / sigma over the grid, skipping missing points.
double worst_pull(const CoherenceSeries& x, const CoherenceSeries& ref, std::size_t* count_over3 = nullptr) {
  double worst = 0.0;
  std::size_t over = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_missing(x.real(i)) || x.sigma[i] <= 0.0) continue;
    const double pull = std::abs(x.real(i) - ref.real(i)) / x.sigma[i];
    worst = std::max(worst, pull);
    if (pull > 3.0) ++over;
  }
  if (count_over3) *count_over3 = over;
  return worst;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  FieldStreamConfig c;
  c.params = {5.0};
  c.n_emitters = 100.0;
  c.duration_ps = 400'000;
  c.shots = 100'000;
  c.seed = 2024;
  c.rate_per_ns = 0.0008;  // ~20 detections per steady-state window
  c.workers = 0;
  const auto stream = simulate_field_stream(c);
  const auto w = default_window(c.duration_ps);
  const auto g2 = measure_g2(stream, w);
  const auto oracle = siegert_prediction(single_atom_g1_binned(c.params, g2.tau_ps, w.bin_width_ps));
  const double secs = seconds_since(t0);

  const auto i0 = *g2.index_of(0);
  o.check(g2.real(i0) >= 1.93 && g2.real(i0) <= 2.07,
          fmt("g2(0) = %.4f +- %.4f in [1.93, 2.07]", g2.real(i0), g2.sigma[i0]));
  std::size_t over = 0;
  const double pull = worst_pull(g2, oracle, &over);
  o.check(over == 0, fmt("%zu of %zu lags beyond 3 sigma of 1+|g1|^2 (worst %.2f sigma)", over, g2.size(), pull));
  // Rabi oscillation visible: g2 dips below 1 + |g1|^2's long-lag value somewhere
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 0; i < g2.size(); ++i)
    if (g2.tau_ps[i] >= 10'000) {
      lo = std::min(lo, oracle.real(i));
      hi = std::max(hi, oracle.real(i));
    }
  o.check(hi - lo > 0.02, fmt("oracle Rabi modulation %.3f beyond 10 ns", hi - lo));
  o.check(secs <= 300.0, fmt("runtime %.1f s <= 300 s (%zu tags)", secs, stream.tag_count()));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const TwoLevelParams p{5.0};
  const auto stream = mcwf_photon_stream(p, 400'000, 100'000, 77, 1.0, 0, {0.0, 0});
  const auto w = default_window(400'000);
  const auto g2 = measure_g2(stream, w);
  const auto oracle = single_atom_g2_binned(p, g2.tau_ps, w.bin_width_ps);
  const auto i0 = *g2.index_of(0);
  o.check(g2.real(i0) <= 0.05, fmt("g2(0) = %.4f +- %.4f <= 0.05", g2.real(i0), g2.sigma[i0]));
  std::size_t over = 0;
  const double pull = worst_pull(g2, oracle, &over);
  o.check(over == 0, fmt("%zu of %zu lags beyond 3 sigma of the regression oracle (worst %.2f sigma)", over,
                         g2.size(), pull));

  // oracle against the closed form, unbinned, fine grid
  std::vector<std::int64_t> tau;
  for (std::int64_t t = 0; t <= 200'000; t += 100) tau.push_back(t);
  const auto exact = single_atom_g2(p, tau);
  double worst = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double t = static_cast<double>(tau[i]) / p.ps_per_gamma();
    const double mu = std::sqrt(25.0 - 1.0 / 16.0);
    const double ref = 1.0 - std::exp(-0.75 * t) * (std::cos(mu * t) + 0.75 / mu * std::sin(mu * t));
    worst = std::max(worst, std::abs(exact.real(i) - ref));
  }
  o.check(worst <= 1e-8, fmt("oracle vs closed form max error %.2e <= 1e-8", worst));
  return o;
}

EnsembleGeometry balanced(std::size_t n) {
  // k_las along x, detection along z: drive phases 2 pi x / lambda
  EnsembleGeometry g;
  for (std::size_t i = 0; i < n; ++i) g.positions.push_back({static_cast<double>(i) / static_cast<double>(n), 0.0, 0.0});
  return g;
}

Outcome criterion3() {
  Outcome o;
  const auto tau = symmetric_tau_grid(40'000, 500);
  for (std::size_t n : {2u, 3u}) {
    const TwoLevelParams p{5.0};
    const auto full = fewatom_collective_correlators(p, balanced(n), tau, FewAtomMethod::full_liouvillian);
    const auto fact = fewatom_collective_correlators(p, balanced(n), tau, FewAtomMethod::factorized);
    double identity = 0.0, dual = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
      const double gauss = 1.0 + std::norm(full.g1.values[i]) + std::norm(full.anomalous.values[i]);
      identity = std::max(identity, std::abs(full.g2.real(i) - gauss - full.connected.real(i)));
      dual = std::max({dual, std::abs(full.g2.values[i] - fact.g2.values[i]),
                       std::abs(full.g1.values[i] - fact.g1.values[i]),
                       std::abs(full.connected.values[i] - fact.connected.values[i])});
    }
    o.check(identity <= 1e-8, fmt("N=%zu: |g2 - g2_Gauss - C| max %.2e", n, identity));
    o.check(dual <= 1e-8, fmt("N=%zu: full vs factorized max %.2e", n, dual));
    o.check(full.mean_field < 1e-12, fmt("N=%zu: mean field %.1e", n, full.mean_field));
  }
  return o;
}


struct FixtureRun {
  CoherenceSeries g2;
  ConnectedCorrelation cc;
};

FixtureRun fixture_run(const TagStream& base, double delete_prob, const TwoLevelParams& p,
                       std::uint64_t tau_max_ps = 50'000) {
  const auto fixed = nongaussian_fixture(base, delete_prob, 5000, 31);
  const auto w = default_window(base.header().shot_duration_ps, 1000, 250'000, tau_max_ps);
  FixtureRun r;
  r.g2 = measure_g2(fixed, w);
  GaussianDecomposition d;
  d.g1 = single_atom_g1_binned(p, r.g2.tau_ps, w.bin_width_ps);
  r.cc = connected_correlation(r.g2, d);
  return r;
}

Outcome criterion4() {
  Outcome o;
  FieldStreamConfig c;
  c.params = {5.0};
  c.n_emitters = 100.0;
  c.duration_ps = 400'000;
  c.shots = 100'000;
  c.seed = 4;
  c.rate_per_ns = 0.0003;  // sparse: ~7 detections per window
  c.workers = 0;
  const auto base = simulate_field_stream(c);

  const auto r = fixture_run(base, 0.5, c.params, 150'000);
  const auto i0 = *r.g2.index_of(0);
  const double bound = r.cc.bound.real(i0), sb = r.cc.bound.sigma[i0];
  o.check(bound > 0.0 && bound > 5.0 * sb, fmt("bound 1+|g1(0)|^2-g2(0) = %.3f +- %.3f (%.1f sigma)", bound, sb, bound / sb));
  const double c0 = r.cc.connected.real(i0);
  o.check(c0 < 0.0, fmt("C(0) = %.3f", c0));

  // C far beyond tau_c; deletions follow the intensity, so the residue decays
  // with the field coherence time (~26 ns) rather than with tau_c itself
  const auto tail_mean = [&](std::int64_t from, std::int64_t to) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < r.g2.size(); ++i) {
      const auto t = std::llabs(r.g2.tau_ps[i]);
      if (t < from || t > to) continue;
      const double s = r.cc.connected.sigma[i];
      num += r.cc.connected.real(i) / (s * s);
      den += 1.0 / (s * s);
    }
    return std::pair{num / den, 1.0 / std::sqrt(den)};
  };
  const auto [near, near_sigma] = tail_mean(30'000, 50'000);
  const auto [far, far_sigma] = tail_mean(100'000, 150'000);
  o.check(std::abs(far) < 3.0 * far_sigma && std::abs(near) < 0.05 * std::abs(c0),
          fmt("C(30..50 ns) = %.4f +- %.4f, C(100..150 ns) = %.4f +- %.4f", near, near_sigma, far, far_sigma));

  std::string sweep;
  double last = -1.0;
  bool monotone = true;
  for (double q : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    const auto s = fixture_run(base, q, c.params);
    const double mag = std::abs(s.cc.connected.real(*s.g2.index_of(0)));
    if (q > 0.0 && mag <= last) monotone = false;
    last = mag;
    sweep += fmt("%s%.3f", sweep.empty() ? "" : ", ", mag);
  }
  o.check(monotone, "|C(0)| over delete_prob 0..0.5: " + sweep);
  return o;
}

// Detected intensity per unit rate, the quantity fitted against N.
double stream_intensity(const FieldStreamConfig& c) {
  const auto s = simulate_field_stream(c);
  return static_cast<double>(s.tag_count()) /
         (static_cast<double>(c.shots) * static_cast<double>(c.duration_ps) * 1e-3 * c.rate_per_ns * c.efficiency);
}

ScalingFit intensity_sweep(double coherent_per_n2, std::uint64_t seed) {
  std::vector<ScalingPoint> pts;
  for (double n : {10.0, 30.0, 100.0, 300.0, 1000.0}) {
    FieldStreamConfig c;
    c.params = {5.0};
    c.n_emitters = n;
    c.coherent_amplitude = std::sqrt(coherent_per_n2) * n;
    c.duration_ps = 400'000;
    c.dt_ps = 250;
    c.shots = 2000;
    c.seed = seed + static_cast<std::uint64_t>(n);
    // same expected detections for every N: 0.02 photons per field sample
    c.rate_per_ns = 0.02 / (0.25 * (n + std::norm(c.coherent_amplitude)));
    c.workers = 0;
    pts.push_back({n, stream_intensity(c)});
  }
  return intensity_scaling_fit(pts);
}

TailBound heterodyne_tail(double coherent_fraction, std::uint64_t seed, double* g1_zero = nullptr) {
  BeatStreamConfig b;
  b.field.params = {5.0};
  b.field.n_emitters = 100.0;
  b.field.coherent_amplitude = coherent_amplitude_for_fraction(coherent_fraction, 100.0);
  b.field.duration_ps = 1'000'000;
  b.field.dt_ps = 250;
  b.field.shots = 6000;
  b.field.seed = seed;
  b.het = {110e6, 1.0, 1.0};
  const double total = 2.0 * (100.0 + std::norm(b.field.coherent_amplitude));
  b.field.rate_per_ns = 0.05 / (0.25 * 0.5 * total);
  b.field.workers = 0;
  const auto stream = simulate_beat_stream(b);
  const SteadyStateWindow w{200'000, 1'000'000, 400'000, 1000};
  const auto g2hd = steady_state_g2(coincidence_grid(stream, w), w, {20, 1, 0});
  DemodOptions d;
  d.bin_width_ps = w.bin_width_ps;
  const auto g1 = demodulate_g1(g2hd, b.het, d);
  if (g1_zero) *g1_zero = g1.real(*g1.index_of(0));
  return mean_field_from_g1_tail(g1, default_tail_start_ps(b.field.params.gamma_hz));
}

Outcome criterion5() {
  Outcome o;
  const auto inc = intensity_sweep(0.0, 500);
  o.check(std::abs(inc.exponent - 1.0) <= 0.1, fmt("incoherent exponent %.3f +- %.3f", inc.exponent, inc.exponent_sigma));
  o.check(inc.coherent_bound <= 0.05, fmt("incoherent coherent_bound %.4f <= 0.05", inc.coherent_bound));
  const auto coh = intensity_sweep(2.0, 900);
  o.check(std::abs(coh.exponent - 2.0) <= 0.1, fmt("coherent-admixture exponent %.3f +- %.3f", coh.exponent, coh.exponent_sigma));

  double z0 = 0.0, z1 = 0.0;
  const auto chaotic = heterodyne_tail(0.0, 51, &z0);
  o.check(chaotic.bound <= 0.05, fmt("g1-tail bound (chaotic) %.4f (mean %.4f +- %.4f, g1(0) %.3f)", chaotic.bound,
                                     chaotic.mean, chaotic.sigma, z0));
  const auto mixed = heterodyne_tail(0.3, 52, &z1);
  o.check(std::abs(mixed.mean - 0.30) <= 0.05, fmt("g1-tail on 0.3 mix %.4f +- %.4f (g1(0) %.3f)", mixed.mean,
                                                   mixed.sigma, z1));
  o.check(true, fmt("g2 bias allowed by the chaotic bound %.4f; by a 0.17 bound %.3f", max_g2_bias(chaotic.bound),
                    max_g2_bias(0.17)));
  return o;
}

Outcome criterion6() {
  Outcome o;
  const TwoLevelParams p{5.0};
  const auto tau = symmetric_tau_grid(50'000, 100);
  const auto g1 = single_atom_g1(p, tau);
  const auto g2 = single_atom_g2(p, tau);
  for (double f : {600e6, 110e6}) {
    const HeterodyneConfig h{f, 1.0, 0.1};
    const auto rec = demodulate_g1(g2_hd_model(g1, g2, h), h);
    double sq = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) sq += std::pow(rec.real(i) - g1.values[i].real(), 2);
    const double rms = std::sqrt(sq / static_cast<double>(tau.size()));
    if (f > 500e6)
      o.check(rms <= 1e-3, fmt("model round trip at %.0f MHz, 0.1 ns grid: RMS %.2e", f * 1e-6, rms));
    else
      o.detail += fmt("; (round trip at %.0f MHz: RMS %.2e)", f * 1e-6, rms);
  }

  BeatStreamConfig b;
  b.field.params = {4.5};
  b.field.n_emitters = 100.0;
  b.field.duration_ps = 400'000;
  b.field.dt_ps = 250;
  b.field.shots = 40'000;
  b.field.seed = 66;
  b.het = {110e6, 1.0, 1.0};
  b.field.rate_per_ns = 0.05 / (0.25 * 100.0);
  b.field.workers = 0;
  const auto stream = simulate_beat_stream(b);
  const auto w = default_window(b.field.duration_ps);
  const auto hd = steady_state_g2(coincidence_grid(stream, w), w, {20, 1, 0});
  const auto s = spectrum_from_hd(hd, b.het);
  const double res = s.resolution_rad_per_s;
  const double side = 4.5 * 2.0 * pi * b.field.params.gamma_hz;

  std::size_t zero = 0;
  for (std::size_t i = 0; i < s.omega_rad_per_s.size(); ++i)
    if (std::abs(s.omega_rad_per_s[i]) < std::abs(s.omega_rad_per_s[zero])) zero = i;
  o.check(s.omega_rad_per_s[zero] == 0.0 && s.values[zero] == 1.0, fmt("S(0) = %.15g", s.values[zero]));

  // highest local maximum away from the centre on each side
  double best_pos = 0.0, best_neg = 0.0, v_pos = -1e300, v_neg = -1e300;
  for (auto k : spectrum_peaks(s)) {
    const double om = s.omega_rad_per_s[k];
    if (om > res && s.values[k] > v_pos) v_pos = s.values[k], best_pos = om;
    if (om < -res && s.values[k] > v_neg) v_neg = s.values[k], best_neg = om;
  }
  const double mhz = 1e-6 / (2.0 * pi);
  o.check(std::abs(best_pos - side) <= res && std::abs(best_neg + side) <= res,
          fmt("sidebands at %+.1f / %+.1f MHz vs +-%.1f MHz (bin %.1f MHz; heights %.3f, %.3f)", best_pos * mhz,
              best_neg * mhz, side * mhz, res * mhz, v_pos, v_neg));
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<Sample4> gauss(1'000'000);
  for (auto& x : gauss) {
    const cd e{normal(rng), normal(rng)};
    x = {std::conj(e), std::conj(e), e, e};
  }
  const auto kg = fourth_cumulant_with_error(gauss);
  o.check(std::abs(kg.value) < 4.0 * kg.sigma, fmt("Gaussian |k4| %.2e < 4 x %.2e", std::abs(kg.value), kg.sigma));

  std::bernoulli_distribution coin(0.5);
  std::vector<Sample4> bern(1'000'000);
  for (auto& x : bern) {
    const double v = coin(rng) ? 1.0 : 0.0;
    x = {v, v, v, v};
  }
  const auto kb = fourth_cumulant_with_error(bern);
  o.check(std::abs(kb.value.real() + 0.125) <= 0.003, fmt("Bernoulli(0.5) k4 %.5f +- %.5f", kb.value.real(), kb.sigma));

  // independence: (A, B) drawn apart from (C, D)
  std::exponential_distribution<double> expo(1.0);
  std::vector<Sample4> split(200'000);
  for (auto& x : split) {
    const double u = expo(rng), v = expo(rng);
    x = {u, u, v, v};
  }
  const auto ki = fourth_cumulant_with_error(split);
  o.check(std::abs(ki.value) < 4.0 * ki.sigma, fmt("independent blocks k4 %.2e (sigma %.2e)", std::abs(ki.value), ki.sigma));

  // multilinearity: scale one factor, and split another into a sum
  std::vector<Sample4> base(5000), scaled(5000), part1(5000), part2(5000), summed(5000);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const cd a{1.7, -0.4};
  for (std::size_t i = 0; i < base.size(); ++i) {
    const cd x{uni(rng), uni(rng)}, y{uni(rng), 0.0}, z = x * x, w{uni(rng), uni(rng)};
    base[i] = {x, y + x, z, x * y};
    scaled[i] = {a * x, y + x, z, x * y};
    part1[i] = {x, y + x, z, w};
    part2[i] = {x, y + x, z, x * y - w};
    summed[i] = base[i];
  }
  const cd k0 = fourth_cumulant(base);
  const double lin = std::abs(fourth_cumulant(scaled) - a * k0) / std::abs(k0);
  const double add = std::abs(fourth_cumulant(part1) + fourth_cumulant(part2) - k0) / std::abs(k0);
  o.check(lin < 1e-10 && add < 1e-10, fmt("multilinearity residuals %.1e, %.1e", lin, add));

  // additivity over independent sums: Exp(1) (k4 = 6) plus Bernoulli(0.5) (k4 = -1/8)
  std::vector<Sample4> sum(2'000'000);
  for (auto& x : sum) {
    const double v = expo(rng) + (coin(rng) ? 1.0 : 0.0);
    x = {v, v, v, v};
  }
  const auto ks = fourth_cumulant_with_error(sum);
  o.check(std::abs(ks.value.real() - 5.875) < 4.0 * ks.sigma, fmt("k4(Exp + Bernoulli) %.3f +- %.3f vs 5.875",
                                                                  ks.value.real(), ks.sigma));
  return o;
}

fs::path make_perf_stream(const fs::path& dir, std::size_t target_tags) {
  // Poisson light: 100 detections per 400 ns shot on two channels
  std::mt19937_64 rng(8);
  const std::size_t per_shot = 100, shots = target_tags / per_shot;
  StreamHeader h;
  h.shot_duration_ps = 400'000;
  TagStream s(h);
  s.reserve(shots, shots * per_shot);
  std::poisson_distribution<int> count(static_cast<double>(per_shot));
  std::uniform_int_distribution<std::uint64_t> when(0, h.shot_duration_ps - 1);
  std::bernoulli_distribution side(0.5);
  std::vector<TagRecord> shot;
  for (std::size_t i = 0; i < shots; ++i) {
    shot.clear();
    const int n = count(rng);
    for (int k = 0; k < n; ++k) shot.push_back({static_cast<std::uint8_t>(side(rng) ? 1 : 2), when(rng)});
    std::sort(shot.begin(), shot.end(), [](const TagRecord& a, const TagRecord& b) { return a.time_ps < b.time_ps; });
    s.append_shot(shot);
  }
  const auto path = dir / "perf.ptag";
  write_stream(s, path);
  return path;
}

Outcome criterion8() {
  Outcome o;
  const auto dir = fs::temp_directory_path() / ("photocorr_accept8_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto path = make_perf_stream(dir, 10'000'000);
  const auto tags = read_stream(path).tag_count();

  const auto timed = [&](unsigned workers, const std::string& name) {
    cli::CorrelateOptions c;
    c.stream = path;
    c.out_dir = dir / name;
    c.workers = workers;
    const auto t0 = std::chrono::steady_clock::now();
    cli::cmd_correlate(c);
    return seconds_since(t0);
  };
  const double t1 = timed(1, "w1");
  o.check(t1 <= 10.0, fmt("cmd_correlate on %zu tags, 1 worker: %.2f s <= 10 s", tags, t1));
  const double t2 = timed(2, "w2");
  const double t4 = timed(4, "w4");

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool same = true;
  for (auto f : {"g2_matrix.csv", "g2_tau.csv", "intensity.csv"})
    for (auto w : {"w2", "w4"}) same = same && slurp(dir / "w1" / f) == slurp(dir / w / f);
  o.check(same, "outputs byte-identical for 1, 2 and 4 workers");

  const unsigned cores = std::thread::hardware_concurrency();
  const double speedup = t1 / t4;
  if (cores >= 4) {
    o.check(speedup >= 3.0, fmt("speedup at 4 workers %.2f (2 workers %.2f)", speedup, t1 / t2));
  } else {
    o.check(false, fmt("speedup not measurable: %u hardware thread(s) (4 workers %.2fx, 2 workers %.2fx)", cores,
                       speedup, t1 / t2));
    // only the speedup is out of reach; anything else failing is a real failure
    o.unmeasurable = t1 <= 10.0 && same;
  }
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                    criterion5, criterion6, criterion7, criterion8};
  std::vector<int> which;
  if (argc > 1) {
    which.push_back(std::atoi(argv[1]));
  } else {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) which.push_back(i);
  }
  int status = 0;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    Outcome r;
    try {
      r = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s - %s\n", n, r.pass ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) status = (r.unmeasurable && status == 0) ? kSkip : 1;
  }
  return status;
}
