#include <fftw3.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>

#include "photocorr/error.hpp"
#include "photocorr/parallel.hpp"
#include "photocorr/qsim.hpp"
#include "sampling.hpp"

namespace photocorr {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::uint64_t header_bin_width(std::uint64_t duration_ps) { return std::gcd<std::uint64_t>(duration_ps, 1000); }

std::complex<double> complex_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

// Survival probability of the no-jump evolution started in |g>, tabulated
// every dt (1/Gamma units). After a jump the atom is back in |g>, so this
// one table gives every waiting-time distribution of the run.
std::vector<double> survival_table(const TwoLevelParams& p, double dt, double horizon) {
  using M2 = Eigen::Matrix2cd;
  const SingleAtomModel atom(p);
  const std::complex<double> i{0.0, 1.0};
  M2 h_eff = atom.hamiltonian();
  h_eff(0, 0) -= 0.5 * i;  // -i Gamma/2 sigma+ sigma-, basis (e, g)
  const M2 step = (-i * h_eff * dt).exp();
  Eigen::Vector2cd psi(0.0, 1.0);
  std::vector<double> s{1.0};
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt));
  for (std::size_t k = 0; k < steps; ++k) {
    psi = step * psi;
    s.push_back(psi.squaredNorm());
    if (s.back() < 1e-16) break;
  }
  return s;
}

}  // namespace

TagStream mcwf_photon_stream(const TwoLevelParams& p, std::uint64_t duration_ps, std::size_t shots,
                             std::uint64_t seed, double efficiency, std::uint64_t dead_time_ps,
                             const McwfOptions& options) {
  p.validate();
  require(efficiency > 0.0 && efficiency <= 1.0, ErrorKind::config, "efficiency must be in (0, 1]");
  require(duration_ps > 0, ErrorKind::config, "shot duration must be positive");
  const double dt = options.dt_gamma > 0.0 ? options.dt_gamma
                                           : std::min(0.01, p.rabi > 0.0 ? 0.01 / p.rabi : 0.01);
  // Jump probability per step is Gamma <sigma+ sigma-> dt <= dt.
  require(dt <= 0.1, ErrorKind::accuracy,
          "MCWF step " + std::to_string(dt) + "/Gamma allows jump probabilities above 0.1 per step");

  StreamHeader header;
  header.shot_duration_ps = duration_ps;
  header.bin_width_ps = header_bin_width(duration_ps);
  TagStream stream(header);
  std::vector<std::vector<TagRecord>> per_shot(shots);
  if (p.rabi > 0.0) {
    const double ps_per_gamma = p.ps_per_gamma();
    const double horizon = static_cast<double>(duration_ps) / ps_per_gamma;
    const auto survival = survival_table(p, dt, horizon);
    const bool truncated = static_cast<double>(survival.size() - 1) * dt < horizon;

    parallel_chunks(shots, options.workers, [&](unsigned, std::size_t begin, std::size_t end) {
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      for (std::size_t s = begin; s < end; ++s) {
        Rng rng = make_rng(seed, s);
        auto& out = per_shot[s];
        std::uint64_t last[2] = {0, 0};
        bool seen[2] = {false, false};
        double t = 0.0;
        for (;;) {
          const double r = uni(rng);
          // First table entry below r; survival is non-increasing.
          const auto it = std::partition_point(survival.begin(), survival.end(), [r](double v) { return v >= r; });
          if (it == survival.end() && !truncated) break;
          double wait;
          if (it == survival.end()) {
            wait = static_cast<double>(survival.size() - 1) * dt;
          } else {
            const auto k = static_cast<std::size_t>(it - survival.begin());
            const double frac = (survival[k - 1] - r) / (survival[k - 1] - survival[k]);
            wait = (static_cast<double>(k - 1) + frac) * dt;
          }
          t += wait;
          const double t_ps = t * ps_per_gamma;
          if (t_ps >= static_cast<double>(duration_ps)) break;
          const bool detected = uni(rng) < efficiency;
          const int channel = uni(rng) < 0.5 ? 0 : 1;
          if (!detected) continue;
          const auto stamp = static_cast<std::uint64_t>(t_ps);
          if (seen[channel] && stamp - last[channel] < dead_time_ps) continue;
          seen[channel] = true;
          last[channel] = stamp;
          out.push_back({static_cast<std::uint8_t>(channel + 1), stamp});
        }
      }
    });
  }
  std::size_t total = 0;
  for (const auto& v : per_shot) total += v.size();
  stream.reserve(shots, total);
  for (const auto& v : per_shot) stream.append_shot(v);
  return stream;
}

void FieldTrace::update_mean_intensity() {
  double sum = 0.0;
  for (const auto& e : samples) sum += std::norm(e);
  mean_intensity = samples.empty() ? 0.0 : sum / static_cast<double>(samples.size());
}

void FieldTrace::validate() const {
  require(dt_ps > 0, ErrorKind::validation, "field trace needs a positive sample spacing");
  require(samples_per_shot > 0 && samples.size() % samples_per_shot == 0, ErrorKind::validation,
          "field trace length is not a whole number of shots");
  double sum = 0.0;
  for (const auto& e : samples) sum += std::norm(e);
  const double mean = samples.empty() ? 0.0 : sum / static_cast<double>(samples.size());
  require(std::abs(mean - mean_intensity) <= 1e-12 * std::max(1.0, mean), ErrorKind::validation,
          "field trace mean intensity is stale");
}

struct ChaoticSynthesizer::Plan {
  fftw_complex* buffer = nullptr;
  fftw_plan backward = nullptr;
};

double max_field_dt_ps(const TwoLevelParams& p) {
  p.validate();
  return 0.05 / std::max(p.rabi, 1.0) * p.ps_per_gamma();
}

ChaoticSynthesizer::ChaoticSynthesizer(const TwoLevelParams& p, double n_emitters, std::size_t samples,
                                       std::uint64_t dt_ps)
    : samples_(samples), m_(0), elastic_sigma_(0.0), plan_(nullptr) {
  p.validate();
  require(n_emitters >= 1.0, ErrorKind::config, "chaotic field needs at least one emitter");
  require(samples > 0 && dt_ps > 0, ErrorKind::config, "chaotic field needs samples and a positive step");
  require(static_cast<double>(dt_ps) <= max_field_dt_ps(p), ErrorKind::accuracy,
          "field step " + std::to_string(dt_ps) + " ps does not resolve the Mollow sidebands (max " +
              std::to_string(max_field_dt_ps(p)) + " ps)");
  const SingleAtomModel atom(p);
  require(atom.excited_pop() > 0.0, ErrorKind::domain, "undriven emitters radiate no field");

  const double dt = static_cast<double>(dt_ps) / p.ps_per_gamma();
  const auto pad = static_cast<std::size_t>(std::ceil(30.0 / dt));
  // Lags below `samples` are exact; by lag M/2 the inelastic part has decayed.
  m_ = std::bit_ceil(2 * std::max(samples, pad));
  const std::size_t half = m_ / 2;
  std::vector<std::int64_t> lags(half + 1);
  for (std::size_t k = 0; k <= half; ++k) lags[k] = static_cast<std::int64_t>(k * dt_ps);
  const auto g1 = atom.g1(lags);
  const double c = atom.coherent_fraction();
  elastic_sigma_ = std::sqrt(n_emitters * c);

  // Circulant embedding of the inelastic covariance N (g1 - c).
  plan_ = new Plan;
  plan_->buffer = fftw_alloc_complex(m_);
  auto* buf = reinterpret_cast<std::complex<double>*>(plan_->buffer);
  for (std::size_t k = 0; k <= half; ++k) buf[k] = n_emitters * (g1[k] - c);
  buf[half] = buf[half].real();
  for (std::size_t k = 1; k < half; ++k) buf[m_ - k] = std::conj(buf[k]);
  {
    std::lock_guard lock(planner_mutex());
    fftw_plan forward = fftw_plan_dft_1d(static_cast<int>(m_), plan_->buffer, plan_->buffer, FFTW_FORWARD,
                                         FFTW_ESTIMATE);
    fftw_execute(forward);
    fftw_destroy_plan(forward);
    plan_->backward = fftw_plan_dft_1d(static_cast<int>(m_), plan_->buffer, plan_->buffer, FFTW_BACKWARD,
                                       FFTW_ESTIMATE);
  }
  amplitude_.resize(m_);
  for (std::size_t k = 0; k < m_; ++k)
    amplitude_[k] = std::sqrt(std::max(0.0, buf[k].real()) / static_cast<double>(m_));
}

ChaoticSynthesizer::~ChaoticSynthesizer() {
  if (!plan_) return;
  std::lock_guard lock(planner_mutex());
  if (plan_->backward) fftw_destroy_plan(plan_->backward);
  fftw_free(plan_->buffer);
  delete plan_;
}

void ChaoticSynthesizer::draw(std::uint64_t seed, std::uint64_t shot, std::span<std::complex<double>> out) {
  require(out.size() == samples_, ErrorKind::validation, "output span has the wrong length");
  Rng rng = make_rng(seed, shot);
  const std::complex<double> elastic = elastic_sigma_ * complex_normal(rng);
  auto* buf = reinterpret_cast<std::complex<double>*>(plan_->buffer);
  for (std::size_t k = 0; k < m_; ++k) buf[k] = amplitude_[k] * complex_normal(rng);
  fftw_execute(plan_->backward);
  for (std::size_t j = 0; j < samples_; ++j) out[j] = buf[j] + elastic;
}

FieldTrace chaotic_field(const TwoLevelParams& p, double n_emitters, std::uint64_t duration_ps, std::uint64_t dt_ps,
                         std::uint64_t seed, std::size_t shots) {
  require(dt_ps > 0 && duration_ps > 0 && duration_ps % dt_ps == 0, ErrorKind::config,
          "field duration must be a positive multiple of the sample step");
  require(shots > 0, ErrorKind::config, "at least one shot is required");
  FieldTrace f;
  f.dt_ps = dt_ps;
  f.samples_per_shot = duration_ps / dt_ps;
  f.samples.resize(f.samples_per_shot * shots);
  ChaoticSynthesizer synth(p, n_emitters, f.samples_per_shot, dt_ps);
  for (std::size_t s = 0; s < shots; ++s)
    synth.draw(seed, s, std::span(f.samples).subspan(s * f.samples_per_shot, f.samples_per_shot));
  f.update_mean_intensity();
  return f;
}

FieldTrace coherent_admixture(FieldTrace f, std::complex<double> amplitude) {
  if (amplitude == std::complex<double>{}) return f;
  for (auto& e : f.samples) e += amplitude;
  f.update_mean_intensity();
  return f;
}

double coherent_amplitude_for_fraction(double fraction, double incoherent_intensity) {
  require(fraction >= 0.0 && fraction < 1.0, ErrorKind::config, "coherent fraction must be in [0, 1)");
  require(incoherent_intensity >= 0.0, ErrorKind::config, "intensity must be non-negative");
  return std::sqrt(fraction / (1.0 - fraction) * incoherent_intensity);
}

namespace {

void photons_for_shot(std::span<const std::complex<double>> field, std::uint64_t dt_ps, double scale, Rng& rng,
                      std::vector<double>& times, std::vector<double>& mu, std::vector<TagRecord>& out) {
  mu.resize(field.size());
  for (std::size_t j = 0; j < field.size(); ++j) mu[j] = scale * std::norm(field[j]);
  times.clear();
  detail::poisson_arrivals(mu, dt_ps, rng, times);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  out.clear();
  out.reserve(times.size());
  for (double t : times) {
    const auto channel = static_cast<std::uint8_t>(uni(rng) < 0.5 ? 1 : 2);
    out.push_back({channel, static_cast<std::uint64_t>(t)});
  }
}

}  // namespace

TagStream sample_photons(const FieldTrace& f, double mean_rate_per_ns, std::size_t shots, std::uint64_t seed,
                         double efficiency) {
  require(f.dt_ps > 0, ErrorKind::config, "field trace needs a positive sample spacing");
  require(shots > 0 && f.samples.size() % shots == 0, ErrorKind::config,
          "field trace does not split into " + std::to_string(shots) + " equal shots");
  require(mean_rate_per_ns >= 0.0, ErrorKind::config, "rate must be non-negative");
  require(efficiency > 0.0 && efficiency <= 1.0, ErrorKind::config, "efficiency must be in (0, 1]");
  const std::size_t per_shot = f.samples.size() / shots;
  require(per_shot > 0, ErrorKind::config, "empty field trace");
  const double scale = efficiency * mean_rate_per_ns * static_cast<double>(f.dt_ps) * 1e-3;
  double mean_intensity = 0.0;
  for (const auto& e : f.samples) mean_intensity += std::norm(e);
  mean_intensity /= static_cast<double>(f.samples.size());
  require(scale * mean_intensity <= 0.1, ErrorKind::accuracy,
          "aliasing: " + std::to_string(scale * mean_intensity) +
              " expected photons per field sample (limit 0.1); lower the rate or the step");

  StreamHeader header;
  header.shot_duration_ps = per_shot * f.dt_ps;
  header.bin_width_ps = header_bin_width(header.shot_duration_ps);
  TagStream stream(header);
  std::vector<double> times, mu;
  std::vector<TagRecord> records;
  for (std::size_t s = 0; s < shots; ++s) {
    Rng rng = make_rng(seed, s);
    photons_for_shot(std::span(f.samples).subspan(s * per_shot, per_shot), f.dt_ps, scale, rng, times, mu, records);
    stream.append_shot(records);
  }
  return stream;
}

std::uint64_t photon_seed(std::uint64_t seed) noexcept { return derive_seed(seed, 0x70686f746f6eULL); }

std::uint64_t resolve_field_dt(const FieldStreamConfig& c) {
  if (c.dt_ps > 0) return c.dt_ps;
  auto dt = static_cast<std::uint64_t>(std::floor(max_field_dt_ps(c.params)));
  require(dt > 0, ErrorKind::accuracy, "linewidth too large for picosecond field sampling");
  while (c.duration_ps % dt != 0) --dt;
  return dt;
}

TagStream simulate_field_stream(const FieldStreamConfig& c) {
  const std::uint64_t dt_ps = resolve_field_dt(c);
  require(c.duration_ps > 0 && c.duration_ps % dt_ps == 0, ErrorKind::config,
          "field duration must be a positive multiple of the sample step");
  require(c.shots > 0, ErrorKind::config, "at least one shot is required");
  require(c.rate_per_ns >= 0.0, ErrorKind::config, "rate must be non-negative");
  require(c.efficiency > 0.0 && c.efficiency <= 1.0, ErrorKind::config, "efficiency must be in (0, 1]");
  const std::size_t n = c.duration_ps / dt_ps;
  const double scale = c.efficiency * c.rate_per_ns * static_cast<double>(dt_ps) * 1e-3;
  const double expected = c.n_emitters + std::norm(c.coherent_amplitude);
  require(scale * expected <= 0.1, ErrorKind::accuracy,
          "aliasing: " + std::to_string(scale * expected) +
              " expected photons per field sample (limit 0.1); lower the rate or the step");
  const std::uint64_t pseed = photon_seed(c.seed);

  StreamHeader header;
  header.shot_duration_ps = c.duration_ps;
  header.bin_width_ps = header_bin_width(c.duration_ps);
  TagStream stream(header);
  std::vector<std::vector<TagRecord>> per_shot(c.shots);
  parallel_chunks(c.shots, c.workers, [&](unsigned, std::size_t begin, std::size_t end) {
    ChaoticSynthesizer synth(c.params, c.n_emitters, n, dt_ps);
    std::vector<std::complex<double>> field(n);
    std::vector<double> times, mu;
    for (std::size_t s = begin; s < end; ++s) {
      synth.draw(c.seed, s, field);
      if (c.coherent_amplitude != std::complex<double>{})
        for (auto& e : field) e += c.coherent_amplitude;
      Rng rng = make_rng(pseed, s);
      photons_for_shot(field, dt_ps, scale, rng, times, mu, per_shot[s]);
    }
  });
  std::size_t total = 0;
  for (const auto& v : per_shot) total += v.size();
  stream.reserve(c.shots, total);
  for (const auto& v : per_shot) stream.append_shot(v);
  return stream;
}

TagStream nongaussian_fixture(const TagStream& s, double delete_prob, std::uint64_t tau_c_ps, std::uint64_t seed) {
  require(delete_prob >= 0.0 && delete_prob <= 1.0, ErrorKind::config, "delete_prob must be in [0, 1]");
  if (delete_prob == 0.0) return s;
  TagStream out(s.header());
  out.reserve(s.shot_count(), s.tag_count());
  std::vector<char> alive;
  std::vector<TagRecord> kept;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t shot = 0; shot < s.shot_count(); ++shot) {
    const auto tags = s.shot(shot);
    Rng rng = make_rng(seed, shot);
    alive.assign(tags.size(), 1);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      for (std::size_t j = i + 1; alive[i] && j < tags.size() && tags[j].time_ps - tags[i].time_ps < tau_c_ps; ++j) {
        if (!alive[j] || tags[j].channel == tags[i].channel) continue;
        if (uni(rng) >= delete_prob) continue;
        if (uni(rng) < 0.5)
          alive[i] = 0;
        else
          alive[j] = 0;
      }
    }
    kept.clear();
    for (std::size_t i = 0; i < tags.size(); ++i)
      if (alive[i]) kept.push_back(tags[i]);
    out.append_shot(kept);
  }
  return out;
}

}  // namespace photocorr
