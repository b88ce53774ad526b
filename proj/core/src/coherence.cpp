#include "photocorr/coherence.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "photocorr/csv.hpp"
#include "photocorr/error.hpp"

namespace photocorr {

namespace {

void require_same_grid(const CoherenceSeries& a, const CoherenceSeries& b, const char* what) {
  require(same_grid(a, b), ErrorKind::alignment, std::string(what) + ": tau grids differ");
}

double quadrature(double a, double b) {
  if (is_missing(a)) return b;
  if (is_missing(b)) return a;
  return std::hypot(a, b);
}

}  // namespace

CoherenceSeries siegert_prediction(const CoherenceSeries& g1) {
  CoherenceSeries out;
  out.kind = SeriesKind::g2;
  out.tau_ps = g1.tau_ps;
  out.values.resize(g1.size());
  out.sigma.resize(g1.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    const double m = g1.magnitude(i);
    out.values[i] = {1.0 + m * m, 0.0};
    out.sigma[i] = 2.0 * m * g1.sigma[i];
  }
  return out;
}

void GaussianDecomposition::validate() const {
  require(anomalous.empty() || anomalous.size() == g1.size(), ErrorKind::alignment,
          "anomalous correlator not on the g1 grid");
  require(mean_field_ratio >= 0.0, ErrorKind::domain, "mean-field ratio must be non-negative");
}

GaussianG2 gaussian_g2(const GaussianDecomposition& d) {
  d.validate();
  GaussianG2 out;
  out.zero_mean = siegert_prediction(d.g1);
  out.with_mean_field = out.zero_mean;
  const double mf = 2.0 * d.mean_field_ratio * d.mean_field_ratio;
  for (std::size_t i = 0; i < d.g1.size(); ++i) {
    const double an = std::norm(d.anomalous_at(i));
    out.zero_mean.values[i] += an;
    out.with_mean_field.values[i] += an - mf;
  }
  return out;
}

ConnectedCorrelation connected_correlation(const CoherenceSeries& g2, const GaussianDecomposition& d,
                                           double mean_field_threshold) {
  require_same_grid(g2, d.g1, "connected correlation");
  if (d.mean_field_ratio > mean_field_threshold)
    fail(ErrorKind::bias, "mean-field ratio " + format_number(d.mean_field_ratio) +
                              " exceeds threshold " + format_number(mean_field_threshold) +
                              "; the zero-mean decomposition would be biased by up to " +
                              format_number(max_g2_bias(d.mean_field_ratio)));
  const auto gauss = gaussian_g2(d);
  ConnectedCorrelation out;
  out.g2_gauss = gauss.zero_mean;
  out.connected.kind = SeriesKind::connected;
  out.connected.tau_ps = g2.tau_ps;
  out.bound = out.connected;
  const std::size_t n = g2.size();
  out.connected.values.resize(n);
  out.connected.sigma.resize(n);
  out.bound.values.resize(n);
  out.bound.sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g1sq = std::norm(d.g1.values[i]);
    // First-order propagation; g1 and g2 errors treated as independent.
    const double err = quadrature(g2.sigma[i], 2.0 * std::sqrt(g1sq) * d.g1.sigma[i]);
    out.connected.values[i] = {g2.real(i) - out.g2_gauss.real(i), 0.0};
    out.connected.sigma[i] = err;
    out.bound.values[i] = {1.0 + g1sq - g2.real(i), 0.0};
    out.bound.sigma[i] = err;
  }
  return out;
}

CoherenceSeries pair_fraction(const CoherenceSeries& g2, const CoherenceSeries& g2_gauss) {
  require_same_grid(g2, g2_gauss, "pair fraction");
  CoherenceSeries f;
  f.kind = SeriesKind::g2;
  f.tau_ps = g2.tau_ps;
  f.values.resize(g2.size());
  f.sigma.resize(g2.size());
  for (std::size_t i = 0; i < g2.size(); ++i) {
    const double den = g2_gauss.real(i);
    if (den == 0.0 || is_missing(den)) {
      f.values[i] = {kMissing, 0.0};
      f.sigma[i] = kMissing;
      continue;
    }
    f.values[i] = {g2.real(i) / den, 0.0};
    f.sigma[i] = quadrature(g2.sigma[i], g2.real(i) / den * g2_gauss.sigma[i]) / den;
  }
  return f;
}

double pair_fraction_identity_residual(const CoherenceSeries& connected,
                                       const CoherenceSeries& g2_gauss, const CoherenceSeries& f) {
  require_same_grid(connected, g2_gauss, "pair fraction identity");
  require_same_grid(connected, f, "pair fraction identity");
  double worst = 0.0;
  for (std::size_t i = 0; i < connected.size(); ++i) {
    if (is_missing(f.real(i))) continue;
    worst = std::max(worst, std::abs(connected.real(i) - g2_gauss.real(i) * (f.real(i) - 1.0)));
  }
  return worst;
}

std::complex<double> fourth_cumulant(std::span<const Sample4> samples) {
  require(samples.size() >= 2, ErrorKind::domain, "fourth cumulant undefined for fewer than 2 samples");
  return kubo_decomposition(sample_moments(samples)).connected;
}

CumulantEstimate fourth_cumulant_with_error(std::span<const Sample4> samples,
                                            std::size_t jackknife_blocks) {
  require(samples.size() >= 2, ErrorKind::domain, "fourth cumulant undefined for fewer than 2 samples");
  const std::size_t blocks = std::clamp<std::size_t>(jackknife_blocks, 2, samples.size());
  std::vector<MomentTable> block_sums(blocks);
  std::vector<double> block_n(blocks);
  MomentTable total{};
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = samples.size() * b / blocks;
    const std::size_t hi = samples.size() * (b + 1) / blocks;
    const auto m = sample_moments(samples.subspan(lo, hi - lo));
    block_n[b] = static_cast<double>(hi - lo);
    for (unsigned k = 0; k < 16; ++k) {
      block_sums[b][k] = m[k] * block_n[b];
      total[k] += block_sums[b][k];
    }
  }
  const double n = static_cast<double>(samples.size());
  MomentTable full{};
  for (unsigned k = 0; k < 16; ++k) full[k] = total[k] / n;
  full[0] = 1.0;

  CumulantEstimate est;
  est.value = kubo_decomposition(full).connected;
  std::vector<std::complex<double>> loo(blocks);
  std::complex<double> mean{};
  for (std::size_t b = 0; b < blocks; ++b) {
    MomentTable m{};
    for (unsigned k = 0; k < 16; ++k) m[k] = (total[k] - block_sums[b][k]) / (n - block_n[b]);
    m[0] = 1.0;
    loo[b] = kubo_decomposition(m).connected;
    mean += loo[b];
  }
  mean /= static_cast<double>(blocks);
  double var = 0.0;
  for (const auto& v : loo) var += std::norm(v - mean);
  est.sigma = std::sqrt(var * static_cast<double>(blocks - 1) / static_cast<double>(blocks));
  return est;
}

TailBound mean_field_from_g1_tail(const CoherenceSeries& g1, std::int64_t tail_start_ps) {
  std::vector<double> mags;
  std::vector<double> errs;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    if (g1.tau_ps[i] < tail_start_ps || is_missing(g1.real(i))) continue;
    mags.push_back(g1.magnitude(i));
    errs.push_back(g1.sigma[i]);
  }
  require(!mags.empty(), ErrorKind::config,
          "no g1 points at lags >= " + std::to_string(tail_start_ps) + " ps");
  TailBound tb;
  tb.points = mags.size();
  double sum = 0.0;
  for (double m : mags) sum += m;
  tb.mean = sum / static_cast<double>(mags.size());
  if (mags.size() >= 2) {
    double ss = 0.0;
    for (double m : mags) ss += (m - tb.mean) * (m - tb.mean);
    tb.sigma = std::sqrt(ss / static_cast<double>(mags.size() - 1) / static_cast<double>(mags.size()));
  } else {
    tb.sigma = is_missing(errs.front()) ? 0.0 : errs.front();
  }
  tb.bound = tb.mean + tb.sigma;
  return tb;
}

std::int64_t default_tail_start_ps(double gamma_hz) {
  require(gamma_hz > 0.0, ErrorKind::domain, "linewidth must be positive");
  return static_cast<std::int64_t>(std::llround(10.0 / (2.0 * std::numbers::pi * gamma_hz) * 1e12));
}

double ScalingFit::power_law(double n) const { return prefactor * std::pow(n, exponent); }

ScalingFit intensity_scaling_fit(std::span<const ScalingPoint> points, double confidence_sigmas) {
  require(points.size() >= 3, ErrorKind::domain, "scaling fit needs at least 3 points");
  for (const auto& p : points)
    require(p.atoms > 0.0 && p.intensity > 0.0 && std::isfinite(p.atoms) && std::isfinite(p.intensity),
            ErrorKind::domain, "scaling fit needs positive atom numbers and intensities");
  ScalingFit fit;
  fit.points.assign(points.begin(), points.end());
  const auto n = static_cast<Eigen::Index>(points.size());

  // log-log power law
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::log(points[static_cast<std::size_t>(i)].atoms);
    y(i) = std::log(points[static_cast<std::size_t>(i)].intensity);
  }
  const Eigen::Matrix2d xtx = x.transpose() * x;
  const Eigen::Vector2d beta = xtx.ldlt().solve(x.transpose() * y);
  fit.prefactor = std::exp(beta(0));
  fit.exponent = beta(1);
  if (n > 2) {
    const double s2 = (y - x * beta).squaredNorm() / static_cast<double>(n - 2);
    fit.exponent_sigma = std::sqrt(s2 * xtx.inverse()(1, 1));
  }

  // I = a N + b N^2 with weights 1/I^2 (relative residuals)
  Eigen::MatrixXd z(n, 2);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    z(i, 0) = p.atoms / p.intensity;
    z(i, 1) = p.atoms * p.atoms / p.intensity;
    w(i) = 1.0;
  }
  const Eigen::Matrix2d ztz = z.transpose() * z;
  const Eigen::Vector2d ab = ztz.colPivHouseholderQr().solve(z.transpose() * w);
  fit.linear = ab(0);
  fit.quadratic = ab(1);
  const double s2 = (w - z * ab).squaredNorm() / static_cast<double>(n - 2);
  fit.quadratic_sigma = std::sqrt(std::max(0.0, s2 * ztz.inverse()(1, 1)));

  double n_max = 0.0;
  for (const auto& p : points) n_max = std::max(n_max, p.atoms);
  const double b_upper = std::max(0.0, fit.quadratic + confidence_sigmas * fit.quadratic_sigma);
  const double coherent = b_upper * n_max * n_max;
  const double total = fit.linear * n_max + coherent;
  fit.coherent_bound = total > 0.0 ? std::clamp(coherent / total, 0.0, 1.0) : 1.0;
  return fit;
}

void write_connected_csv(const CoherenceSeries& g2, const CoherenceSeries& siegert,
                         const ConnectedCorrelation& c, const std::filesystem::path& path) {
  CsvWriter csv(path, {"tau_ps", "g2", "siegert", "g2_gauss", "C", "C_stderr", "bound"});
  for (std::size_t i = 0; i < g2.size(); ++i)
    csv.row(g2.tau_ps[i], g2.real(i), siegert.real(i), c.g2_gauss.real(i), c.connected.real(i),
            c.connected.sigma[i], c.bound.real(i));
}

void write_scaling_csv(const ScalingFit& fit, const std::filesystem::path& path) {
  CsvWriter csv(path, {"N", "intensity", "fit", "residual"});
  for (const auto& p : fit.points) {
    const double model = fit.power_law(p.atoms);
    csv.row(p.atoms, p.intensity, model, p.intensity - model);
  }
}

}  // namespace photocorr
