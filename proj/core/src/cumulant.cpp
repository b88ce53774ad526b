#include "photocorr/cumulant.hpp"

#include <bit>

#include "photocorr/error.hpp"

namespace photocorr {

std::complex<double> third_cumulant(const MomentTable& m, unsigned mask) {
  require(std::popcount(mask) == 3 && mask < 16, ErrorKind::domain, "third cumulant needs three factors");
  unsigned f[3];
  int n = 0;
  for (unsigned bit = 1; bit < 16; bit <<= 1)
    if (mask & bit) f[n++] = bit;
  const auto x = m[f[0]], y = m[f[1]], z = m[f[2]];
  return m[mask] - m[f[0] | f[1]] * z - m[f[0] | f[2]] * y - m[f[1] | f[2]] * x + 2.0 * x * y * z;
}

KuboTerms kubo_decomposition(const MomentTable& m) {
  KuboTerms t;
  t.moment = m[kA | kB | kC | kD];
  t.pairings = m[kA | kB] * m[kC | kD] + m[kA | kC] * m[kB | kD] + m[kA | kD] * m[kB | kC];
  t.mean_product = m[kA] * m[kB] * m[kC] * m[kD];
  t.third_order = third_cumulant(m, kA | kB | kC) * m[kD] + third_cumulant(m, kB | kC | kD) * m[kA] +
                  third_cumulant(m, kA | kC | kD) * m[kB] + third_cumulant(m, kA | kB | kD) * m[kC];
  t.connected = t.moment - t.pairings + 2.0 * t.mean_product - t.third_order;
  return t;
}

MomentTable sample_moments(std::span<const Sample4> samples) {
  MomentTable sum{};
  for (const auto& s : samples) {
    const std::complex<double> v[4] = {s.a, s.b, s.c, s.d};
    std::complex<double> p[16];
    p[0] = 1.0;
    for (unsigned mask = 1; mask < 16; ++mask) {
      const unsigned low = mask & (~mask + 1u);
      p[mask] = p[mask ^ low] * v[std::countr_zero(low)];
      sum[mask] += p[mask];
    }
  }
  const double n = static_cast<double>(samples.size());
  MomentTable m{};
  m[0] = 1.0;
  for (unsigned mask = 1; mask < 16; ++mask) m[mask] = sum[mask] / n;
  return m;
}

}  // namespace photocorr
