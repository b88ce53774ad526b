#pragma once

#include <array>
#include <complex>
#include <span>

namespace photocorr {

/// Moments of ordered sub-products of four factors A, B, C, D.
///
/// Entry `mask` holds <product of the factors whose bit is set>, with the
/// factors kept in A, B, C, D order (bit 0 = A ... bit 3 = D). Entry 0 is 1.
/// Keeping the order makes the same algebra valid for non-commuting
/// operators, as long as every sub-moment is an ordered expectation.
using MomentTable = std::array<std::complex<double>, 16>;

inline constexpr unsigned kA = 1u, kB = 2u, kC = 4u, kD = 8u;

/// Joint third cumulant <XYZ>_c of the three factors in `mask`.
std::complex<double> third_cumulant(const MomentTable& m, unsigned mask);

/// The pieces of the fourth-order moment-cumulant expansion.
struct KuboTerms {
  std::complex<double> moment;        // <ABCD>
  std::complex<double> pairings;      // <AB><CD> + <AC><BD> + <AD><BC>
  std::complex<double> mean_product;  // <A><B><C><D>
  std::complex<double> third_order;   // sum of <XYZ>_c <W> over the four triples
  std::complex<double> connected;     // <ABCD>_c
};

/// <ABCD>_c = <ABCD> - pairings + 2<A><B><C><D> - sum <XYZ>_c <W>.
KuboTerms kubo_decomposition(const MomentTable& m);

/// One joint draw of four (complex) random variables.
struct Sample4 {
  std::complex<double> a, b, c, d;
};

/// Sample moments of every ordered sub-product.
MomentTable sample_moments(std::span<const Sample4> samples);

}  // namespace photocorr
