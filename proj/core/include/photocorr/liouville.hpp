#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace photocorr::quantum {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RowVector = Eigen::RowVectorXcd;

// Density matrices are vectorised row-major: v[i*d + j] = rho(i, j), so that
// vec(A rho B) = (A kron B^T) vec(rho).
Vector vec(const Matrix& rho);
Matrix unvec(const Vector& v, Eigen::Index dim);

Matrix kron(const Matrix& a, const Matrix& b);

/// Left and right multiplication superoperators.
Matrix left(const Matrix& a);
Matrix right(const Matrix& b);

/// Row vector r with r * vec(rho) = Tr[x rho].
RowVector trace_functional(const Matrix& x);

/// Lindblad generator for d rho/dt = -i[H, rho] + sum_k D[c_k] rho.
Matrix liouvillian(const Matrix& hamiltonian, std::span<const Matrix> collapse);

/// Unique steady state (trace one) of a Liouvillian acting on dim x dim matrices.
Matrix steady_state(const Matrix& liouvillian, Eigen::Index dim);

/// exp(L t) applied to vectors. Times are integer picoseconds and
/// `ps_per_unit` converts them to the generator's time unit; the exponential
/// of each distinct step is computed once, so uniform grids cost one
/// exponential plus matrix-vector products.
class Propagator {
 public:
  Propagator(Matrix liouvillian, double ps_per_unit)
      : l_(std::move(liouvillian)), ps_per_unit_(ps_per_unit) {}

  const Matrix& generator() const noexcept { return l_; }
  const Matrix& step(std::int64_t dt_ps);

  /// Propagates every vector in `states` through the non-negative, ascending
  /// `times_ps` in turn and calls fn(time_index, states) at each.
  template <typename Fn>
  void sweep(std::vector<Vector> states, std::span<const std::int64_t> times_ps, Fn&& fn) {
    std::int64_t now = 0;
    for (std::size_t k = 0; k < times_ps.size(); ++k) {
      if (times_ps[k] > now) {
        const Matrix& u = step(times_ps[k] - now);
        for (auto& s : states) s = u * s;
        now = times_ps[k];
      }
      fn(k, static_cast<const std::vector<Vector>&>(states));
    }
  }

 private:
  Matrix l_;
  double ps_per_unit_;
  std::map<std::int64_t, Matrix> cache_;
};

}  // namespace photocorr::quantum
