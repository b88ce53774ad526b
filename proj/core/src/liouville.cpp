#include "photocorr/liouville.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "photocorr/error.hpp"

namespace photocorr::quantum {

Vector vec(const Matrix& rho) {
  const Eigen::Index d = rho.rows();
  Vector v(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = rho(i, j);
  return v;
}

Matrix unvec(const Vector& v, Eigen::Index dim) {
  Matrix rho(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) rho(i, j) = v(i * dim + j);
  return rho;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix left(const Matrix& a) { return kron(a, Matrix::Identity(a.rows(), a.cols())); }

Matrix right(const Matrix& b) { return kron(Matrix::Identity(b.rows(), b.cols()), b.transpose()); }

RowVector trace_functional(const Matrix& x) {
  const Eigen::Index d = x.rows();
  RowVector r(d * d);
  // Tr[x rho] = sum_ij x(j, i) rho(i, j)
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) r(i * d + j) = x(j, i);
  return r;
}

Matrix liouvillian(const Matrix& hamiltonian, std::span<const Matrix> collapse) {
  const std::complex<double> i{0.0, 1.0};
  Matrix l = -i * (left(hamiltonian) - right(hamiltonian));
  for (const auto& c : collapse) {
    const Matrix cdc = c.adjoint() * c;
    l += kron(c, c.conjugate()) - 0.5 * left(cdc) - 0.5 * right(cdc);
  }
  return l;
}

Matrix steady_state(const Matrix& liouvillian, Eigen::Index dim) {
  require(liouvillian.rows() == dim * dim, ErrorKind::validation, "Liouvillian dimension mismatch");
  Matrix a = liouvillian;
  a.row(0) = trace_functional(Matrix::Identity(dim, dim));
  Vector b = Vector::Zero(dim * dim);
  b(0) = 1.0;
  Matrix rho = unvec(a.fullPivLu().solve(b), dim);
  rho = 0.5 * (rho + rho.adjoint());
  return rho / rho.trace();
}

const Matrix& Propagator::step(std::int64_t dt_ps) {
  auto it = cache_.find(dt_ps);
  if (it == cache_.end())
    it = cache_.emplace(dt_ps, (l_ * (static_cast<double>(dt_ps) / ps_per_unit_)).exp()).first;
  return it->second;
}

}  // namespace photocorr::quantum
