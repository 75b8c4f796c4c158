#include "dicke/density_matrix.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace dicke {

StateCheck check_state(const Matrix& rho) {
  StateCheck c;
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    c.hermiticity_error = INFINITY;
    c.trace_error = INFINITY;
    c.min_eigenvalue = -INFINITY;
    return c;
  }
  c.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  c.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho), Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

DensityMatrix::DensityMatrix(Matrix data, const StateTolerance& tol) : data_(std::move(data)) {
  const StateCheck c = check_state(data_);
  if (!c.ok(tol)) {
    std::ostringstream os;
    os << "invalid density matrix (dim " << data_.rows() << "): hermiticity "
       << c.hermiticity_error << ", trace error " << c.trace_error << ", min eigenvalue "
       << c.min_eigenvalue;
    throw NumericalError(os.str());
  }
}

DensityMatrix DensityMatrix::trusted(Matrix data) {
  DensityMatrix rho;
  rho.data_ = std::move(data);
  return rho;
}

DensityMatrix DensityMatrix::basis_state(Index dim, Index k) {
  Matrix m = Matrix::Zero(dim, dim);
  m(k, k) = 1.0;
  return trusted(std::move(m));
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  const Vector n = psi / psi.norm();
  return DensityMatrix(n * n.adjoint());
}

cplx DensityMatrix::expect(const Matrix& op) const { return expectation(op, data_); }

cplx expectation(const Matrix& op, const Matrix& rho) {
  // Tr(A B) = sum_ij A_ij B_ji
  return (op.transpose().cwiseProduct(rho)).sum();
}

double trace_distance(const Matrix& a, const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace dicke
