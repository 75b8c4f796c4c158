#include "oracles.hpp"

namespace dicke::oracle {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix sigma_minus_on(int n, int site) {
  Matrix sm = Matrix::Zero(2, 2);
  sm(1, 0) = 1.0;  // |e>=|0> -> |g>=|1>
  Matrix out = Matrix::Identity(1, 1);
  for (int s = 0; s < n; ++s) out = kron(out, s == site ? sm : Matrix::Identity(2, 2));
  return out;
}

Matrix collective_minus(int n) {
  const Index d = Index{1} << n;
  Matrix out = Matrix::Zero(d, d);
  for (int s = 0; s < n; ++s) out += sigma_minus_on(n, s);
  return out;
}

Matrix collective_x(int n) {
  const Matrix sm = collective_minus(n);
  return 0.5 * (sm + sm.adjoint());
}

}  // namespace dicke::oracle
