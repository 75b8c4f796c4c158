#include "dicke/spin_ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dicke {

double raising_element(double j, double m) {
  const double v = j * (j + 1.0) - m * (m + 1.0);
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

CollectiveSpinOps build_spin_ops(int two_j) {
  if (two_j < 0) throw std::invalid_argument("negative spin");
  CollectiveSpinOps ops;
  ops.two_j = two_j;
  ops.dim = two_j + 1;
  const Index d = ops.dim;
  ops.s_z = Matrix::Zero(d, d);
  ops.s_plus = Matrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) {
    const double m = ops.m_at(k);
    ops.s_z(k, k) = m;
    // S_+ moves index k (m) to k-1 (m+1).
    if (k > 0) ops.s_plus(k - 1, k) = raising_element(ops.j(), m);
  }
  ops.s_minus = ops.s_plus.adjoint();
  ops.s_x = 0.5 * (ops.s_plus + ops.s_minus);
  ops.s_y = (ops.s_plus - ops.s_minus) / (2.0 * kI);
  return ops;
}

CollectiveSpinOps build_collective_ops(int n_particles) {
  if (n_particles < 1) {
    throw std::invalid_argument("invalid particle count N=" + std::to_string(n_particles));
  }
  return build_spin_ops(n_particles);
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

}  // namespace dicke
