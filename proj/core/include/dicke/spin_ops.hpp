#pragma once

#include "dicke/types.hpp"

namespace dicke {

/// Angular-momentum matrices of one spin-j irrep.
///
/// Basis ordering is by decreasing m: index k holds |j, m = j - k>.
struct CollectiveSpinOps {
  int two_j = 0;
  Index dim = 0;
  Matrix s_x, s_y, s_z, s_plus, s_minus;

  double j() const { return 0.5 * two_j; }
  /// m quantum number stored at basis index k.
  double m_at(Index k) const { return j() - static_cast<double>(k); }
};

/// Spin-j matrices with j = two_j / 2 (two_j >= 0).
CollectiveSpinOps build_spin_ops(int two_j);

/// Maximal sector S = N/2 of N spin-1/2 particles. Throws for N < 1.
CollectiveSpinOps build_collective_ops(int n_particles);

/// <j, m+1 | S_+ | j, m> = sqrt(j(j+1) - m(m+1)).
double raising_element(double j, double m);

/// Commutator A B - B A.
Matrix commutator(const Matrix& a, const Matrix& b);

}  // namespace dicke
