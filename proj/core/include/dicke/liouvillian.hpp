#pragma once

#include <utility>
#include <vector>

#include "dicke/model.hpp"
#include "dicke/spin_ops.hpp"
#include "dicke/types.hpp"

namespace dicke {

/// Dense matrix acting on column-stacked density matrices: vec(L rho) = data * vec(rho).
struct SuperOperator {
  Index dim = 0;  // Hilbert-space dimension d; data is d^2 x d^2
  Matrix data;
};

/// Column-stacking vectorization and its inverse.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index dim);

/// Lindblad generator of the driven collective model restricted to one
/// spin-j sector:
///
///   L X = -i (H_eff X - X H_eff^dagger) + gamma_coll S_- X S_+
///   H_eff = omega S_x - (i/2) gamma_coll S_+ S_- - (i/2) diag_loss
///
/// `diag_loss` is an optional real diagonal (in the Dicke basis) used by the
/// permutation-symmetric model to carry the anticommutator part of local
/// decay. Operators are tridiagonal, so apply() is O(d^2).
class Liouvillian {
 public:
  Liouvillian(int two_j, double omega, double gamma_coll, RealVector diag_loss = {});

  int two_j() const { return two_j_; }
  Index dim() const { return dim_; }
  double omega() const { return omega_; }
  double gamma_coll() const { return gamma_coll_; }

  /// out = L(in); both are dim x dim column-major buffers, must not alias.
  void apply(const cplx* in, cplx* out) const;
  /// out += scale * L(in).
  void apply_add(const cplx* in, cplx* out, cplx scale) const;
  Matrix apply(const Matrix& x) const;

  SuperOperator superoperator() const;
  SparseMatrix sparse_superoperator() const;

  /// Upper bound on the induced 1-norm of the superoperator.
  double norm_bound() const;

  Matrix hamiltonian() const;  // omega S_x
  Matrix jump() const;         // S_-
  const CollectiveSpinOps& ops() const { return ops_; }

 private:
  int two_j_;
  Index dim_;
  double omega_;
  double gamma_coll_;
  CollectiveSpinOps ops_;
  // -i H_eff as three diagonals, and the lowering coefficients of S_-.
  Eigen::VectorXcd mi_diag_, mi_upper_, mi_lower_;
  RealVector lower_coeff_;
};

/// Collective generator for the maximal sector S = N/2. Local decay is not
/// included here (see PermSymLiouvillian).
Liouvillian build_liouvillian(const ModelParams& params);

/// Same, reusing a prebuilt operator cache; throws when its dimension does
/// not match N + 1.
Liouvillian build_liouvillian(const ModelParams& params, const CollectiveSpinOps& cache);

/// Dense reference construction from arbitrary Hamiltonian and jump operators
/// via Kronecker products. Used to cross-check the banded implementation.
SuperOperator lindblad_superoperator(const Matrix& hamiltonian,
                                     const std::vector<std::pair<double, Matrix>>& jumps);

}  // namespace dicke
