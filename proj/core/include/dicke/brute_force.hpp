#pragma once

#include <vector>

#include "dicke/model.hpp"
#include "dicke/types.hpp"

namespace dicke {

/// Collective observables of an N-qubit state.
struct CollectiveObservables {
  double s_x = 0.0, s_y = 0.0, s_z = 0.0;
  double splus_sminus = 0.0;
  cplx s_minus = 0.0;
};

/// Full 2^N-dimensional reference model with one sigma_- dissipator per
/// site. Qubit 0 is the most significant bit; |0> is the excited state.
/// Intended as a validation oracle for the ladder construction (N <= 8).
class BruteForceModel {
 public:
  static constexpr int kMaxParticles = 8;

  explicit BruteForceModel(const ModelParams& params);

  Index dim() const { return dim_; }
  const ModelParams& params() const { return params_; }

  /// Embeds a density matrix of the maximal sector (decreasing-m Dicke
  /// basis) into the full register.
  Matrix embed_symmetric(const Matrix& rho_max) const;
  /// Dicke state |N/2, N/2 - k> as a 2^N vector.
  Vector dicke_state(Index k) const;

  Matrix apply(const Matrix& rho) const;
  Matrix evolve(const Matrix& rho, double t) const;
  CollectiveObservables observables(const Matrix& rho) const;

  /// <S_+(tau) S_-> with the state rho taken as the preparation state.
  std::vector<cplx> correlation(const Matrix& rho, const std::vector<double>& taus) const;

  /// Stationary state from the null space of the dense vectorized generator
  /// (small N only, 4^N superoperator dimension).
  Matrix steady_state_dense() const;

  /// Permutes qubits: out = P rho P^dagger with site i moved to perm[i].
  Matrix permute_sites(const Matrix& rho, const std::vector<int>& perm) const;

  const SparseMatrix& s_minus() const { return s_minus_; }
  const SparseMatrix& s_x() const { return s_x_; }

 private:
  ModelParams params_;
  Index dim_;
  SparseMatrix s_minus_, s_plus_, s_x_, s_y_, s_z_;
  SparseMatrix h_;
  SparseMatrix anti_;  // Gamma S_+S_-/2 + gamma (N/2 + S_z)/2
  std::vector<SparseMatrix> site_minus_;
  double norm_bound_ = 0.0;
};

/// Oracle entry point: evolves an embedded symmetric state for time t and
/// returns its collective observables. Throws GuardExceeded for N > 8.
CollectiveObservables brute_force_oracle(const ModelParams& params, const Matrix& rho0_max,
                                         double t);

}  // namespace dicke
