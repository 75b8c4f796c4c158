#pragma once

#include "dicke/types.hpp"

namespace dicke {

struct StateTolerance {
  double hermiticity = 1e-12;
  double trace = 1e-10;
  double positivity = 1e-10;
};

/// Diagnostics of a candidate density matrix.
struct StateCheck {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double trace_error = 0.0;        // |Tr rho - 1|
  double min_eigenvalue = 0.0;

  bool ok(const StateTolerance& tol = {}) const {
    return hermiticity_error <= tol.hermiticity && trace_error <= tol.trace &&
           min_eigenvalue >= -tol.positivity;
  }
};

StateCheck check_state(const Matrix& rho);

/// (A + A^dagger) / 2.
Matrix hermitize(const Matrix& a);

/// Validated density matrix. Construction throws NumericalError when the
/// data is not Hermitian, unit-trace and positive within tolerance.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix data, const StateTolerance& tol = {});

  /// Wraps without validation; callers guarantee the invariants.
  static DensityMatrix trusted(Matrix data);
  static DensityMatrix basis_state(Index dim, Index k);
  static DensityMatrix pure(const Vector& psi);

  const Matrix& data() const { return data_; }
  Index dim() const { return data_.rows(); }
  cplx expect(const Matrix& op) const;

 private:
  DensityMatrix() = default;
  Matrix data_;
};

/// Tr(op * rho) without validation.
cplx expectation(const Matrix& op, const Matrix& rho);

/// 1/2 || a - b ||_1 for Hermitian arguments.
double trace_distance(const Matrix& a, const Matrix& b);

}  // namespace dicke
