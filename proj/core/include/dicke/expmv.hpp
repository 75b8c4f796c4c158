#pragma once

#include <functional>

#include "dicke/liouvillian.hpp"
#include "dicke/types.hpp"

namespace dicke {

/// A linear map on C^n given by its action, with an upper bound on its
/// induced 1-norm. `apply` writes out = A in; buffers never alias.
struct LinearAction {
  Index size = 0;
  double norm_bound = 0.0;
  std::function<void(const cplx* in, cplx* out)> apply;
};

struct ExpmvOptions {
  double theta = 4.0;  // bound on norm_bound * substep
  double tol = 1e-16;  // relative truncation of the Taylor series
  int max_terms = 100;
};

/// exp(t A) v by substepped truncated Taylor series. Requires t >= 0.
Vector expmv(const LinearAction& a, const Vector& v, double t, const ExpmvOptions& opts = {});

/// Action of a Liouvillian on column-stacked density matrices.
LinearAction action_of(const Liouvillian& l);

/// exp(t L) rho for one Liouvillian, matrix-free.
Matrix propagate(const Liouvillian& l, const Matrix& rho, double t, const ExpmvOptions& opts = {});

/// Dense matrix exponential (scaling and squaring with Pade).
Matrix expm_dense(const Matrix& a);

}  // namespace dicke
