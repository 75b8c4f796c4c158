#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dicke {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using Index = Eigen::Index;

inline constexpr cplx kI{0.0, 1.0};

/// Raised when a numerical routine produces a result that violates a
/// physical invariant beyond tolerance (positivity, convergence, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Liouvillian has more than one stationary state.
class DegenerateSteadyState : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A configured size guard (memory or particle number) was exceeded.
class GuardExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dicke
