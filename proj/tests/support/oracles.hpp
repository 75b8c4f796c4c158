#pragma once

#include "dicke/types.hpp"

namespace dicke::oracle {

/// Explicit 2^N many-body operators, qubit 0 is the most significant bit and
/// |0> is the excited state.
Matrix sigma_minus_on(int n, int site);
Matrix collective_minus(int n);
Matrix collective_x(int n);
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace dicke::oracle
