#include "dicke/expmv.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace dicke {

Vector expmv(const LinearAction& a, const Vector& v, double t, const ExpmvOptions& opts) {
  if (t < 0.0) throw std::invalid_argument("expmv: negative time");
  if (v.size() != a.size) throw std::invalid_argument("expmv: dimension mismatch");
  if (t == 0.0 || a.norm_bound == 0.0) return v;
  const double total = a.norm_bound * t;
  const long steps = std::max(1L, static_cast<long>(std::ceil(total / opts.theta)));
  const double h = t / static_cast<double>(steps);

  Vector x = v;
  Vector term(v.size()), next(v.size());
  for (long s = 0; s < steps; ++s) {
    term = x;
    Vector sum = x;
    const double scale = std::max(x.lpNorm<Eigen::Infinity>(), 1e-300);
    int small = 0;
    for (int k = 1; k <= opts.max_terms; ++k) {
      a.apply(term.data(), next.data());
      next *= h / static_cast<double>(k);
      term.swap(next);
      sum += term;
      // Two consecutive negligible terms guard against accidental zeros.
      if (term.lpNorm<Eigen::Infinity>() <= opts.tol * scale) {
        if (++small == 2) break;
      } else {
        small = 0;
      }
      if (k == opts.max_terms)
        throw NumericalError("expmv: Taylor series did not converge within max_terms");
    }
    x.swap(sum);
  }
  return x;
}

LinearAction action_of(const Liouvillian& l) {
  LinearAction a;
  a.size = l.dim() * l.dim();
  a.norm_bound = l.norm_bound();
  a.apply = [&l](const cplx* in, cplx* out) { l.apply(in, out); };
  return a;
}

Matrix propagate(const Liouvillian& l, const Matrix& rho, double t, const ExpmvOptions& opts) {
  if (rho.rows() != l.dim() || rho.cols() != l.dim())
    throw std::invalid_argument("propagate: dimension mismatch");
  return unvec(expmv(action_of(l), vec(rho), t, opts), l.dim());
}

Matrix expm_dense(const Matrix& a) { return a.exp(); }

}  // namespace dicke
