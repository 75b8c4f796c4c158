#include "dicke/liouvillian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dicke {

Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Index dim) {
  if (v.size() != dim * dim) throw std::invalid_argument("unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Liouvillian::Liouvillian(int two_j, double omega, double gamma_coll, RealVector diag_loss)
    : two_j_(two_j),
      dim_(two_j + 1),
      omega_(omega),
      gamma_coll_(gamma_coll),
      ops_(build_spin_ops(two_j)) {
  if (gamma_coll < 0.0) throw std::invalid_argument("Liouvillian: negative decay rate");
  if (diag_loss.size() != 0 && diag_loss.size() != dim_)
    throw std::invalid_argument("Liouvillian: diag_loss has wrong dimension");
  const Index d = dim_;
  lower_coeff_ = RealVector::Zero(d);
  for (Index k = 1; k < d; ++k) lower_coeff_[k] = ops_.s_minus(k, k - 1).real();

  // -i H_eff = -i omega S_x - (Gamma/2) S_+ S_- - (1/2) diag_loss.
  mi_diag_ = Eigen::VectorXcd::Zero(d);
  mi_upper_ = Eigen::VectorXcd::Zero(std::max<Index>(d - 1, 0));
  mi_lower_ = Eigen::VectorXcd::Zero(std::max<Index>(d - 1, 0));
  for (Index k = 0; k < d; ++k) {
    // (S_+ S_-)[k][k] = c_{k+1}^2 where c_{k+1} = <k|S_+|k+1>.
    const double splus_sminus = (k + 1 < d) ? lower_coeff_[k + 1] * lower_coeff_[k + 1] : 0.0;
    double loss = 0.5 * gamma_coll_ * splus_sminus;
    if (diag_loss.size() != 0) {
      if (diag_loss[k] < 0.0) throw std::invalid_argument("Liouvillian: negative diag_loss");
      loss += 0.5 * diag_loss[k];
    }
    mi_diag_[k] = cplx(-loss, 0.0);
  }
  for (Index k = 0; k + 1 < d; ++k) {
    mi_upper_[k] = -kI * omega_ * ops_.s_x(k, k + 1);
    mi_lower_[k] = -kI * omega_ * ops_.s_x(k + 1, k);
  }
}

void Liouvillian::apply(const cplx* in, cplx* out) const {
  std::fill(out, out + dim_ * dim_, cplx(0.0, 0.0));
  apply_add(in, out, cplx(1.0, 0.0));
}

void Liouvillian::apply_add(const cplx* in, cplx* out, cplx scale) const {
  // out[k,l] += s * ( (-iH) X + X (-iH)^dagger + Gamma S_- X S_+ )[k,l]
  const Index d = dim_;
  const cplx* hd = mi_diag_.data();
  const cplx* hu = mi_upper_.data();
  const cplx* hl = mi_lower_.data();
  const double* c = lower_coeff_.data();
  for (Index l = 0; l < d; ++l) {
    const cplx* col = in + l * d;
    const cplx* col_left = (l > 0) ? in + (l - 1) * d : nullptr;
    const cplx* col_right = (l + 1 < d) ? in + (l + 1) * d : nullptr;
    cplx* dst = out + l * d;
    const cplx rd = std::conj(hd[l]);
    // (X (-iH)^dagger)[k,l] = sum_p X[k,p] conj((-iH)[l,p]).
    const cplx rr = (l + 1 < d) ? std::conj(hu[l]) : cplx{};     // p = l+1
    const cplx rl = (l > 0) ? std::conj(hl[l - 1]) : cplx{};     // p = l-1
    const double cl = c[l];
    for (Index k = 0; k < d; ++k) {
      cplx acc = (hd[k] + rd) * col[k];
      if (k + 1 < d) acc += hu[k] * col[k + 1];
      if (k > 0) acc += hl[k - 1] * col[k - 1];
      if (col_right) acc += rr * col_right[k];
      if (col_left) {
        acc += rl * col_left[k];
        if (k > 0) acc += gamma_coll_ * c[k] * cl * col_left[k - 1];
      }
      dst[k] += scale * acc;
    }
  }
}

Matrix Liouvillian::apply(const Matrix& x) const {
  if (x.rows() != dim_ || x.cols() != dim_)
    throw std::invalid_argument("Liouvillian::apply: dimension mismatch");
  Matrix out(dim_, dim_);
  apply(x.data(), out.data());
  return out;
}

SparseMatrix Liouvillian::sparse_superoperator() const {
  const Index d = dim_;
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(7 * d * d));
  auto idx = [d](Index k, Index l) { return k + d * l; };
  for (Index l = 0; l < d; ++l) {
    for (Index k = 0; k < d; ++k) {
      const Index row = idx(k, l);
      trip.emplace_back(row, idx(k, l), mi_diag_[k] + std::conj(mi_diag_[l]));
      if (k + 1 < d) trip.emplace_back(row, idx(k + 1, l), mi_upper_[k]);
      if (k > 0) trip.emplace_back(row, idx(k - 1, l), mi_lower_[k - 1]);
      if (l + 1 < d) trip.emplace_back(row, idx(k, l + 1), std::conj(mi_upper_[l]));
      if (l > 0) trip.emplace_back(row, idx(k, l - 1), std::conj(mi_lower_[l - 1]));
      if (k > 0 && l > 0 && gamma_coll_ > 0.0)
        trip.emplace_back(row, idx(k - 1, l - 1),
                          cplx(gamma_coll_ * lower_coeff_[k] * lower_coeff_[l], 0.0));
    }
  }
  SparseMatrix s(d * d, d * d);
  s.setFromTriplets(trip.begin(), trip.end());
  s.makeCompressed();
  return s;
}

SuperOperator Liouvillian::superoperator() const {
  return SuperOperator{dim_, Matrix(sparse_superoperator())};
}

double Liouvillian::norm_bound() const {
  double h = 0.0;
  for (Index l = 0; l < dim_; ++l) {
    double col = std::abs(mi_diag_[l]);
    if (l > 0) col += std::abs(mi_upper_[l - 1]);
    if (l + 1 < dim_) col += std::abs(mi_lower_[l]);
    h = std::max(h, col);
  }
  const double cmax = lower_coeff_.size() ? lower_coeff_.maxCoeff() : 0.0;
  return 2.0 * h + gamma_coll_ * cmax * cmax;
}

Matrix Liouvillian::hamiltonian() const { return omega_ * ops_.s_x; }
Matrix Liouvillian::jump() const { return ops_.s_minus; }

Liouvillian build_liouvillian(const ModelParams& params) {
  params.validate();
  return Liouvillian(params.n_particles, params.omega, params.gamma_coll);
}

Liouvillian build_liouvillian(const ModelParams& params, const CollectiveSpinOps& cache) {
  params.validate();
  if (cache.dim != params.dim() || cache.two_j != params.n_particles)
    throw std::invalid_argument("build_liouvillian: operator cache has dimension " +
                                std::to_string(cache.dim) + ", expected " +
                                std::to_string(params.dim()));
  return Liouvillian(params.n_particles, params.omega, params.gamma_coll);
}

SuperOperator lindblad_superoperator(const Matrix& hamiltonian,
                                     const std::vector<std::pair<double, Matrix>>& jumps) {
  const Index d = hamiltonian.rows();
  const Matrix id = Matrix::Identity(d, d);
  auto kron = [](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j)
        out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
  };
  Matrix l = -kI * (kron(id, hamiltonian) - kron(hamiltonian.transpose(), id));
  for (const auto& [rate, j] : jumps) {
    if (j.rows() != d || j.cols() != d)
      throw std::invalid_argument("lindblad_superoperator: jump dimension mismatch");
    const Matrix jdj = j.adjoint() * j;
    l += rate * (kron(j.conjugate(), j) - 0.5 * kron(id, jdj) - 0.5 * kron(jdj.transpose(), id));
  }
  return SuperOperator{d, std::move(l)};
}

}  // namespace dicke
