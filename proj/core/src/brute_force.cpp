#include "dicke/brute_force.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

#include "dicke/expmv.hpp"
#include "dicke/liouvillian.hpp"

namespace dicke {

namespace {

double sparse_one_norm(const SparseMatrix& m) {
  double best = 0.0;
  for (Index c = 0; c < m.outerSize(); ++c) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

}  // namespace

BruteForceModel::BruteForceModel(const ModelParams& params) : params_(params) {
  params_.validate();
  const int n = params_.n_particles;
  if (n > kMaxParticles)
    throw GuardExceeded("BruteForceModel: N=" + std::to_string(n) + " exceeds " +
                        std::to_string(kMaxParticles));
  dim_ = Index{1} << n;
  for (int site = 0; site < n; ++site) {
    const int bit = n - 1 - site;
    std::vector<Eigen::Triplet<cplx>> t;
    for (Index b = 0; b < dim_; ++b)
      if (((b >> bit) & 1) == 0) t.emplace_back(b | (Index{1} << bit), b, 1.0);
    SparseMatrix sm(dim_, dim_);
    sm.setFromTriplets(t.begin(), t.end());
    site_minus_.push_back(sm);
  }
  s_minus_ = SparseMatrix(dim_, dim_);
  for (const auto& sm : site_minus_) s_minus_ += sm;
  s_plus_ = s_minus_.adjoint();
  s_x_ = 0.5 * (s_plus_ + s_minus_);
  s_y_ = cplx(0.0, -0.5) * (s_plus_ - s_minus_);
  s_z_ = 0.5 * (s_plus_ * s_minus_ - s_minus_ * s_plus_);
  h_ = params_.omega * s_x_;

  SparseMatrix number(dim_, dim_);
  number.setIdentity();
  number = 0.5 * n * number + s_z_;
  anti_ = 0.5 * params_.gamma_coll * (s_plus_ * s_minus_) + 0.5 * params_.gamma_loc * number;

  const double ns = sparse_one_norm(s_minus_);
  norm_bound_ = 2.0 * sparse_one_norm(h_) + 2.0 * sparse_one_norm(anti_) +
                params_.gamma_coll * ns * ns + params_.gamma_loc * n;
}

Vector BruteForceModel::dicke_state(Index k) const {
  const int n = params_.n_particles;
  if (k < 0 || k > n) throw std::out_of_range("dicke_state: index outside 0..N");
  Vector v = Vector::Zero(dim_);
  v[0] = 1.0;  // all excited
  for (Index i = 0; i < k; ++i) v = s_minus_ * v;
  return v / v.norm();
}

Matrix BruteForceModel::embed_symmetric(const Matrix& rho_max) const {
  const Index d = params_.n_particles + 1;
  if (rho_max.rows() != d || rho_max.cols() != d)
    throw std::invalid_argument("embed_symmetric: expected a maximal-sector matrix");
  Matrix basis(dim_, d);
  for (Index k = 0; k < d; ++k) basis.col(k) = dicke_state(k);
  return basis * rho_max * basis.adjoint();
}

Matrix BruteForceModel::apply(const Matrix& rho) const {
  Matrix out = -kI * (h_ * rho - rho * h_) - (anti_ * rho + rho * anti_);
  if (params_.gamma_coll > 0.0)
    out += params_.gamma_coll * (s_minus_ * (s_minus_ * rho).adjoint()).adjoint();
  if (params_.gamma_loc > 0.0)
    for (const auto& sm : site_minus_)
      out += params_.gamma_loc * (sm * (sm * rho).adjoint()).adjoint();
  return out;
}

Matrix BruteForceModel::evolve(const Matrix& rho, double t) const {
  LinearAction a;
  a.size = dim_ * dim_;
  a.norm_bound = norm_bound_;
  a.apply = [this](const cplx* in, cplx* out) {
    const Eigen::Map<const Matrix> x(in, dim_, dim_);
    Eigen::Map<Matrix>(out, dim_, dim_) = apply(Matrix(x));
  };
  return unvec(expmv(a, vec(rho), t), dim_);
}

CollectiveObservables BruteForceModel::observables(const Matrix& rho) const {
  auto tr = [&rho](const SparseMatrix& op) { return (op * rho).trace(); };
  CollectiveObservables o;
  o.s_x = tr(s_x_).real();
  o.s_y = tr(s_y_).real();
  o.s_z = tr(s_z_).real();
  o.splus_sminus = tr(s_plus_ * s_minus_).real();
  o.s_minus = tr(s_minus_);
  return o;
}

std::vector<cplx> BruteForceModel::correlation(const Matrix& rho,
                                               const std::vector<double>& taus) const {
  std::vector<cplx> out;
  Matrix x = s_minus_ * rho;
  double t_prev = 0.0;
  for (double tau : taus) {
    if (tau < t_prev) throw std::invalid_argument("correlation: lags must be ascending");
    x = evolve(x, tau - t_prev);
    t_prev = tau;
    out.push_back((s_plus_ * x).trace());
  }
  return out;
}

Matrix BruteForceModel::steady_state_dense() const {
  if (params_.n_particles > 5)
    throw GuardExceeded("steady_state_dense: N too large for a dense 4^N solve");
  std::vector<std::pair<double, Matrix>> jumps;
  jumps.emplace_back(params_.gamma_coll, Matrix(s_minus_));
  if (params_.gamma_loc > 0.0)
    for (const auto& sm : site_minus_) jumps.emplace_back(params_.gamma_loc, Matrix(sm));
  const SuperOperator l = lindblad_superoperator(Matrix(h_), jumps);
  Eigen::FullPivLU<Matrix> lu(l.data);
  const Matrix kernel = lu.kernel();
  if (kernel.cols() != 1)
    throw DegenerateSteadyState("steady_state_dense: null space dimension " +
                                std::to_string(kernel.cols()));
  Matrix rho = unvec(kernel.col(0), dim_);
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

Matrix BruteForceModel::permute_sites(const Matrix& rho, const std::vector<int>& perm) const {
  const int n = params_.n_particles;
  if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("permute_sites: bad size");
  std::vector<Eigen::Triplet<cplx>> t;
  for (Index b = 0; b < dim_; ++b) {
    Index target = 0;
    for (int site = 0; site < n; ++site) {
      const Index bit = (b >> (n - 1 - site)) & 1;
      target |= bit << (n - 1 - perm[static_cast<std::size_t>(site)]);
    }
    t.emplace_back(target, b, 1.0);
  }
  SparseMatrix p(dim_, dim_);
  p.setFromTriplets(t.begin(), t.end());
  return p * rho * p.adjoint();
}

CollectiveObservables brute_force_oracle(const ModelParams& params, const Matrix& rho0_max,
                                         double t) {
  const BruteForceModel model(params);
  return model.observables(model.evolve(model.embed_symmetric(rho0_max), t));
}

}  // namespace dicke
