#include <gtest/gtest.h>

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "dicke/density_matrix.hpp"
#include "dicke/expmv.hpp"
#include "dicke/liouvillian.hpp"
#include "oracles.hpp"

namespace dicke {
namespace {

Matrix random_state(Index d, unsigned seed) {
  std::srand(seed);
  const Matrix a = Matrix::Random(d, d);
  Matrix rho = a * a.adjoint();
  return rho / rho.trace();
}

TEST(Liouvillian, BandedMatchesKroneckerReference) {
  for (int n : {1, 2, 5, 8}) {
    const auto p = ModelParams::at_ratio(n, 1.3);
    const auto l = build_liouvillian(p);
    const auto ref = lindblad_superoperator(l.hamiltonian(), {{p.gamma_coll, l.jump()}});
    EXPECT_LT((l.superoperator().data - ref.data).cwiseAbs().maxCoeff(), 1e-12) << "N=" << n;
    const Matrix x = Matrix::Random(l.dim(), l.dim());
    EXPECT_LT((vec(l.apply(x)) - ref.data * vec(x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Liouvillian, DiagonalLossMatchesAnticommutator) {
  const auto ops = build_spin_ops(4);
  RealVector loss(ops.dim);
  for (Index k = 0; k < ops.dim; ++k) loss[k] = 0.3 * (2.0 + ops.m_at(k));
  const Liouvillian l(4, 0.7, 1.1, loss);
  const Matrix a = loss.cast<cplx>().asDiagonal();
  const Matrix x = Matrix::Random(ops.dim, ops.dim);
  const Matrix expect = -kI * 0.7 * commutator(ops.s_x, x) +
                        1.1 * (ops.s_minus * x * ops.s_plus -
                               0.5 * (ops.s_plus * ops.s_minus * x + x * ops.s_plus * ops.s_minus)) -
                        0.5 * (a * x + x * a);
  EXPECT_LT((l.apply(x) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Liouvillian, SingleParticleSpectrum) {
  const auto l = build_liouvillian(ModelParams{1, 0.0, 1.0, 0.0});
  Eigen::ComplexEigenSolver<Matrix> es(l.superoperator().data);
  std::vector<double> re;
  for (Index i = 0; i < 4; ++i) {
    re.push_back(es.eigenvalues()[i].real());
    EXPECT_NEAR(es.eigenvalues()[i].imag(), 0.0, 1e-12);
  }
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -1.0, 1e-12);
  EXPECT_NEAR(re[1], -0.5, 1e-12);
  EXPECT_NEAR(re[2], -0.5, 1e-12);
  EXPECT_NEAR(re[3], 0.0, 1e-12);
}

TEST(Liouvillian, TracePreservingAndHermiticityPreserving) {
  const auto l = build_liouvillian(ModelParams::at_ratio(7, 2.0));
  const Matrix rho = random_state(l.dim(), 3);
  const Matrix out = l.apply(rho);
  EXPECT_LT(std::abs(out.trace()), 1e-12);
  EXPECT_LT((out - out.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Liouvillian, NormBoundDominatesInducedNorm) {
  for (int n : {1, 4, 9}) {
    const auto l = build_liouvillian(ModelParams::at_ratio(n, 3.0));
    const Matrix s = l.superoperator().data;
    const double one_norm = s.cwiseAbs().colwise().sum().maxCoeff();
    EXPECT_LE(one_norm, l.norm_bound() * (1 + 1e-12));
  }
}

TEST(Liouvillian, MaxSectorAgreesWithManyBodyDynamics) {
  const int n = 3;
  const auto p = ModelParams::at_ratio(n, 1.7);
  const auto l = build_liouvillian(p);
  const Matrix sm = oracle::collective_minus(n);
  const auto big = lindblad_superoperator(p.omega * oracle::collective_x(n), {{1.0, sm}});
  Matrix psi0 = Matrix::Zero(8, 8);
  psi0(0, 0) = 1.0;
  const Matrix rho_big = unvec(expm_dense(0.8 * big.data) * vec(psi0), 8);
  Matrix rho0 = Matrix::Zero(l.dim(), l.dim());
  rho0(0, 0) = 1.0;
  const Matrix rho = propagate(l, rho0, 0.8);
  const Matrix sz_big = 0.5 * (sm.adjoint() * sm - sm * sm.adjoint());
  const cplx ez_big = (sz_big * rho_big).trace();
  EXPECT_NEAR(expectation(l.ops().s_z, rho).real(), ez_big.real(), 1e-10);
  const cplx ex_big = (oracle::collective_x(n) * rho_big).trace();
  EXPECT_NEAR(expectation(l.ops().s_x, rho).real(), ex_big.real(), 1e-10);
}

TEST(Expmv, MatchesDenseExponential) {
  const auto l = build_liouvillian(ModelParams::at_ratio(6, 1.4));
  const Matrix rho = random_state(l.dim(), 11);
  for (double t : {0.0, 0.01, 0.5, 3.0}) {
    const Matrix dense = unvec(expm_dense(t * l.superoperator().data) * vec(rho), l.dim());
    EXPECT_LT((propagate(l, rho, t) - dense).cwiseAbs().maxCoeff(), 1e-11) << "t=" << t;
  }
  EXPECT_THROW(propagate(l, rho, -1.0), std::invalid_argument);
}

}  // namespace
}  // namespace dicke
