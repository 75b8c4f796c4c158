#include <gtest/gtest.h>

#include <numeric>

#include "dicke/brute_force.hpp"
#include "dicke/expmv.hpp"
#include "dicke/permsym.hpp"

namespace dicke {
namespace {

Matrix random_state(Index d, unsigned seed) {
  std::srand(seed);
  const Matrix a = Matrix::Random(d, d);
  Matrix rho = a * a.adjoint();
  return rho / rho.trace();
}

struct OracleCase {
  int n;
  double gamma_loc;
};

class LadderVersusRegister : public ::testing::TestWithParam<OracleCase> {};

TEST_P(LadderVersusRegister, CollectiveObservablesAgree) {
  const auto [n, g] = GetParam();
  const auto p = ModelParams::at_ratio(n, 1.4, 1.0, g);
  const auto gen = build_permsym_liouvillian(p, {.all_sectors = true});
  const BruteForceModel oracle(p);
  const Matrix rho0 = random_state(n + 1, 17 + n);
  Matrix big = oracle.embed_symmetric(rho0);
  auto state = DickeLadderState::from_maximal(gen.layout_ptr(), rho0);
  double t_prev = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    state = evolve_permsym(gen, state, t - t_prev);
    big = oracle.evolve(big, t - t_prev);
    t_prev = t;
    const auto o = oracle.observables(big);
    EXPECT_NEAR(state.expect(SpinComponent::X).real(), o.s_x, 1e-8) << "t=" << t;
    EXPECT_NEAR(state.expect(SpinComponent::Y).real(), o.s_y, 1e-8);
    EXPECT_NEAR(state.expect(SpinComponent::Z).real(), o.s_z, 1e-8);
    const auto& lay = gen.layout();
    const auto spsm = BlockOperator::collective(lay, SpinComponent::Plus) *
                      BlockOperator::collective(lay, SpinComponent::Minus);
    EXPECT_NEAR(state.expect(spsm).real(), o.splus_sminus, 1e-8);
    EXPECT_NEAR(state.trace().real(), 1.0, 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Cases, LadderVersusRegister,
                         ::testing::Values(OracleCase{1, 0.3}, OracleCase{2, 0.1}, OracleCase{3, 0.0},
                                           OracleCase{3, 0.1}, OracleCase{3, 0.5}, OracleCase{4, 0.1},
                                           OracleCase{4, 0.5}, OracleCase{5, 0.2}, OracleCase{6, 0.1}));

TEST(PermSym, ReducesToCollectiveLiouvillianWithoutLocalDecay) {
  const auto p = ModelParams::at_ratio(6, 2.0);
  const auto gen = build_permsym_liouvillian(p);
  const auto l = build_liouvillian(p);
  EXPECT_EQ(gen.layout().sectors(), 1);
  const Matrix x = Matrix::Random(7, 7);
  const auto s = DickeLadderState::from_maximal(gen.layout_ptr(), x);
  EXPECT_LT((gen.apply(s).maximal_block() - l.apply(x)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PermSym, SingleParticleDecaysAtSummedRate) {
  const auto p = ModelParams{1, 0.0, 1.0, 0.4};
  const auto gen = build_permsym_liouvillian(p);
  Matrix up = Matrix::Zero(2, 2);
  up(0, 0) = 1.0;
  const auto s = evolve_permsym(gen, DickeLadderState::from_maximal(gen.layout_ptr(), up), 0.7);
  EXPECT_NEAR(s.block(0)(0, 0).real(), std::exp(-1.4 * 0.7), 1e-12);
}

TEST(PermSym, SparseSuperoperatorMatchesAction) {
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(5, 1.1, 1.0, 0.3));
  const SparseMatrix s = gen.sparse_superoperator();
  const Vector x = Vector::Random(gen.size());
  Vector y(gen.size());
  gen.apply(x.data(), y.data());
  EXPECT_LT((s * x - y).cwiseAbs().maxCoeff(), 1e-12);
  const double one_norm = Matrix(s).cwiseAbs().colwise().sum().maxCoeff();
  EXPECT_LE(one_norm, gen.norm_bound() * (1 + 1e-12));
}

TEST(PermSym, MaximalSectorWeightIsMonotoneUnderLocalDecay) {
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(8, 2.0, 1.0, 0.2));
  auto s = DickeLadderState::ground(gen.layout_ptr());
  double prev = 1.0;
  for (int i = 0; i < 20; ++i) {
    s = evolve_permsym(gen, s, 0.1);
    const double w = s.sector_weights()[0];
    EXPECT_LE(w, prev + 1e-12);
    prev = w;
  }
  EXPECT_LT(prev, 1.0);
}

TEST(PermSym, SectorWeightsConservedWithoutLocalDecay) {
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(6, 1.5), {.all_sectors = true});
  DickeLadderState s(gen.layout_ptr());
  const auto& lay = gen.layout();
  for (Index i = 0; i < lay.sectors(); ++i) s.block(i) = random_state(lay.dim(i), 5 + i) / 4.0;
  const auto w0 = s.sector_weights();
  s = propagate_permsym(gen, s, 1.3);
  const auto w1 = s.sector_weights();
  for (std::size_t i = 0; i < w0.size(); ++i) EXPECT_NEAR(w0[i], w1[i], 1e-10);
}

TEST(PermSym, GuardAndLayoutChecks) {
  EXPECT_THROW(build_permsym_liouvillian(ModelParams::at_ratio(41, 1.0, 1.0, 0.1)), GuardExceeded);
  EXPECT_NO_THROW(build_permsym_liouvillian(ModelParams::at_ratio(41, 1.0)));
  EXPECT_THROW(PermSymLiouvillian(ModelParams::at_ratio(4, 1.0, 1.0, 0.1), SectorLayout::maximal(4)),
               std::invalid_argument);
}

TEST(BruteForce, PermutationInvariance) {
  const auto p = ModelParams::at_ratio(3, 1.2, 1.0, 0.3);
  const BruteForceModel m(p);
  std::srand(9);
  const Matrix a = Matrix::Random(8, 8);
  Matrix rho = a * a.adjoint();
  rho /= rho.trace();
  const Matrix perm = m.permute_sites(rho, {2, 0, 1});
  const auto o1 = m.observables(m.evolve(rho, 0.9));
  const auto o2 = m.observables(m.evolve(perm, 0.9));
  EXPECT_NEAR(o1.s_y, o2.s_y, 1e-12);
  EXPECT_NEAR(o1.splus_sminus, o2.splus_sminus, 1e-12);
}

TEST(BruteForce, CollectiveOnlyMatchesMaximalSector) {
  const auto p = ModelParams::at_ratio(3, 1.7);
  const auto l = build_liouvillian(p);
  Matrix rho0 = Matrix::Zero(4, 4);
  rho0(3, 3) = 1.0;
  const auto o = brute_force_oracle(p, rho0, 1.1);
  const Matrix rho = propagate(l, rho0, 1.1);
  EXPECT_NEAR(expectation(l.ops().s_y, rho).real(), o.s_y, 1e-10);
  EXPECT_THROW(BruteForceModel(ModelParams::at_ratio(9, 1.0)), GuardExceeded);
}

}  // namespace
}  // namespace dicke
