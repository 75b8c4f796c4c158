#include <gtest/gtest.h>

#include "dicke/model.hpp"
#include "dicke/spin_ops.hpp"

namespace dicke {
namespace {

class SpinAlgebra : public ::testing::TestWithParam<int> {};

TEST_P(SpinAlgebra, CommutationRelations) {
  const auto ops = build_spin_ops(GetParam());
  EXPECT_LT((commutator(ops.s_x, ops.s_y) - kI * ops.s_z).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((commutator(ops.s_z, ops.s_plus) - ops.s_plus).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((commutator(ops.s_plus, ops.s_minus) - 2.0 * ops.s_z).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_P(SpinAlgebra, CasimirIsJJPlusOne) {
  const auto ops = build_spin_ops(GetParam());
  const Matrix c = ops.s_x * ops.s_x + ops.s_y * ops.s_y + ops.s_z * ops.s_z;
  const double j = ops.j();
  EXPECT_LT((c - j * (j + 1) * Matrix::Identity(ops.dim, ops.dim)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_P(SpinAlgebra, BasisOrderedByDecreasingM) {
  const auto ops = build_spin_ops(GetParam());
  for (Index k = 0; k < ops.dim; ++k) EXPECT_DOUBLE_EQ(ops.s_z(k, k).real(), ops.m_at(k));
  EXPECT_DOUBLE_EQ(ops.m_at(0), ops.j());
}

INSTANTIATE_TEST_SUITE_P(TwoJ, SpinAlgebra, ::testing::Values(0, 1, 2, 5, 10, 31));

TEST(CollectiveOps, RejectsEmptyEnsemble) {
  EXPECT_THROW(build_collective_ops(0), std::invalid_argument);
  EXPECT_EQ(build_collective_ops(4).dim, 5);
}

TEST(ModelParams, CriticalDriveAndMeanFieldFrequency) {
  const auto p = ModelParams::at_ratio(20, 2.0);
  EXPECT_DOUBLE_EQ(omega_c(p), 10.0);
  EXPECT_DOUBLE_EQ(p.omega, 20.0);
  EXPECT_NEAR(mean_field_frequency(p), std::sqrt(300.0), 1e-12);
  EXPECT_THROW(mean_field_frequency(p.with_omega(5.0)), std::domain_error);
}

TEST(ModelParams, ValidationAndHash) {
  ModelParams p;
  p.gamma_coll = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  const auto a = ModelParams::at_ratio(3, 1.5);
  EXPECT_EQ(a.hash(), ModelParams::at_ratio(3, 1.5).hash());
  EXPECT_NE(a.hash(), ModelParams::at_ratio(3, 1.6).hash());
}

}  // namespace
}  // namespace dicke
