#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dicke/dynamics.hpp"
#include "dicke/expmv.hpp"
#include "dicke/timebin.hpp"
#include "oracles.hpp"

namespace dicke {
namespace {

using oracle::kron;

Matrix qubit_projector(int k) {
  Matrix p = Matrix::Zero(2, 2);
  p(k, k) = 1.0;
  return p;
}

/// Traces out the last factor of dimension `inner`.
Matrix trace_last(const Matrix& m, Index inner) {
  const Index outer = m.rows() / inner;
  Matrix out = Matrix::Zero(outer, outer);
  for (Index r = 0; r < outer; ++r)
    for (Index c = 0; c < outer; ++c)
      for (Index k = 0; k < inner; ++k) out(r, c) += m(r * inner + k, c * inner + k);
  return out;
}

/// Traces out the first factor of dimension `outer`.
Matrix trace_first(const Matrix& m, Index outer) {
  const Index inner = m.rows() / outer;
  Matrix out = Matrix::Zero(inner, inner);
  for (Index k = 0; k < outer; ++k) out += m.block(k * inner, k * inner, inner, inner);
  return out;
}

/// Register-level collision model: every step couples the spins to a fresh
/// vacuum bin through exp(-i H dt) with
///   H dt = omega dt S_x + i sqrt(Gamma dt) (S_- sigma_+ - S_+ sigma_-),
/// bins n1 and n2 are kept, all others are traced out.
Matrix register_two_bin_state(int n, double omega, double dt, long n1, long n2) {
  const Matrix sm = oracle::collective_minus(n);
  const Matrix sx = oracle::collective_x(n);
  const Index d = sm.rows();
  Matrix sigma_plus = Matrix::Zero(2, 2);
  sigma_plus(1, 0) = 1.0;
  const double g = std::sqrt(dt);
  const Matrix hdt = omega * dt * kron(sx, Matrix::Identity(2, 2)) +
                     kI * g * (kron(sm, sigma_plus) - kron(sm.adjoint(), sigma_plus.adjoint()));
  const Matrix u = expm_dense(-kI * hdt);
  const Matrix vac = qubit_projector(0);

  Matrix rho = Matrix::Zero(d, d);
  rho(d - 1, d - 1) = 1.0;  // all spins in the ground state
  for (long s = 1; s < n1; ++s) rho = trace_last(u * kron(rho, vac) * u.adjoint(), 2);
  // system (x) b1
  Matrix sb = u * kron(rho, vac) * u.adjoint();
  // Swap so the fresh bin sits next to the system: system (x) fresh (x) b1.
  auto step_with_spectator = [&](const Matrix& x) {
    Matrix joint(4 * d, 4 * d);
    // x on system (x) b1 -> system (x) fresh (x) b1 with fresh in vacuum.
    joint.setZero();
    for (Index r = 0; r < d; ++r)
      for (Index c = 0; c < d; ++c)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) joint(r * 4 + a, c * 4 + b) = x(r * 2 + a, c * 2 + b);
    const Matrix uu = kron(u, Matrix::Identity(2, 2));
    joint = uu * joint * uu.adjoint();
    Matrix out = Matrix::Zero(2 * d, 2 * d);
    for (Index r = 0; r < d; ++r)
      for (Index c = 0; c < d; ++c)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int f = 0; f < 2; ++f) out(r * 2 + a, c * 2 + b) += joint(r * 4 + f * 2 + a, c * 4 + f * 2 + b);
    return out;
  };
  for (long s = n1 + 1; s < n2; ++s) sb = step_with_spectator(sb);
  // Couple bin n2: system (x) b2 (x) b1, then reorder to b1 (x) b2.
  Matrix joint = Matrix::Zero(4 * d, 4 * d);
  for (Index r = 0; r < d; ++r)
    for (Index c = 0; c < d; ++c)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) joint(r * 4 + a, c * 4 + b) = sb(r * 2 + a, c * 2 + b);
  const Matrix uu = kron(u, Matrix::Identity(2, 2));
  joint = uu * joint * uu.adjoint();
  const Matrix bins = trace_first(joint, d);  // index 2 c + a with c on bin n2
  Matrix out(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c)
      for (int b = 0; b < 2; ++b)
        for (int e = 0; e < 2; ++e) out(2 * a + c, 2 * b + e) = bins(2 * c + a, 2 * e + b);
  return out;
}

Matrix marginal_first(const Matrix& mu2) {
  Matrix m(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) m(a, b) = mu2(2 * a, 2 * b) + mu2(2 * a + 1, 2 * b + 1);
  return m;
}

Matrix marginal_second(const Matrix& mu2) {
  Matrix m(2, 2);
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) m(c, d) = mu2(c, d) + mu2(2 + c, 2 + d);
  return m;
}

TEST(Kraus, ExactPairIsComplete) {
  for (int n : {1, 4, 10})
    for (double dt : {1e-1, 1e-3}) {
      const auto kp = kraus_pair(ModelParams::at_ratio(n, 1.5), dt, KrausMode::ExactUnitary);
      EXPECT_LT(kp.completeness_error(), 1e-12) << n << " " << dt;
    }
}

TEST(Kraus, FirstOrderPairIsCompleteToSecondOrder) {
  const auto p = ModelParams::at_ratio(6, 2.0);
  const double e1 = kraus_pair(p, 1e-2, KrausMode::FirstOrder).completeness_error();
  const double e2 = kraus_pair(p, 1e-3, KrausMode::FirstOrder).completeness_error();
  EXPECT_NEAR(e1 / e2, 100.0, 5.0);
}

TEST(Kraus, ExactAndFirstOrderAgreeToFirstOrder) {
  const auto p = ModelParams::at_ratio(5, 1.2);
  const double dt = 1e-4;
  const auto a = kraus_pair(p, dt, KrausMode::ExactUnitary);
  const auto b = kraus_pair(p, dt, KrausMode::FirstOrder);
  EXPECT_LT((a.k0 - b.k0).cwiseAbs().maxCoeff(), 50 * dt * dt);
  EXPECT_LT((a.k1 - b.k1).cwiseAbs().maxCoeff(), 50 * std::pow(dt, 1.5));
}

TEST(Kraus, RejectsNonPositiveStep) {
  EXPECT_THROW(kraus_pair(ModelParams::at_ratio(3, 1.0), 0.0), std::invalid_argument);
  EXPECT_THROW(kraus_pair(ModelParams::at_ratio(3, 1.0), -1e-3), std::invalid_argument);
}

TEST(CollisionModel, TwoBinStateMatchesRegisterOracle) {
  const int n = 2;
  const auto p = ModelParams::at_ratio(n, 1.3);
  const double dt = 0.05;
  const BinSchedule sched{dt, 4, 7};
  const DiscreteChannel channel(p, dt);
  const auto joint = evolve_retaining_bins(channel, DickeLadderState::ground(channel.layout_ptr()), sched);
  const auto mu = reduce_to_bins(joint);
  const Matrix ref = register_two_bin_state(n, p.omega, dt, sched.n1, sched.n2);
  EXPECT_LT((mu.data - ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(std::abs(mu.data(2, 1)), 1e-4);  // non-trivial bin coherence
}

TEST(CollisionModel, JointStateIsAValidState) {
  const auto p = ModelParams::at_ratio(3, 1.8);
  const BinSchedule sched{0.02, 5, 9};
  const auto joint =
      evolve_retaining_bins(p, DensityMatrix::basis_state(4, 3), sched, KrausMode::ExactUnitary);
  EXPECT_TRUE(check_state(joint.dense()).ok({1e-12, 1e-11, 1e-11}));
}

TEST(CollisionModel, MarginalsAreConsistent) {
  const auto p = ModelParams::at_ratio(4, 1.6, 1.0, 0.1);
  const double dt = 0.01;
  const DiscreteChannel channel(p, dt);
  const auto rho = channel.stationary();
  const BinSchedule s2{dt, 1, 12};
  const auto mu2 = reduce_to_bins(retain_bins_from(channel, rho, s2, 2));
  const auto mu1 = reduce_to_bins(retain_bins_from(channel, rho, s2, 1));
  EXPECT_LT((marginal_first(mu2.data) - mu1.data).cwiseAbs().maxCoeff(), 1e-12);
  // At stationarity bin n2 has the same one-bin state as bin n1.
  EXPECT_LT((marginal_second(mu2.data) - mu1.data).cwiseAbs().maxCoeff(), 1e-11);
  // Unmonitored steps after the bins leave their state untouched.
  const auto later = reduce_to_bins(continue_unmonitored(channel, retain_bins_from(channel, rho, s2, 2), 25));
  EXPECT_LT((later.data - mu2.data).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DiscreteChannelTest, StationaryStateIsAFixedPoint) {
  for (double g : {0.0, 0.2}) {
    const DiscreteChannel channel(ModelParams::at_ratio(5, 1.4, 1.0, g), 1e-3);
    const auto rho = channel.stationary();
    EXPECT_LT((channel.apply(rho).data() - rho.data()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
    EXPECT_GT(rho.check().min_eigenvalue, -1e-12);
  }
}

TEST(DiscreteChannelTest, PowersCompose) {
  const DiscreteChannel channel(ModelParams::at_ratio(6, 2.0), 1e-3);
  const auto g = DickeLadderState::ground(channel.layout_ptr());
  const auto a = channel.power(g, 1234);
  const auto b = channel.power(channel.power(g, 1000), 234);
  EXPECT_LT((a.data() - b.data()).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_NEAR(a.trace().real(), 1.0, 1e-11);
  auto c = g;
  for (int i = 0; i < 37; ++i) c = channel.apply(c);
  EXPECT_LT((channel.power(g, 37).data() - c.data()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DiscreteChannelTest, ApproachesContinuousDynamics) {
  const auto p = ModelParams::at_ratio(4, 1.5);
  const auto gen = build_permsym_liouvillian(p);
  const auto ground = DickeLadderState::ground(gen.layout_ptr());
  const auto ref = evolve_permsym(gen, ground, 0.5);
  double prev = 1.0;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    const DiscreteChannel channel(p, dt);
    const auto x = channel.power(ground, std::lround(0.5 / dt));
    const double err = (x.data() - ref.data()).cwiseAbs().maxCoeff();
    EXPECT_LT(err, prev / 5.0) << dt;
    prev = err;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(AnalyticBins, OneBinMatchesLeadingOrder) {
  const auto p = ModelParams::at_ratio(8, 2.0);
  const auto gen = build_permsym_liouvillian(p);
  const auto rho = steady_state(gen);
  const double dt = 1e-5;
  const auto mu = one_bin_analytic(gen, rho, dt);
  const auto& lay = gen.layout();
  const auto sp = BlockOperator::collective(lay, SpinComponent::Plus);
  const auto sm = BlockOperator::collective(lay, SpinComponent::Minus);
  const double n_mean = rho.expect(sp * sm).real();
  EXPECT_NEAR(mu.data(1, 1).real(), dt * n_mean, 1e-15);
  EXPECT_NEAR(mu.data.trace().real(), 1.0, 1e-14);
  EXPECT_LT(std::abs(mu.data(1, 0) - std::sqrt(dt) * rho.expect(sm)), 10 * std::pow(dt, 1.5) * n_mean);
}

TEST(AnalyticBins, StatesArePositiveWithUnitTrace) {
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(10, 1.5, 1.0, 0.1));
  const auto rho = evolve_permsym(gen, DickeLadderState::ground(gen.layout_ptr()), 0.3);
  const auto states = two_bin_analytic_scan(gen, rho, 1e-4, {0.0, 0.05, 0.4, 2.0});
  for (const auto& mu : states) {
    const auto c = check_state(mu.data);
    EXPECT_LT(c.trace_error, 1e-12);
    EXPECT_LT(c.hermiticity_error, 1e-14);
    EXPECT_GT(c.min_eigenvalue, -1e-14);
  }
  const auto one = one_bin_analytic(gen, rho, 1e-4);
  for (const auto& mu : states) EXPECT_LT((marginal_first(mu.data) - one.data).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(AnalyticBins, CrossTermIsTheCorrelationFunction) {
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(6, 2.0));
  const auto rho = steady_state(gen);
  const double dt = 1e-6;
  const std::vector<double> taus{0.0, 0.1, 0.7};
  const auto states = two_bin_analytic_scan(gen, rho, dt, taus);
  const auto g = two_time_correlation(gen, rho, taus);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    // <b_n1^dagger b_n2> = mu(|01>, |10>) = mu(1, 2)
    const cplx cross = bin_expect(states[i], bin_annihilator(2, 0).adjoint() * bin_annihilator(2, 1));
    EXPECT_LT(std::abs(cross / dt - g.values[i]), 1e-4 * std::abs(g.values[0])) << taus[i];
  }
}

TEST(AnalyticBins, ConvergeToExactDiscreteStates) {
  const auto p = ModelParams::at_ratio(4, 1.7);
  const auto gen = build_permsym_liouvillian(p);
  const auto rho = steady_state(gen);
  const double tau = 0.3;
  // Coherences are O(sqrt(dt)), so the deviation scaled by dt shrinks like sqrt(dt).
  double prev = 1e9;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    const DiscreteChannel channel(p, dt);
    const long gap = std::lround(tau / dt);
    const auto exact = two_bin_exact_scan(channel, channel.stationary(), 1, {gap}).front();
    const auto analytic = two_bin_analytic(gen, rho, dt, gap * dt);
    const double dev = (exact.data - analytic.data).cwiseAbs().maxCoeff() / (p.gamma_coll * dt);
    EXPECT_LT(dev, prev / 2.5) << dt;
    prev = dev;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(AnalyticBins, FactorizeAtLongLag) {
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(3, 1.5));
  const auto rho = steady_state(gen);
  const double dt = 1e-4;
  const auto mu2 = two_bin_analytic(gen, rho, dt, 40.0);
  const auto mu1 = one_bin_analytic(gen, rho, dt);
  EXPECT_LT((mu2.data - kron(mu1.data, mu1.data)).cwiseAbs().maxCoeff(), 1e-6 * dt);
}

TEST(AnalyticBins, RejectNegativeLag) {
  const auto gen = build_permsym_liouvillian(ModelParams::at_ratio(3, 1.5));
  EXPECT_THROW(two_bin_analytic(gen, steady_state(gen), 1e-3, -0.1), std::invalid_argument);
}

TEST(Schedule, FromTimesRoundsToBins) {
  const auto s = BinSchedule::from_times(1e-3, 0.1234, 0.5);
  EXPECT_EQ(s.n1, 123);
  EXPECT_EQ(s.n2, 624);
  EXPECT_NEAR(s.tau(), 0.5, 1e-12);
  EXPECT_EQ(BinSchedule::from_times(1e-3, 0.0, 0.0).n1, 1);
  EXPECT_THROW((BinSchedule{1e-3, 2, 2}.validate()), std::invalid_argument);
  EXPECT_THROW((BinSchedule{1e-3, 0, 2}.validate()), std::invalid_argument);
}

TEST(Probing, TimeAndRegime) {
  EXPECT_DOUBLE_EQ(probing_time(0.25, 1e-3), 4e-3);
  EXPECT_THROW(probing_time(0.0, 1e-3), std::invalid_argument);
  EXPECT_THROW(probing_time(1.5, 1e-3), std::invalid_argument);
  EXPECT_EQ(classify_probing(0.01, 1.0), ProbingRegime::Efficient);
  EXPECT_EQ(classify_probing(5.0, 1.0), ProbingRegime::VeryInefficient);
}

TEST(BinOperators, AnnihilatorsCommuteAndCount) {
  const Matrix b1 = bin_annihilator(2, 0), b2 = bin_annihilator(2, 1);
  EXPECT_LT((b1 * b2 - b2 * b1).cwiseAbs().maxCoeff(), 1e-15);
  const Matrix n1 = b1.adjoint() * b1;
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(n1(k, k).real(), k >= 2 ? 1.0 : 0.0);
  const Matrix n2 = b2.adjoint() * b2;
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(n2(k, k).real(), k % 2 == 1 ? 1.0 : 0.0);
}

}  // namespace
}  // namespace dicke
