#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dicke/density_matrix.hpp"
#include "dicke/model.hpp"
#include "dicke/permsym.hpp"

namespace dicke {

/// Bins n1 < n2 of duration dt; bin n starts at (n - 1) dt and the system
/// state it probes is the one at t1 = n1 dt. The lag between the two probed
/// bins is tau = (n2 - n1 - 1) dt.
struct BinSchedule {
  double dt = 0.0;
  long n1 = 1;
  long n2 = 2;

  double t1() const { return static_cast<double>(n1) * dt; }
  double tau() const { return static_cast<double>(n2 - n1 - 1) * dt; }
  void validate() const;

  /// Nearest schedule: n1 = round(t1/dt) (at least 1), n2 = n1 + 1 + round(tau/dt).
  static BinSchedule from_times(double dt, double t1, double tau);
};

enum class KrausMode { FirstOrder, ExactUnitary };

/// System operators of one collision step, K_sigma = <sigma| U |0> with the
/// time bin restricted to occupations {0, 1}.
struct KrausPair {
  Matrix k0, k1;
  KrausMode mode = KrausMode::ExactUnitary;

  /// max |K0^dagger K0 + K1^dagger K1 - 1|.
  double completeness_error() const;
};

/// Rejects dt <= 0; warns when N gamma_coll dt > 0.5.
KrausPair kraus_pair(const ModelParams& params, double dt, KrausMode mode = KrausMode::ExactUnitary);
/// Same construction for one spin-j sector.
KrausPair sector_kraus_pair(const CollectiveSpinOps& ops, double omega, double gamma_coll, double dt,
                            KrausMode mode);

/// K0 rho K0^dagger + K1 rho K1^dagger.
DensityMatrix unmonitored_step(const DensityMatrix& rho, const KrausPair& kraus);

/// One collision step on a ladder: the collective Kraus map followed by
/// e^{L_loc dt} for the unmonitored local-decay channel.
class DiscreteChannel {
 public:
  DiscreteChannel(const ModelParams& params, double dt, KrausMode mode = KrausMode::ExactUnitary);

  const ModelParams& params() const { return params_; }
  double dt() const { return dt_; }
  KrausMode mode() const { return mode_; }
  const std::shared_ptr<const SectorLayout>& layout_ptr() const { return layout_; }
  const BlockOperator& k(int sigma) const { return sigma == 0 ? k0_ : k1_; }

  /// E(x) for an arbitrary (not necessarily Hermitian) ladder operator.
  DickeLadderState apply(const DickeLadderState& x) const;
  /// e^{L_loc dt} x; identity without local decay.
  DickeLadderState apply_local(const DickeLadderState& x) const;
  /// Local step after K_a x K_b^dagger.
  DickeLadderState couple(const DickeLadderState& x, int a, int b) const;
  /// E^steps x; uses cached dense squarings for small ladders.
  DickeLadderState power(const DickeLadderState& x, long steps) const;
  /// Fixed point of E with unit trace.
  DickeLadderState stationary() const;

  /// Ladders up to this size use a dense matrix for E.
  static constexpr Index kDenseLimit = 1100;

 private:
  const Matrix& dense() const;
  const Matrix& squaring(int level) const;

  ModelParams params_;
  double dt_;
  KrausMode mode_;
  std::shared_ptr<const SectorLayout> layout_;
  BlockOperator k0_, k1_;
  std::shared_ptr<const PermSymLiouvillian> local_;
  mutable std::mutex cache_mutex_;
  mutable std::vector<Matrix> squarings_;  // E^(2^i)
};

enum class BinSource { ExactDiscrete, ShortTimeAnalytic };

/// Reduced state of one (2x2) or two (4x4) time-bin modes. Two-bin basis
/// index is 2 a + c with a the occupation of bin n1 and c that of bin n2.
struct BinReducedState {
  int n_bins = 1;
  Matrix data;
  BinSchedule schedule;
  BinSource source = BinSource::ShortTimeAnalytic;
};

/// Joint system-plus-bins state sum_{r,c} X_rc (x) |r><c| in the ordering
/// system (x) bin_n1 (x) bin_n2.
struct JointBinState {
  int n_bins_retained = 1;
  BinSchedule schedule;
  std::vector<DickeLadderState> entries;  // row-major over the bin basis

  int bin_dim() const { return 1 << n_bins_retained; }
  const DickeLadderState& entry(int r, int c) const {
    return entries[static_cast<std::size_t>(r * bin_dim() + c)];
  }
  /// Dense matrix on system (x) bins; requires a single-sector ladder.
  Matrix dense() const;
};

/// Full collision-model run: n1 - 1 unmonitored steps from rho0, then the
/// retained bins couple at steps n1 (and n2), with E acting in between.
JointBinState evolve_retaining_bins(const DiscreteChannel& channel, const DickeLadderState& rho0,
                                    const BinSchedule& schedule, int n_bins = 2);
JointBinState evolve_retaining_bins(const ModelParams& params, const DensityMatrix& rho0,
                                    const BinSchedule& schedule, KrausMode mode, int n_bins = 2);

/// As above but starting from the system state just before bin n1 couples
/// (e.g. channel.stationary()).
JointBinState retain_bins_from(const DiscreteChannel& channel, const DickeLadderState& rho_before_n1,
                               const BinSchedule& schedule, int n_bins = 2);

/// Further unmonitored steps on the system part; bin marginals are unchanged.
JointBinState continue_unmonitored(const DiscreteChannel& channel, const JointBinState& joint,
                                   long steps);

/// Partial trace over the system.
BinReducedState reduce_to_bins(const JointBinState& joint);

/// Exact-discrete two-bin states at bin gaps n2 - n1 - 1 = gaps[i], for a
/// prepared state just before bin n1. Gaps may be given in any order.
std::vector<BinReducedState> two_bin_exact_scan(const DiscreteChannel& channel,
                                                const DickeLadderState& rho_before_n1, long n1,
                                                const std::vector<long>& gaps);

/// One-bin state to leading order in dt, built as the reduced state of the
/// isometric first-order step K0 = sqrt(1 - Gamma dt S_+S_-), K1 = sqrt(Gamma dt) S_-:
///   mu_00 = 1 - Gamma dt <S_+S_->, mu_11 = Gamma dt <S_+S_->,
///   mu_10 = sqrt(Gamma dt) <K0 S_-> = sqrt(Gamma dt) <S_-> + O(dt^{3/2}).
/// Positive and unit-trace by construction. Warns when N Gamma dt > 0.1.
BinReducedState one_bin_analytic(const PermSymLiouvillian& gen, const DickeLadderState& rho_t1,
                                 double dt, double t1 = 0.0);
BinReducedState one_bin_analytic(const ModelParams& params, const DensityMatrix& rho_t1, double dt,
                                 double t1 = 0.0);

/// Two-bin state to leading order in dt with the bins separated by lag tau
/// of evolution under gen. Entries are Tr(K_d^dagger K_c e^{L tau}(K_a rho K_b^dagger));
/// the cross term <10|mu|01> is Gamma dt <S_+(tau) S_-> + O(dt^2).
BinReducedState two_bin_analytic(const PermSymLiouvillian& gen, const DickeLadderState& rho_t1,
                                 double dt, double tau, double t1 = 0.0);
BinReducedState two_bin_analytic(const ModelParams& params, const DensityMatrix& rho_t1, double dt,
                                 double tau, double t1 = 0.0);
/// Efficient lag scan sharing one propagation.
std::vector<BinReducedState> two_bin_analytic_scan(const PermSymLiouvillian& gen,
                                                   const DickeLadderState& rho_t1, double dt,
                                                   const std::vector<double>& taus, double t1 = 0.0);

/// Annihilator of retained bin `which` (0 for n1, 1 for n2) on the bin space.
Matrix bin_annihilator(int n_bins, int which);
/// Tr(op mu).
cplx bin_expect(const BinReducedState& mu, const Matrix& op);

/// tau_eta = dt / eta for detection efficiency eta in (0, 1].
double probing_time(double eta, double dt);

enum class ProbingRegime { Efficient, VeryInefficient };
/// VeryInefficient when successive probed bins are further apart than the
/// relaxation time.
ProbingRegime classify_probing(double tau_eta, double relax_time);

/// CSV rows n_bins,row,col,re,im after a '#' schedule metadata line.
void write_bin_states_csv(const std::string& path, const std::vector<BinReducedState>& states,
                          const ModelParams& params);

const char* to_string(BinSource s);
const char* to_string(KrausMode m);

}  // namespace dicke
