#pragma once

#include <memory>
#include <vector>

#include "dicke/density_matrix.hpp"
#include "dicke/expmv.hpp"
#include "dicke/liouvillian.hpp"
#include "dicke/model.hpp"
#include "dicke/spin_ops.hpp"
#include "dicke/types.hpp"

namespace dicke {

/// Total-spin sectors of N spin-1/2 particles kept in a ladder state.
///
/// Sectors are ordered by decreasing j, from N/2 down to (N mod 2)/2. Each
/// sector stores one (2j+1) x (2j+1) block, column-major, packed back to
/// back in a flat vector. Degeneracies are folded in: a block holds the
/// total physical weight of its sector, so Tr rho = sum of block traces.
struct SectorLayout {
  int n_particles = 0;
  std::vector<int> two_j;
  std::vector<Index> offset;
  Index total = 0;
  std::vector<CollectiveSpinOps> ops;

  Index sectors() const { return static_cast<Index>(two_j.size()); }
  Index dim(Index s) const { return two_j[static_cast<std::size_t>(s)] + 1; }
  const CollectiveSpinOps& sector_ops(Index s) const { return ops[static_cast<std::size_t>(s)]; }

  /// Every sector reachable by local decay.
  static std::shared_ptr<const SectorLayout> full(int n_particles);
  /// Only j = N/2; sufficient whenever gamma_loc = 0.
  static std::shared_ptr<const SectorLayout> maximal(int n_particles);
};

enum class SpinComponent { X, Y, Z, Plus, Minus };

/// Block-diagonal operator on a ladder, e.g. a collective spin component.
struct BlockOperator {
  std::vector<Matrix> blocks;

  static BlockOperator collective(const SectorLayout& layout, SpinComponent c);
  static BlockOperator identity(const SectorLayout& layout);
  BlockOperator adjoint() const;
  BlockOperator operator*(const BlockOperator& o) const;
  BlockOperator operator+(const BlockOperator& o) const;
  BlockOperator operator*(cplx s) const;
};

class DickeLadderState {
 public:
  explicit DickeLadderState(std::shared_ptr<const SectorLayout> layout);
  DickeLadderState(std::shared_ptr<const SectorLayout> layout, Vector data);

  /// |N/2, -N/2><N/2, -N/2|: every particle in the ground state.
  static DickeLadderState ground(std::shared_ptr<const SectorLayout> layout);
  /// Embeds a density matrix of the maximal sector.
  static DickeLadderState from_maximal(std::shared_ptr<const SectorLayout> layout,
                                       const Matrix& rho);

  const SectorLayout& layout() const { return *layout_; }
  const std::shared_ptr<const SectorLayout>& layout_ptr() const { return layout_; }
  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  Eigen::Map<Matrix> block(Index s);
  Eigen::Map<const Matrix> block(Index s) const;
  Matrix maximal_block() const { return block(0); }

  cplx trace() const;
  std::vector<double> sector_weights() const;
  /// Tr(A rho) for block-diagonal A.
  cplx expect(const BlockOperator& a) const;
  cplx expect(SpinComponent c) const;

  /// Worst-case hermiticity error, trace error, and smallest block eigenvalue.
  StateCheck check() const;
  void hermitize();

  DickeLadderState left_multiply(const BlockOperator& a) const;   // A rho
  DickeLadderState right_multiply(const BlockOperator& a) const;  // rho A
  /// A rho B^dagger.
  DickeLadderState sandwich(const BlockOperator& a, const BlockOperator& b) const;
  DickeLadderState adjoint() const;

 private:
  std::shared_ptr<const SectorLayout> layout_;
  Vector data_;
};

/// Generator L + L_loc on a ladder: the collective part acts inside each
/// sector; local decay adds a diagonal loss inside each sector and feeds
/// weight from sector j into j' in {j-1, j, j+1} with m -> m - 1.
class PermSymLiouvillian {
 public:
  PermSymLiouvillian(const ModelParams& params, std::shared_ptr<const SectorLayout> layout);

  /// The local-decay part L_loc alone (no drive, no collective decay).
  static PermSymLiouvillian local_only(int n_particles, double gamma_loc,
                                       std::shared_ptr<const SectorLayout> layout);

  const ModelParams& params() const { return params_; }
  const SectorLayout& layout() const { return *layout_; }
  const std::shared_ptr<const SectorLayout>& layout_ptr() const { return layout_; }
  Index size() const { return layout_->total; }

  void apply(const cplx* in, cplx* out) const;
  DickeLadderState apply(const DickeLadderState& x) const;
  double norm_bound() const;
  SparseMatrix sparse_superoperator() const;
  LinearAction action() const;

  const Liouvillian& sector_generator(Index s) const { return sectors_[static_cast<std::size_t>(s)]; }

  /// Branching weight R(j -> j') of the local lowering channel; 0 if absent.
  double branching(Index from, Index to) const;

 private:
  struct Feed {
    Index from = 0, to = 0;
    Index shift = 0;    // target index = source index + shift, shift = j' - j + 1
    RealVector weight;  // sqrt(gamma R) C(j -> j', m_k) per source index k
  };
  struct Unchecked {};
  PermSymLiouvillian(Unchecked, const ModelParams& params, std::shared_ptr<const SectorLayout> layout);

  ModelParams params_;
  std::shared_ptr<const SectorLayout> layout_;
  std::vector<Liouvillian> sectors_;
  std::vector<Feed> feeds_;
  Eigen::MatrixXd branching_;
};

struct PermSymOptions {
  int max_particles = 40;   // guard for the all-sector layout
  bool all_sectors = false; // keep every sector even when gamma_loc = 0
};

/// Maximal sector only when gamma_loc = 0 (unless forced), else all sectors.
PermSymLiouvillian build_permsym_liouvillian(const ModelParams& params,
                                             const PermSymOptions& opts = {});

/// e^{(L + L_loc) t} applied to a ladder state; symmetrized afterwards.
/// Throws NumericalError when the result has an eigenvalue below -1e-6.
DickeLadderState evolve_permsym(const PermSymLiouvillian& gen, const DickeLadderState& state0,
                                double t, const ExpmvOptions& opts = {});

/// Same as evolve_permsym without positivity checks, for operators that are
/// not states (e.g. S_- rho in a regression computation).
DickeLadderState propagate_permsym(const PermSymLiouvillian& gen, const DickeLadderState& x,
                                   double t, const ExpmvOptions& opts = {});

/// Squared Clebsch-Gordan weight for sigma_- taking |j,m> into sector
/// j' = j + dj (dj in {-1, 0, 1}) at m - 1.
double lowering_cg2(double j, double m, int dj);

}  // namespace dicke
