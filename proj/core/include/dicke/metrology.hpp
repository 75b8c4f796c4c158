#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dicke/density_matrix.hpp"
#include "dicke/model.hpp"
#include "dicke/permsym.hpp"
#include "dicke/timebin.hpp"

namespace dicke {

/// Uhlmann fidelity Tr sqrt(sqrt(a) b sqrt(a)), evaluated as the nuclear norm
/// of sqrt(a) sqrt(b). Square roots clip eigenvalues in [-1e-12, 0) to 0;
/// inputs with more negative eigenvalues are rejected. Result in [0, 1].
double fidelity(const Matrix& a, const Matrix& b);
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

/// QFI of a one-parameter family of bin states by the fidelity finite
/// difference 8 (1 - F(mu_{g-h}, mu_{g+h})) / (2h)^2, at h = dg and dg/2.
struct QfiResult {
  double value = 0.0;        // Richardson-extrapolated in h
  double per_time = 0.0;     // value / dt
  double dg = 0.0;
  double convergence = 0.0;  // |F(dg/2) - F(dg)| / |F(dg)|
  bool flagged = false;      // convergence above 5%
  double value_coarse = 0.0; // F(dg)
  double value_fine = 0.0;   // F(dg/2)
  BinSchedule schedule;
};

using BinStateFactory = std::function<BinReducedState(double g)>;

/// Throws NumericalError when the estimate is below -1e-8.
QfiResult qfi_bins(const BinStateFactory& factory, double g0, double dg);

/// Same from precomputed states at g0 -+ dg and g0 -+ dg/2.
QfiResult qfi_from_states(const BinReducedState& minus, const BinReducedState& plus,
                          const BinReducedState& minus_half, const BinReducedState& plus_half, double dg);

/// How the system state at t1 is obtained.
struct Preparation {
  bool stationary = true;
  double t1 = 0.0;  // when not stationary: evolve from the all-ground state for t1
};

/// System state at t1 under the generator for `params` (ladder form).
DickeLadderState prepare_state(const PermSymLiouvillian& gen, const Preparation& prep);

struct QfiOptions {
  double dg_ratio = 1e-4;  // dg in units of omega_c
  PermSymOptions permsym;
};

/// One-bin QFI for omega estimation from the short-time analytic state.
QfiResult qfi_one_bin(const ModelParams& params, const Preparation& prep, double dt,
                      const QfiOptions& opts = {});

struct QfiScanPoint {
  double tau = 0.0;
  QfiResult qfi;
};

struct QfiScan {
  std::vector<QfiScanPoint> points;
  std::size_t argmax = 0;
  double tau_star = 0.0;        // refined by a local quadratic fit
  double per_time_star = 0.0;   // refined maximum of per_time
};

/// Two-bin QFI for omega estimation on a lag grid (analytic bin states).
QfiScan qfi_vs_tau(const ModelParams& params, const Preparation& prep, const std::vector<double>& tau_grid,
                   double dt, const QfiOptions& opts = {});

/// Uniform lag grid on [0, tau_max] with at least `per_period` points per
/// mean-field period (omega_c is used as the frequency scale at or below
/// the critical drive).
std::vector<double> tau_grid_for(const ModelParams& params, double tau_max, int per_period = 40);

/// Vertex of the parabola through three equally spaced samples around
/// index i; returns (x*, y*). Falls back to the sample when not concave.
std::pair<double, double> refine_extremum(const std::vector<double>& xs, const std::vector<double>& ys,
                                          std::size_t i);

struct CrbBound {
  long k_repeats = 1;
  double dt = 0.0;
  double fisher_per_time = 0.0;
  double bound = 0.0;      // 1 / (K dt F); +inf when F = 0
  bool unbounded = false;  // zero Fisher information
};

/// Rejects K < 1, dt <= 0 and negative F.
CrbBound cramer_rao_bound(long k_repeats, double dt, double fisher_per_time);

}  // namespace dicke
