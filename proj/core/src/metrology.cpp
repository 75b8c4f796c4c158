#include "dicke/metrology.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dicke/dynamics.hpp"

namespace dicke {

namespace {

constexpr double kClip = 1e-12;

Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(a));
  RealVector ev = es.eigenvalues();
  if (ev.minCoeff() < -kClip) {
    std::ostringstream os;
    os << "fidelity: input has eigenvalue " << ev.minCoeff() << " below -" << kClip;
    throw NumericalError(os.str());
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity_unclamped(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw std::invalid_argument("fidelity: dimension mismatch");
  const Matrix p = psd_sqrt(a) * psd_sqrt(b);
  Eigen::JacobiSVD<Matrix> svd(p);
  return svd.singularValues().sum();
}

double finite_difference_qfi(const Matrix& minus, const Matrix& plus, double h) {
  return 8.0 * (1.0 - fidelity_unclamped(minus, plus)) / (4.0 * h * h);
}

}  // namespace

double fidelity(const Matrix& a, const Matrix& b) {
  return std::clamp(fidelity_unclamped(a, b), 0.0, 1.0);
}

double fidelity(const DensityMatrix& a, const DensityMatrix& b) { return fidelity(a.data(), b.data()); }

QfiResult qfi_from_states(const BinReducedState& minus, const BinReducedState& plus,
                          const BinReducedState& minus_half, const BinReducedState& plus_half, double dg) {
  if (!(dg > 0.0)) throw std::invalid_argument("qfi: finite-difference step must be positive");
  QfiResult r;
  r.dg = dg;
  r.schedule = plus.schedule;
  r.value_coarse = finite_difference_qfi(minus.data, plus.data, dg);
  r.value_fine = finite_difference_qfi(minus_half.data, plus_half.data, 0.5 * dg);
  r.value = (4.0 * r.value_fine - r.value_coarse) / 3.0;
  const double scale = std::abs(r.value_coarse);
  r.convergence = scale > 1e-14 ? std::abs(r.value_fine - r.value_coarse) / scale : 0.0;
  r.flagged = r.convergence > 0.05;
  if (r.value < -1e-8) {
    std::ostringstream os;
    os << "qfi: negative estimate " << r.value << " (step too large or states not smooth)";
    throw NumericalError(os.str());
  }
  r.value = std::max(r.value, 0.0);
  r.per_time = r.value / r.schedule.dt;
  return r;
}

QfiResult qfi_bins(const BinStateFactory& factory, double g0, double dg) {
  if (!(dg > 0.0)) throw std::invalid_argument("qfi_bins: finite-difference step must be positive");
  return qfi_from_states(factory(g0 - dg), factory(g0 + dg), factory(g0 - 0.5 * dg), factory(g0 + 0.5 * dg), dg);
}

DickeLadderState prepare_state(const PermSymLiouvillian& gen, const Preparation& prep) {
  if (prep.stationary) return steady_state(gen);
  if (prep.t1 < 0.0) throw std::invalid_argument("prepare_state: negative t1");
  return evolve_permsym(gen, DickeLadderState::ground(gen.layout_ptr()), prep.t1);
}

namespace {

std::array<double, 4> omega_offsets(const ModelParams& params, const QfiOptions& opts) {
  const double dg = opts.dg_ratio * omega_c(params);
  if (params.omega - dg < 0.0) throw std::invalid_argument("qfi: omega - dg is negative");
  return {params.omega - dg, params.omega + dg, params.omega - 0.5 * dg, params.omega + 0.5 * dg};
}

}  // namespace

QfiResult qfi_one_bin(const ModelParams& params, const Preparation& prep, double dt, const QfiOptions& opts) {
  const auto omegas = omega_offsets(params, opts);
  std::vector<BinReducedState> mu;
  for (double w : omegas) {
    const auto gen = build_permsym_liouvillian(params.with_omega(w), opts.permsym);
    const double t1 = prep.stationary ? 0.0 : prep.t1;
    mu.push_back(one_bin_analytic(gen, prepare_state(gen, prep), dt, t1));
  }
  return qfi_from_states(mu[0], mu[1], mu[2], mu[3], opts.dg_ratio * omega_c(params));
}

QfiScan qfi_vs_tau(const ModelParams& params, const Preparation& prep, const std::vector<double>& tau_grid,
                   double dt, const QfiOptions& opts) {
  if (tau_grid.empty()) throw std::invalid_argument("qfi_vs_tau: empty lag grid");
  const auto omegas = omega_offsets(params, opts);
  std::vector<std::vector<BinReducedState>> scans;
  for (double w : omegas) {
    const auto gen = build_permsym_liouvillian(params.with_omega(w), opts.permsym);
    const double t1 = prep.stationary ? 0.0 : prep.t1;
    scans.push_back(two_bin_analytic_scan(gen, prepare_state(gen, prep), dt, tau_grid, t1));
  }
  QfiScan out;
  const double dg = opts.dg_ratio * omega_c(params);
  std::vector<double> ys;
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    QfiScanPoint p;
    p.tau = tau_grid[i];
    p.qfi = qfi_from_states(scans[0][i], scans[1][i], scans[2][i], scans[3][i], dg);
    ys.push_back(p.qfi.per_time);
    out.points.push_back(p);
  }
  out.argmax = static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin());
  std::tie(out.tau_star, out.per_time_star) = refine_extremum(tau_grid, ys, out.argmax);
  return out;
}

std::vector<double> tau_grid_for(const ModelParams& params, double tau_max, int per_period) {
  if (!(tau_max > 0.0) || per_period < 1) throw std::invalid_argument("tau_grid_for: bad arguments");
  const double wc = omega_c(params);
  const double freq = params.omega > wc ? mean_field_frequency(params) : wc;
  const double h = 2.0 * std::numbers::pi / freq / per_period;
  const auto n = static_cast<std::size_t>(std::ceil(tau_max / h));
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid[i] = tau_max * static_cast<double>(i) / static_cast<double>(n);
  return grid;
}

std::pair<double, double> refine_extremum(const std::vector<double>& xs, const std::vector<double>& ys,
                                          std::size_t i) {
  if (xs.size() != ys.size() || i >= xs.size()) throw std::invalid_argument("refine_extremum: bad index");
  if (i == 0 || i + 1 >= xs.size()) return {xs[i], ys[i]};
  const double h = xs[i + 1] - xs[i];
  const double y0 = ys[i - 1], y1 = ys[i], y2 = ys[i + 1];
  const double curv = y0 - 2.0 * y1 + y2;
  if (curv == 0.0 || std::abs((xs[i] - xs[i - 1]) - h) > 1e-9 * std::abs(h)) return {xs[i], ys[i]};
  const double shift = 0.5 * (y0 - y2) / curv;  // in units of h
  if (std::abs(shift) > 1.0) return {xs[i], ys[i]};
  return {xs[i] + shift * h, y1 - 0.25 * (y0 - y2) * shift};
}

CrbBound cramer_rao_bound(long k_repeats, double dt, double fisher_per_time) {
  if (k_repeats < 1) throw std::invalid_argument("cramer_rao_bound: K must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("cramer_rao_bound: dt must be positive");
  if (!(fisher_per_time >= 0.0)) throw std::invalid_argument("cramer_rao_bound: negative Fisher information");
  CrbBound b;
  b.k_repeats = k_repeats;
  b.dt = dt;
  b.fisher_per_time = fisher_per_time;
  if (fisher_per_time == 0.0) {
    b.unbounded = true;
    b.bound = std::numeric_limits<double>::infinity();
  } else {
    b.bound = 1.0 / (static_cast<double>(k_repeats) * dt * fisher_per_time);
  }
  return b;
}

}  // namespace dicke
