#include "dicke/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>

#include "dicke/dynamics.hpp"
#include "dicke/expmv.hpp"

namespace dicke {

void MzConfig::validate() const {
  if (!std::isfinite(delta_phi)) throw std::invalid_argument("MzConfig: non-finite phase");
  schedule.validate();
}

Matrix output_modes(const MzConfig& config) {
  config.validate();
  const cplx e1 = std::polar(1.0, config.delta_phi);  // long arm, bin n1
  const cplx e2 = 1.0;                                // short arm, bin n2
  Matrix u = Matrix::Zero(4, 4);
  u.row(0) << -0.5 * e1, 0.5 * e2, 0.5 * kI * e1, 0.5 * kI * e2;
  u.row(1) << 0.5 * kI * e1, 0.5 * kI * e2, 0.5 * e1, -0.5 * e2;
  // The undetected rows span the orthogonal complement of the detected ones.
  const Matrix detected = u.topRows(2).adjoint();
  Eigen::HouseholderQR<Matrix> qr(detected);
  const Matrix q = qr.householderQ() * Matrix::Identity(4, 4);
  u.row(2) = q.col(2).adjoint();
  u.row(3) = q.col(3).adjoint();
  return u;
}

CountingStats counting_stats(const BinReducedState& mu2, const MzConfig& config) {
  if (mu2.n_bins != 2 || mu2.data.rows() != 4 || mu2.data.cols() != 4)
    throw std::invalid_argument("counting_stats: a two-bin state is required");
  const StateCheck chk = check_state(mu2.data);
  if (!chk.ok(StateTolerance{1e-10, 1e-8, 1e-8})) {
    std::ostringstream os;
    os << "counting_stats: invalid bin state (hermiticity " << chk.hermiticity_error << ", trace "
       << chk.trace_error << ", min eigenvalue " << chk.min_eigenvalue << ")";
    throw NumericalError(os.str());
  }
  const Matrix u = output_modes(config);
  const Matrix b1 = bin_annihilator(2, 0), b2 = bin_annihilator(2, 1);
  // Vacuum inputs annihilate to the right, so only the signal part survives.
  const Matrix a4 = u(0, 0) * b1 + u(0, 1) * b2;
  const Matrix a5 = u(1, 0) * b1 + u(1, 1) * b2;
  auto ev = [&](const Matrix& op) { return expectation(op, mu2.data).real(); };
  const Matrix n4 = a4.adjoint() * a4, n5 = a5.adjoint() * a5;
  CountingStats s;
  s.mean_n4 = ev(n4);
  s.mean_n5 = ev(n5);
  s.mean_nd = s.mean_n5 - s.mean_n4;
  s.var_n4 = ev(a4.adjoint() * a4.adjoint() * a4 * a4) + s.mean_n4 - s.mean_n4 * s.mean_n4;
  s.var_n5 = ev(a5.adjoint() * a5.adjoint() * a5 * a5) + s.mean_n5 - s.mean_n5 * s.mean_n5;
  const double cov = ev(a4.adjoint() * a5.adjoint() * a5 * a4) - s.mean_n4 * s.mean_n5;
  s.var_nd = s.var_n4 + s.var_n5 - 2.0 * cov;
  return s;
}

EstimationError error_from_moments(Observable obs, double mean, double variance, double derivative) {
  EstimationError e;
  e.observable = obs;
  e.mean = mean;
  e.variance = variance;
  e.derivative = derivative;
  const double d2 = derivative * derivative;
  if (d2 == 0.0 || !std::isfinite(variance / d2)) {
    e.value = std::numeric_limits<double>::infinity();
    e.insensitive = true;
  } else {
    e.value = variance / d2;
  }
  return e;
}

namespace {

double pick_mean(const CountingStats& s, Observable o) {
  return o == Observable::Nd ? s.mean_nd : o == Observable::N4 ? s.mean_n4 : s.mean_n5;
}

double pick_var(const CountingStats& s, Observable o) {
  return o == Observable::Nd ? s.var_nd : o == Observable::N4 ? s.var_n4 : s.var_n5;
}

std::vector<CountingStats> exact_stats(const ModelParams& params, const Preparation& prep,
                                       const std::vector<double>& taus, double dt) {
  DiscreteChannel channel(params, dt, KrausMode::ExactUnitary);
  long n1 = 1;
  DickeLadderState rho(channel.layout_ptr());
  if (prep.stationary) {
    rho = channel.stationary();
  } else {
    n1 = std::max(1L, std::lround(prep.t1 / dt));
    rho = channel.power(DickeLadderState::ground(channel.layout_ptr()), n1 - 1);
  }
  std::vector<long> gaps;
  for (double tau : taus) gaps.push_back(std::lround(tau / dt));
  std::vector<CountingStats> out;
  for (const auto& mu : two_bin_exact_scan(channel, rho, n1, gaps))
    out.push_back(counting_stats(mu, MzConfig{0.0, mu.schedule}));
  return out;
}

std::vector<CountingStats> analytic_stats(const ModelParams& params, const Preparation& prep,
                                          const std::vector<double>& taus, double dt,
                                          const SensingOptions& opts) {
  const auto gen = build_permsym_liouvillian(params, opts.permsym);
  const DickeLadderState rho = prepare_state(gen, prep);
  const double t1 = prep.stationary ? 0.0 : prep.t1;
  const auto g = two_time_correlation(gen, rho, taus, CorrelationKind::PlusTauMinus, t1);
  const BlockOperator sp = BlockOperator::collective(gen.layout(), SpinComponent::Plus);
  const BlockOperator sm = BlockOperator::collective(gen.layout(), SpinComponent::Minus);
  const BlockOperator n_op = sp * sm;
  const double occ1 = rho.expect(n_op).real();
  std::vector<double> occ2(taus.size(), occ1);
  if (!prep.stationary) {
    std::vector<std::size_t> order(taus.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return taus[a] < taus[b]; });
    DickeLadderState x = rho;
    const LinearAction act = gen.action();
    double now = 0.0;
    for (std::size_t i : order) {
      x.data() = expmv(act, x.data(), taus[i] - now);
      now = taus[i];
      occ2[i] = x.expect(n_op).real();
    }
  }
  // Leading order in dt: second factorial moments are O(dt^2), so Var = mean
  // for N4 and N5 and Var(Nd) = <N4> + <N5>.
  const double gdt = params.gamma_coll * dt;
  std::vector<CountingStats> out;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double re_g = g.values[i].real();
    const double half_sigma = 0.5 * (occ1 + occ2[i]);
    CountingStats s;
    s.mean_nd = gdt * re_g;
    s.mean_n4 = 0.5 * gdt * (half_sigma - re_g);
    s.mean_n5 = 0.5 * gdt * (half_sigma + re_g);
    s.var_n4 = s.mean_n4;
    s.var_n5 = s.mean_n5;
    s.var_nd = gdt * half_sigma;
    out.push_back(s);
  }
  return out;
}

std::vector<CountingStats> stats_trace(const ModelParams& params, const Preparation& prep,
                                       const std::vector<double>& taus, double dt, ErrorSource source,
                                       const SensingOptions& opts) {
  for (double tau : taus)
    if (!(tau >= 0.0)) throw std::invalid_argument("estimation_error: negative lag");
  return source == ErrorSource::Exact ? exact_stats(params, prep, taus, dt)
                                      : analytic_stats(params, prep, taus, dt, opts);
}

}  // namespace

std::vector<std::vector<EstimationError>> estimation_error_scans(const ModelParams& params,
                                                                const Preparation& prep,
                                                                const std::vector<double>& tau_grid, double dt,
                                                                ErrorSource source,
                                                                const SensingOptions& opts) {
  params.validate();
  if (tau_grid.empty()) throw std::invalid_argument("estimation_error: empty lag grid");
  if (!(dt > 0.0)) throw std::invalid_argument("estimation_error: dt must be positive");
  const double h = opts.dg_ratio * omega_c(params);
  if (params.omega - h < 0.0) throw std::invalid_argument("estimation_error: omega - dg is negative");
  auto at = [&](double w) { return stats_trace(params.with_omega(w), prep, tau_grid, dt, source, opts); };
  const auto c = at(params.omega);
  const auto mm = at(params.omega - h), mp = at(params.omega + h);
  const auto hm = at(params.omega - 0.5 * h), hp = at(params.omega + 0.5 * h);
  std::vector<std::vector<EstimationError>> out;
  for (Observable obs : kObservables) {
    // A variance at round-off level means a null signal (e.g. N4 at zero lag
    // in the stationary state), not an infinitely precise one.
    double var_scale = 0.0;
    for (const auto& s : c) var_scale = std::max(var_scale, pick_var(s, obs));
    std::vector<EstimationError> trace;
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
      const double coarse = (pick_mean(mp[i], obs) - pick_mean(mm[i], obs)) / (2.0 * h);
      const double fine = (pick_mean(hp[i], obs) - pick_mean(hm[i], obs)) / h;
      const double var = pick_var(c[i], obs);
      EstimationError e = error_from_moments(obs, pick_mean(c[i], obs), var, (4.0 * fine - coarse) / 3.0);
      if (!(var > 1e-9 * var_scale)) {
        e.value = std::numeric_limits<double>::infinity();
        e.insensitive = true;
      }
      e.tau = tau_grid[i];
      e.t1 = prep.stationary ? 0.0 : prep.t1;
      e.dt = dt;
      e.source = source;
      trace.push_back(e);
    }
    out.push_back(std::move(trace));
  }
  return out;
}

std::vector<EstimationError> estimation_error_scan(const ModelParams& params, const Preparation& prep,
                                                   const std::vector<double>& tau_grid, double dt,
                                                   Observable obs, ErrorSource source,
                                                   const SensingOptions& opts) {
  return estimation_error_scans(params, prep, tau_grid, dt, source, opts)[static_cast<std::size_t>(obs)];
}

EstimationError estimation_error(const ModelParams& params, const Preparation& prep, double tau, double dt,
                                 Observable obs, ErrorSource source, const SensingOptions& opts) {
  return estimation_error_scan(params, prep, {tau}, dt, obs, source, opts).front();
}

SensingScan sensing_scan_from_trace(std::vector<EstimationError> trace) {
  if (trace.empty()) throw std::invalid_argument("sensing scan: empty trace");
  SensingScan s;
  s.trace = std::move(trace);
  std::vector<double> ys, xs;
  bool any = false;
  for (const auto& e : s.trace) {
    xs.push_back(e.tau);
    ys.push_back(e.value);
    any = any || !e.insensitive;
  }
  if (!any) throw NumericalError("optimal_sensing_scan: every lag on the grid is insensitive");
  const std::size_t i = static_cast<std::size_t>(std::min_element(ys.begin(), ys.end()) - ys.begin());
  s.argmin = i;
  s.tau_star = xs[i];
  s.error_star = ys[i];
  if (i > 0 && i + 1 < ys.size() && std::isfinite(ys[i - 1]) && std::isfinite(ys[i + 1])) {
    // Refine -error so the concave-vertex helper applies.
    std::vector<double> neg(ys.size(), 0.0);
    for (std::size_t k = i - 1; k <= i + 1; ++k) neg[k] = -ys[k];
    const auto [x, y] = refine_extremum(xs, neg, i);
    s.tau_star = x;
    s.error_star = std::min(-y, ys[i]);
  }
  return s;
}

SensingScan optimal_sensing_scan(const ModelParams& params, const Preparation& prep,
                                 const std::vector<double>& tau_grid, double dt, Observable obs,
                                 ErrorSource source, const SensingOptions& opts) {
  return sensing_scan_from_trace(estimation_error_scan(params, prep, tau_grid, dt, obs, source, opts));
}

std::vector<SensingScan> optimal_sensing_scans(const ModelParams& params, const Preparation& prep,
                                               const std::vector<double>& tau_grid, double dt,
                                               ErrorSource source, const SensingOptions& opts) {
  std::vector<SensingScan> out;
  for (auto& trace : estimation_error_scans(params, prep, tau_grid, dt, source, opts))
    out.push_back(sensing_scan_from_trace(std::move(trace)));
  return out;
}

std::vector<double> local_minima(const SensingScan& scan) {
  std::vector<double> out;
  const auto& t = scan.trace;
  for (std::size_t i = 1; i + 1 < t.size(); ++i)
    if (t[i].value < t[i - 1].value && t[i].value <= t[i + 1].value) out.push_back(t[i].tau);
  return out;
}

double first_sy_maximum(const ModelParams& params, int points, double horizon) {
  if (points < 3 || !(horizon > 0.0)) throw std::invalid_argument("first_sy_maximum: bad scan arguments");
  const auto gen = build_permsym_liouvillian(params);
  DickeLadderState x = DickeLadderState::ground(gen.layout_ptr());
  const LinearAction act = gen.action();
  const double h = horizon / params.gamma_coll / static_cast<double>(points - 1);
  std::vector<double> ts, ys;
  for (int i = 0; i < points; ++i) {
    if (i > 0) x.data() = expmv(act, x.data(), h);
    ts.push_back(h * i);
    ys.push_back(x.expect(SpinComponent::Y).real());
    if (i >= 2 && ys[i - 1] > ys[i - 2] && ys[i - 1] >= ys[i]) return refine_extremum(ts, ys, i - 1).first;
  }
  throw NumericalError("first_sy_maximum: no interior maximum of <S_y> within the scan horizon");
}

const char* to_string(Observable o) {
  return o == Observable::Nd ? "Nd" : o == Observable::N4 ? "N4" : "N5";
}

const char* to_string(ErrorSource s) { return s == ErrorSource::Exact ? "exact" : "short_time_analytic"; }

Observable parse_observable(const std::string& s) {
  if (s == "Nd" || s == "nd") return Observable::Nd;
  if (s == "N4" || s == "n4") return Observable::N4;
  if (s == "N5" || s == "n5") return Observable::N5;
  throw std::invalid_argument("unknown observable '" + s + "' (expected Nd, N4 or N5)");
}

}  // namespace dicke
