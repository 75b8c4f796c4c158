#pragma once

#include <string>
#include <vector>

#include "dicke/metrology.hpp"
#include "dicke/timebin.hpp"

namespace dicke {

/// Balanced Mach-Zehnder probing bins n1 and n2. The short arm carries bin
/// n2 with phase 0 and the long arm bin n1 with phase delta_phi.
struct MzConfig {
  double delta_phi = 0.0;
  BinSchedule schedule;

  void validate() const;
};

/// Heisenberg-picture map (a4, a5, d6, d7)^T = U (b_n1, b_n2, c_n1, c_n2)^T.
/// Rows 0 and 1 are the detected output arms; rows 2 and 3 complete U to a
/// unitary and are never detected.
Matrix output_modes(const MzConfig& config);

struct CountingStats {
  double mean_n4 = 0.0, mean_n5 = 0.0, mean_nd = 0.0;
  double var_n4 = 0.0, var_n5 = 0.0, var_nd = 0.0;
};

/// Means and variances of N4 = a4^dagger a4, N5 and Nd = N5 - N4 on a
/// two-bin state. Only normal-ordered moments enter, so the vacuum inputs
/// drop out: <N^2> = <a^dagger a^dagger a a> + <a^dagger a>.
CountingStats counting_stats(const BinReducedState& mu2, const MzConfig& config);

enum class Observable { Nd, N4, N5 };
inline constexpr Observable kObservables[] = {Observable::Nd, Observable::N4, Observable::N5};
enum class ErrorSource { Exact, ShortTimeAnalytic };

/// Single-shot error Var(A) / |d<A>/d omega|^2 (units of omega^2). A zero
/// derivative gives value = +inf and insensitive = true.
struct EstimationError {
  Observable observable = Observable::Nd;
  double value = 0.0;
  double tau = 0.0;
  double t1 = 0.0;
  double dt = 0.0;  // value * dt is dt-independent at leading order
  ErrorSource source = ErrorSource::ShortTimeAnalytic;
  double mean = 0.0;
  double variance = 0.0;
  double derivative = 0.0;
  bool insensitive = false;
};

/// Var / derivative^2 with the insensitive-point convention.
EstimationError error_from_moments(Observable obs, double mean, double variance, double derivative);

struct SensingOptions {
  double dg_ratio = 1e-4;  // omega step in units of omega_c, as for the QFI
  PermSymOptions permsym;
};

/// Errors on a lag grid. Exact: counting statistics of exact-discrete bin
/// states with a Richardson central difference in omega. ShortTimeAnalytic:
/// leading order in dt, Var = mean and
///   <Nd> = Gamma dt Re G,  <N4,5> = (Gamma dt / 2)(Sigma/2 -+ Re G),
/// with G = <S_+(t1 + tau) S_-(t1)>, Sigma = <S_+S_->_{t1} + <S_+S_->_{t1+tau}.
std::vector<EstimationError> estimation_error_scan(const ModelParams& params, const Preparation& prep,
                                                   const std::vector<double>& tau_grid, double dt,
                                                   Observable obs, ErrorSource source,
                                                   const SensingOptions& opts = {});

/// All three observables from one set of propagations, ordered as kObservables.
std::vector<std::vector<EstimationError>> estimation_error_scans(const ModelParams& params,
                                                                const Preparation& prep,
                                                                const std::vector<double>& tau_grid, double dt,
                                                                ErrorSource source,
                                                                const SensingOptions& opts = {});

EstimationError estimation_error(const ModelParams& params, const Preparation& prep, double tau, double dt,
                                 Observable obs, ErrorSource source, const SensingOptions& opts = {});

struct SensingScan {
  std::vector<EstimationError> trace;
  std::size_t argmin = 0;
  double tau_star = 0.0;    // refined by a local quadratic fit
  double error_star = 0.0;  // refined minimum
};

/// Minimum of the error over the lag grid. Throws NumericalError when every
/// grid point is insensitive.
SensingScan optimal_sensing_scan(const ModelParams& params, const Preparation& prep,
                                 const std::vector<double>& tau_grid, double dt, Observable obs,
                                 ErrorSource source = ErrorSource::ShortTimeAnalytic,
                                 const SensingOptions& opts = {});

/// Same for all observables, ordered as kObservables.
std::vector<SensingScan> optimal_sensing_scans(const ModelParams& params, const Preparation& prep,
                                               const std::vector<double>& tau_grid, double dt,
                                               ErrorSource source = ErrorSource::ShortTimeAnalytic,
                                               const SensingOptions& opts = {});

/// Minimum and refinement of a precomputed trace.
SensingScan sensing_scan_from_trace(std::vector<EstimationError> trace);

/// Lags of the interior local minima of a trace.
std::vector<double> local_minima(const SensingScan& scan);

/// Time of the first maximum of <S_y>(t) from the all-ground state, from a
/// scan of `points` samples over Gamma t in [0, horizon] refined by a
/// parabola. Throws NumericalError when the scan has no interior maximum.
double first_sy_maximum(const ModelParams& params, int points = 1000, double horizon = 1.0);

const char* to_string(Observable o);
const char* to_string(ErrorSource s);
Observable parse_observable(const std::string& s);

}  // namespace dicke
