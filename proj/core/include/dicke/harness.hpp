#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dicke/interferometer.hpp"
#include "dicke/model.hpp"

namespace dicke {

/// Version string stamped into every result row and file header.
const char* code_version();

enum class SweepTask { Qfi1, Qfi2, MzError, LocalDecay, Convergence };

/// How the preparation time t1 is chosen per grid point.
enum class T1Policy { Stationary, Fixed, FirstSyMaximum };

/// A rectangular grid of model points and the quantity computed at each.
/// Grid axes, slowest first: N, omega/omega_c, gamma_loc/Gamma, dt, t1
/// (Fixed policy only), observable (MzError only).
struct SweepSpec {
  std::string name = "sweep";
  SweepTask task = SweepTask::Qfi1;
  std::vector<int> n_list;
  std::vector<double> omega_ratios;
  std::vector<double> gamma_loc_ratios{0.0};
  std::vector<double> dt_list;  // empty: default_dt(N) per point
  T1Policy t1_policy = T1Policy::Stationary;
  std::vector<double> t1_list;  // Gamma t1 values for the Fixed policy
  double tau_max = 3.0;         // lag window in units of 1/Gamma
  int tau_per_period = 40;
  std::vector<Observable> observables{Observable::Nd, Observable::N4, Observable::N5};
  double dg_ratio = 1e-4;
  int fit_largest = 3;
  int workers = 1;
  std::string out_dir = ".";
  std::vector<std::string> formats{"csv", "json"};

  void validate() const;
};

/// Gamma dt = min(2.5e-5, 1e-3 / N), keeping N Gamma dt small.
double default_dt(int n_particles, double gamma_coll = 1.0);

struct GridPoint {
  std::size_t index = 0;
  int n = 0;
  double omega_ratio = 0.0;
  double gamma_loc_ratio = 0.0;
  double dt = 0.0;
  std::optional<double> t1;  // Fixed policy only
  std::optional<Observable> observable;
};

/// Grid points in row order.
std::vector<GridPoint> expand_grid(const SweepSpec& spec);

/// One output row. Missing quantities are NaN. Meaning of value/aux per task:
///   qfi1         value = one-bin QFI per time
///   qfi2         value = max two-bin QFI per time, aux = two-bin QFI per time at tau = 0
///   mz_error     value = min error * dt, aux = value / crb, crb = 1 / (QFI per time at tau*)
///   localdecay   value = max two-bin QFI per time from the ground-state start
///   convergence  value = relative deviation of <b_n1^dagger b_n2> (exact vs analytic) at tau_max,
///                aux = same for the one-bin occupation
struct ResultRow {
  std::size_t index = 0;
  std::string task;
  int n = 0;
  double omega_ratio = 0.0;
  double gamma_loc_ratio = 0.0;
  double dt = 0.0;
  double t1 = 0.0;
  double dg = 0.0;
  std::string observable;  // empty when not applicable
  double value = 0.0;
  double aux = 0.0;
  double tau_star = 0.0;
  double crb = 0.0;
  double convergence = 0.0;
  bool flagged = false;
  std::string status = "ok";  // "ok" or "error"
  std::string message;
  std::string code_version;

  bool operator==(const ResultRow& o) const;
};

struct ResultTable {
  std::string name;
  std::vector<ResultRow> rows;

  std::size_t failures() const;
  bool operator==(const ResultTable& o) const { return name == o.name && rows == o.rows; }
};

/// Computes one grid point by direct module calls. Throws on failure.
ResultRow evaluate_point(const SweepSpec& spec, const GridPoint& point);

/// Evaluates every grid point on `spec.workers` threads. Row order follows
/// the grid regardless of scheduling; a failing point yields a row with
/// status "error" and the exception text.
ResultTable run_sweep(const SweepSpec& spec);

struct FitResult {
  double exponent = 0.0;
  double intercept = 0.0;  // log prefactor
  double stderr_exponent = 0.0;
  std::size_t points_used = 0;
  std::string restriction;
};

/// Least-squares slope of log y against log x over the `restrict_largest`
/// largest x (all points when <= 0). Rejects non-positive data and fewer
/// than two points after the restriction.
FitResult fit_scaling(const std::vector<double>& xs, const std::vector<double>& ys, int restrict_largest = 0);

/// Rows sharing every grid coordinate except N, fitted against N. Without
/// the spec, explicit dt and t1 axes cannot be told apart from per-N values
/// and are ignored in the grouping.
struct ScalingGroup {
  std::string label;
  double omega_ratio = 0.0;
  double gamma_loc_ratio = 0.0;
  std::string observable;
  std::vector<double> ns, values;
  std::optional<FitResult> fit;
};
std::vector<ScalingGroup> scaling_groups(const ResultTable& table, int restrict_largest);
std::vector<ScalingGroup> scaling_groups(const SweepSpec& spec, const ResultTable& table);

/// Versioned CSV: a '#' header line, the column names, one line per row.
void write_csv(std::ostream& os, const ResultTable& table);
ResultTable read_csv(std::istream& is);

/// JSON summary with fits, optima and diagnostics.
std::string summary_json(const SweepSpec& spec, const ResultTable& table);

struct PlotSeries {
  std::string label;
  std::vector<double> xs, ys;
  bool dashed = false;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<PlotSeries> series;
  std::vector<std::string> annotations;
};

/// Self-contained SVG line plot.
std::string render_svg(const PlotSpec& plot);

/// Writes <out_dir>/<name>.csv always, <name>.json when "json" is listed and
/// <name>_<group>.svg log-log plots with fit lines when "svg" is listed.
/// Returns the written paths. I/O failures name the offending path.
std::vector<std::string> emit_outputs(const SweepSpec& spec, const ResultTable& table);

/// Matrix as CSV rows dim,row,col,re,im (one per entry, full precision).
void write_matrix_csv(std::ostream& os, const Matrix& m);
Matrix read_matrix_csv(std::istream& is);

/// INI sweep description; see README for the grammar.
SweepSpec parse_sweep_spec(std::istream& is);
SweepSpec load_sweep_spec(const std::string& path);

const char* to_string(SweepTask t);
SweepTask parse_task(const std::string& s);
const char* to_string(T1Policy p);

}  // namespace dicke
