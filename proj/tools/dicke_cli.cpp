// Command-line front end: one subcommand per computation, artifacts written
// under --out. Exit status 0 on success, 2 when a sweep has failed points,
// 1 on any fatal error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dicke/dynamics.hpp"
#include "dicke/harness.hpp"
#include "dicke/interferometer.hpp"
#include "dicke/metrology.hpp"
#include "dicke/permsym.hpp"
#include "dicke/timebin.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Global {
  std::string config;
  std::string out = ".";
  int workers = 1;
  std::string formats = "csv,json";
};

struct PointArgs {
  int n = 10;
  double omega_ratio = 2.0;
  double gamma_loc_ratio = 0.0;
  double dt = 0.0;  // 0: default per N
  double t1 = -1.0; // < 0: stationary
  double tau_max = 3.0;
  int per_period = 40;

  dicke::ModelParams params() const { return dicke::ModelParams::at_ratio(n, omega_ratio, 1.0, gamma_loc_ratio); }
  double step() const { return dt > 0.0 ? dt : dicke::default_dt(n); }
  dicke::Preparation prep() const { return t1 < 0.0 ? dicke::Preparation{true, 0.0} : dicke::Preparation{false, t1}; }
};

void add_point_options(CLI::App* sub, PointArgs& a, bool lags) {
  sub->add_option("-n,--particles", a.n, "Number of atoms N")->check(CLI::PositiveNumber);
  sub->add_option("-w,--omega-ratio", a.omega_ratio, "Drive omega / omega_c");
  sub->add_option("-g,--gamma-loc-ratio", a.gamma_loc_ratio, "Local decay gamma / Gamma");
  sub->add_option("--dt", a.dt, "Time-bin duration Gamma dt (default min(2.5e-5, 1e-3/N))");
  sub->add_option("--t1", a.t1, "Preparation time Gamma t1 from the ground state (default: stationary)");
  if (lags) {
    sub->add_option("--tau-max", a.tau_max, "Largest lag Gamma tau");
    sub->add_option("--per-period", a.per_period, "Lag samples per mean-field period");
  }
}

bool wants(const Global& g, const std::string& fmt) {
  std::stringstream ss(g.formats);
  std::string item;
  while (std::getline(ss, item, ','))
    if (item == fmt) return true;
  return false;
}

fs::path out_path(const Global& g, const std::string& file) {
  fs::create_directories(g.out);
  return fs::path(g.out) / file;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return f;
}

void write_text(const fs::path& p, const std::string& s) {
  auto f = open_out(p);
  f << s;
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int cmd_ops(const Global& g, const PointArgs& a) {
  const auto ops = dicke::build_collective_ops(a.n);
  const std::pair<const char*, const dicke::Matrix*> list[] = {
      {"sx", &ops.s_x}, {"sy", &ops.s_y}, {"sz", &ops.s_z}, {"splus", &ops.s_plus}, {"sminus", &ops.s_minus}};
  for (const auto& [name, m] : list) {
    const auto p = out_path(g, std::string("op_") + name + "_N" + std::to_string(a.n) + ".csv");
    auto f = open_out(p);
    dicke::write_matrix_csv(f, *m);
    std::cout << p.string() << "\n";
  }
  return 0;
}

int cmd_steady(const Global& g, const PointArgs& a) {
  const auto params = a.params();
  const auto gen = dicke::build_permsym_liouvillian(params);
  const auto rho = dicke::steady_state(gen);
  json j;
  j["params"] = params.describe();
  const double n = a.n;
  j["sx_over_n"] = rho.expect(dicke::SpinComponent::X).real() / n;
  j["sy_over_n"] = rho.expect(dicke::SpinComponent::Y).real() / n;
  j["sz_over_n"] = rho.expect(dicke::SpinComponent::Z).real() / n;
  j["incoherent_intensity"] = dicke::incoherent_intensity(rho, params.gamma_coll);
  j["trace"] = rho.trace().real();
  std::cout << j.dump(2) << "\n";
  if (gen.layout().sectors() == 1) {
    const auto p = out_path(g, "steady_N" + std::to_string(a.n) + ".csv");
    auto f = open_out(p);
    dicke::write_matrix_csv(f, rho.maximal_block());
  }
  return 0;
}

int cmd_spectrum(const Global& g, const PointArgs& a) {
  const auto params = a.params();
  if (params.gamma_loc > 0.0) throw std::invalid_argument("spectrum: only the collective generator is supported");
  const auto sd = dicke::spectral_decomposition(dicke::build_liouvillian(params));
  const auto p = out_path(g, "spectrum_N" + std::to_string(a.n) + ".csv");
  auto f = open_out(p);
  f << "# " << params.describe() << "\nindex,re,im\n";
  for (std::size_t i = 0; i < sd.eigenvalues.size(); ++i)
    f << i << ',' << num(sd.eigenvalues[i].real()) << ',' << num(sd.eigenvalues[i].imag()) << '\n';
  json j;
  j["gap"] = sd.gap;
  j["relax_time"] = sd.relax_time;
  if (sd.gamma_1) j["gamma_1"] = *sd.gamma_1;
  if (sd.gamma_2) j["gamma_2"] = *sd.gamma_2;
  if (sd.gamma_2) j["omega_2"] = sd.omega_2;
  j["borderline"] = sd.borderline;
  j["csv"] = p.string();
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_bins(const Global& g, const PointArgs& a, const std::vector<double>& taus, const std::string& source) {
  const auto params = a.params();
  const double dt = a.step();
  std::vector<dicke::BinReducedState> states;
  if (source == "analytic") {
    const auto gen = dicke::build_permsym_liouvillian(params);
    const auto rho = dicke::prepare_state(gen, a.prep());
    const double t1 = a.t1 < 0.0 ? 0.0 : a.t1;
    states.push_back(dicke::one_bin_analytic(gen, rho, dt, t1));
    for (auto& s : dicke::two_bin_analytic_scan(gen, rho, dt, taus, t1)) states.push_back(std::move(s));
  } else if (source == "exact") {
    const dicke::DiscreteChannel channel(params, dt);
    long n1 = 1;
    dicke::DickeLadderState rho(channel.layout_ptr());
    if (a.t1 < 0.0) {
      rho = channel.stationary();
    } else {
      n1 = std::max(1L, std::lround(a.t1 / dt));
      rho = channel.power(dicke::DickeLadderState::ground(channel.layout_ptr()), n1 - 1);
    }
    states.push_back(dicke::reduce_to_bins(dicke::retain_bins_from(channel, rho, {dt, n1, n1 + 1}, 1)));
    std::vector<long> gaps;
    for (double t : taus) gaps.push_back(std::lround(t / dt));
    for (auto& s : dicke::two_bin_exact_scan(channel, rho, n1, gaps)) states.push_back(std::move(s));
  } else {
    throw std::invalid_argument("bins: --source must be exact or analytic");
  }
  const auto p = out_path(g, "bins_N" + std::to_string(a.n) + "_" + source + ".csv");
  dicke::write_bin_states_csv(p.string(), states, params);
  std::cout << p.string() << "\n";
  return 0;
}

int cmd_qfi1(const PointArgs& a) {
  const auto q = dicke::qfi_one_bin(a.params(), a.prep(), a.step());
  json j;
  j["params"] = a.params().describe();
  j["dt"] = a.step();
  j["qfi_per_time"] = q.per_time;
  j["convergence"] = q.convergence;
  j["flagged"] = q.flagged;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_qfi2(const Global& g, const PointArgs& a) {
  const auto params = a.params();
  const auto grid = dicke::tau_grid_for(params, a.tau_max, a.per_period);
  const auto s = dicke::qfi_vs_tau(params, a.prep(), grid, a.step());
  const std::string stem = "qfi2_N" + std::to_string(a.n);
  {
    auto f = open_out(out_path(g, stem + ".csv"));
    f << "# " << params.describe() << " dt=" << num(a.step()) << "\ntau,qfi_per_time,convergence,flagged\n";
    for (const auto& pt : s.points)
      f << num(pt.tau) << ',' << num(pt.qfi.per_time) << ',' << num(pt.qfi.convergence) << ','
        << (pt.qfi.flagged ? 1 : 0) << '\n';
  }
  if (wants(g, "svg")) {
    dicke::PlotSpec plot{"two-bin QFI per time, " + params.describe(), "Gamma tau", "F / dt", false, false, {}, {}};
    dicke::PlotSeries series{"QFI", {}, {}, false};
    for (const auto& pt : s.points) {
      series.xs.push_back(pt.tau);
      series.ys.push_back(pt.qfi.per_time);
    }
    plot.series.push_back(series);
    write_text(out_path(g, stem + ".svg"), dicke::render_svg(plot));
  }
  json j;
  j["tau_star"] = s.tau_star;
  j["qfi_per_time_star"] = s.per_time_star;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_mz(const Global& g, const PointArgs& a, const std::string& source_name) {
  const auto params = a.params();
  const double dt = a.step();
  const auto source =
      source_name == "exact" ? dicke::ErrorSource::Exact : dicke::ErrorSource::ShortTimeAnalytic;
  if (source_name != "exact" && source_name != "analytic")
    throw std::invalid_argument("mz: --source must be exact or analytic");
  const auto grid = dicke::tau_grid_for(params, a.tau_max, a.per_period);
  const auto scans = dicke::optimal_sensing_scans(params, a.prep(), grid, dt, source);
  const auto qfi = dicke::qfi_vs_tau(params, a.prep(), grid, dt);
  const std::string stem = "mz_N" + std::to_string(a.n);
  auto f = open_out(out_path(g, stem + ".csv"));
  f << "# " << params.describe() << " dt=" << num(dt) << " source=" << dicke::to_string(source) << "\n";
  f << "observable,t1,tau,mean,var,error,crb\n";
  json j = json::array();
  dicke::PlotSpec plot{"estimation error, " + params.describe(), "Gamma tau", "error * dt", false, true, {}, {}};
  for (std::size_t k = 0; k < scans.size(); ++k) {
    dicke::PlotSeries series{dicke::to_string(dicke::kObservables[k]), {}, {}, false};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto& e = scans[k].trace[i];
      const double crb = 1.0 / qfi.points[i].qfi.value;
      f << dicke::to_string(e.observable) << ',' << num(e.t1) << ',' << num(e.tau) << ',' << num(e.mean) << ','
        << num(e.variance) << ',' << num(e.value) << ',' << num(crb) << '\n';
      series.xs.push_back(e.tau);
      series.ys.push_back(e.value * dt);
    }
    plot.series.push_back(series);
    j.push_back({{"observable", dicke::to_string(dicke::kObservables[k])},
                 {"tau_star", scans[k].tau_star},
                 {"error_star", scans[k].error_star},
                 {"crb_at_tau_star", 1.0 / qfi.points[scans[k].argmin].qfi.value}});
  }
  if (wants(g, "svg")) {
    dicke::PlotSeries bound{"CRB", {}, {}, true};
    for (const auto& pt : qfi.points) {
      bound.xs.push_back(pt.tau);
      bound.ys.push_back(1.0 / pt.qfi.per_time);
    }
    plot.series.push_back(bound);
    write_text(out_path(g, stem + ".svg"), dicke::render_svg(plot));
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_localdecay(const Global& g, const PointArgs& a, double t_max, int points) {
  const auto with = a.params();
  const auto without = dicke::ModelParams::at_ratio(a.n, a.omega_ratio);
  const auto gen_l = dicke::build_permsym_liouvillian(with);
  const auto gen_0 = dicke::build_permsym_liouvillian(without);
  auto xl = dicke::DickeLadderState::ground(gen_l.layout_ptr());
  auto x0 = dicke::DickeLadderState::ground(gen_0.layout_ptr());
  const double h = t_max / (points - 1);
  auto f = open_out(out_path(g, "localdecay_N" + std::to_string(a.n) + ".csv"));
  f << "# " << with.describe() << "\nt,sx,sy,sz,sx_ref,sy_ref,sz_ref\n";
  const double n = a.n;
  for (int i = 0; i < points; ++i) {
    if (i > 0) {
      xl = dicke::evolve_permsym(gen_l, xl, h);
      x0 = dicke::evolve_permsym(gen_0, x0, h);
    }
    using dicke::SpinComponent;
    f << num(h * i) << ',' << num(xl.expect(SpinComponent::X).real() / n) << ','
      << num(xl.expect(SpinComponent::Y).real() / n) << ',' << num(xl.expect(SpinComponent::Z).real() / n) << ','
      << num(x0.expect(SpinComponent::X).real() / n) << ',' << num(x0.expect(SpinComponent::Y).real() / n) << ','
      << num(x0.expect(SpinComponent::Z).real() / n) << '\n';
  }
  json j;
  j["first_sy_maximum"] = dicke::first_sy_maximum(with);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const Global& g, CLI::App* sub) {
  if (g.config.empty()) throw std::invalid_argument("sweep: --config <file> is required");
  auto spec = dicke::load_sweep_spec(g.config);
  if (sub->get_parent()->count("--out")) spec.out_dir = g.out;
  if (sub->get_parent()->count("--workers")) spec.workers = g.workers;
  if (sub->get_parent()->count("--format")) {
    spec.formats.clear();
    std::stringstream ss(g.formats);
    std::string item;
    while (std::getline(ss, item, ',')) spec.formats.push_back(item);
  }
  const auto table = dicke::run_sweep(spec);
  for (const auto& p : dicke::emit_outputs(spec, table)) std::cout << p << "\n";
  if (table.failures() > 0) {
    std::cerr << table.failures() << " of " << table.rows.size() << " grid points failed\n";
    return 2;
  }
  return 0;
}

int cmd_fit(const std::string& csv, int largest) {
  std::ifstream f(csv);
  if (!f) throw std::runtime_error("cannot open " + csv);
  const auto table = dicke::read_csv(f);
  json j = json::array();
  for (const auto& grp : dicke::scaling_groups(table, largest)) {
    if (!grp.fit) continue;
    j.push_back({{"group", grp.label},
                 {"exponent", grp.fit->exponent},
                 {"stderr", grp.fit->stderr_exponent},
                 {"points_used", grp.fit->points_used},
                 {"restriction", grp.fit->restriction}});
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metrology with the emission of a driven collective spin ensemble"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--config", g.config, "INI sweep description")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--workers", g.workers, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--format", g.formats, "Comma-separated output formats: csv,json,svg");

  PointArgs a;
  std::vector<double> taus{0.0, 0.5, 1.0};
  std::string source = "analytic";
  double t_max = 5.0;
  int points = 501;
  std::string csv;
  int largest = 3;

  auto* ops = app.add_subcommand("ops", "Write collective spin operators as CSV");
  ops->add_option("-n,--particles", a.n, "Number of atoms N")->check(CLI::PositiveNumber);
  auto* steady = app.add_subcommand("steady", "Stationary state and collective expectations");
  add_point_options(steady, a, false);
  auto* spectrum = app.add_subcommand("spectrum", "Liouvillian eigenvalues and slow decay rates");
  add_point_options(spectrum, a, false);
  auto* bins = app.add_subcommand("bins", "One- and two-bin reduced states");
  add_point_options(bins, a, false);
  bins->add_option("--tau", taus, "Lags Gamma tau for the two-bin states");
  bins->add_option("--source", source, "exact or analytic");
  auto* qfi1 = app.add_subcommand("qfi1", "One-bin QFI per unit time");
  add_point_options(qfi1, a, false);
  auto* qfi2 = app.add_subcommand("qfi2", "Two-bin QFI per unit time versus lag");
  add_point_options(qfi2, a, true);
  auto* mz = app.add_subcommand("mz", "Interferometer counting errors versus lag with the CRB");
  add_point_options(mz, a, true);
  mz->add_option("--source", source, "exact or analytic");
  auto* local = app.add_subcommand("localdecay", "Magnetization transient with and without local decay");
  add_point_options(local, a, false);
  local->add_option("--t-max", t_max, "Largest Gamma t");
  local->add_option("--points", points, "Samples")->check(CLI::Range(2, 1000000));
  auto* sweep = app.add_subcommand("sweep", "Run an INI sweep description (--config)");
  auto* fit = app.add_subcommand("fit", "Scaling fits of a results CSV");
  fit->add_option("csv", csv, "Results CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--largest", largest, "Fit only the largest N points (0: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    if (*ops) return cmd_ops(g, a);
    if (*steady) return cmd_steady(g, a);
    if (*spectrum) return cmd_spectrum(g, a);
    if (*bins) return cmd_bins(g, a, taus, source);
    if (*qfi1) return cmd_qfi1(a);
    if (*qfi2) return cmd_qfi2(g, a);
    if (*mz) return cmd_mz(g, a, source);
    if (*local) return cmd_localdecay(g, a, t_max, points);
    if (*sweep) return cmd_sweep(g, sweep);
    if (*fit) return cmd_fit(csv, largest);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
