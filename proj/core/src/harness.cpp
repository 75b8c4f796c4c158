#include "dicke/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/partitioner.h>
#include <tbb/task_arena.h>

#include "dicke/dynamics.hpp"
#include "dicke/metrology.hpp"

#ifndef DICKE_VERSION
#define DICKE_VERSION "unknown"
#endif

namespace dicke {

const char* code_version() { return DICKE_VERSION; }

namespace {

constexpr int kSchema = 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse " + what + " '" + s + "' as a number");
  }
  if (used != s.size()) throw std::invalid_argument("trailing characters in " + what + " '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  const double v = to_double(s, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw std::invalid_argument(what + " must be an integer: " + s);
  return static_cast<int>(v);
}

Preparation preparation_for(const SweepSpec& spec, const GridPoint& pt, const ModelParams& params) {
  switch (spec.t1_policy) {
    case T1Policy::Stationary:
      return Preparation{true, 0.0};
    case T1Policy::Fixed:
      return Preparation{false, *pt.t1 / params.gamma_coll};
    case T1Policy::FirstSyMaximum:
      return Preparation{false, first_sy_maximum(params)};
  }
  return {};
}

/// Sensing traces for all observables at one model point, shared by the
/// grid rows that differ only in the observable.
struct MzBundle {
  std::vector<SensingScan> scans;
  QfiScan qfi;
};

class MzMemo {
 public:
  std::shared_future<MzBundle> get(const std::string& key, const std::function<MzBundle()>& make) {
    std::promise<MzBundle> promise;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) return it->second;
      entries_.emplace(key, promise.get_future().share());
    }
    try {
      promise.set_value(make());
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.at(key);
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_future<MzBundle>> entries_;
};

ResultRow evaluate_with(const SweepSpec& spec, const GridPoint& pt, MzMemo& memo) {
  const ModelParams params = ModelParams::at_ratio(pt.n, pt.omega_ratio, 1.0, pt.gamma_loc_ratio);
  const double dt = pt.dt > 0.0 ? pt.dt : default_dt(pt.n, params.gamma_coll);
  const Preparation prep = preparation_for(spec, pt, params);
  ResultRow row;
  row.index = pt.index;
  row.task = to_string(spec.task);
  row.n = pt.n;
  row.omega_ratio = pt.omega_ratio;
  row.gamma_loc_ratio = pt.gamma_loc_ratio;
  row.dt = dt;
  row.t1 = prep.stationary ? kNaN : prep.t1;
  row.dg = spec.dg_ratio * omega_c(params);
  row.observable = pt.observable ? to_string(*pt.observable) : "";
  row.value = row.aux = row.tau_star = row.crb = row.convergence = kNaN;
  row.code_version = code_version();
  QfiOptions qopts;
  qopts.dg_ratio = spec.dg_ratio;
  const double tau_max = spec.tau_max / params.gamma_coll;

  switch (spec.task) {
    case SweepTask::Qfi1: {
      const QfiResult q = qfi_one_bin(params, prep, dt, qopts);
      row.value = q.per_time;
      row.convergence = q.convergence;
      row.flagged = q.flagged;
      break;
    }
    case SweepTask::Qfi2:
    case SweepTask::LocalDecay: {
      const auto grid = tau_grid_for(params, tau_max, spec.tau_per_period);
      const QfiScan s = qfi_vs_tau(params, prep, grid, dt, qopts);
      row.value = s.per_time_star;
      row.tau_star = s.tau_star;
      row.convergence = s.points[s.argmax].qfi.convergence;
      row.flagged = s.points[s.argmax].qfi.flagged;
      if (spec.task == SweepTask::Qfi2) row.aux = s.points.front().qfi.per_time;
      break;
    }
    case SweepTask::MzError: {
      const std::string key = fmt(pt.n) + "|" + fmt(pt.omega_ratio) + "|" + fmt(pt.gamma_loc_ratio) + "|" +
                              fmt(dt) + "|" + fmt(pt.t1.value_or(-1.0));
      const MzBundle& b = memo.get(key, [&] {
                                SensingOptions sopts;
                                sopts.dg_ratio = spec.dg_ratio;
                                const auto grid = tau_grid_for(params, tau_max, spec.tau_per_period);
                                return MzBundle{optimal_sensing_scans(params, prep, grid, dt,
                                                                      ErrorSource::ShortTimeAnalytic, sopts),
                                                qfi_vs_tau(params, prep, grid, dt, qopts)};
                              }).get();
      const SensingScan& s = b.scans[static_cast<std::size_t>(*pt.observable)];
      row.value = s.error_star * dt;
      row.tau_star = s.tau_star;
      const QfiResult& q = b.qfi.points[s.argmin].qfi;
      row.crb = q.per_time > 0.0 ? 1.0 / q.per_time : kNaN;
      row.aux = row.value / row.crb;
      row.convergence = q.convergence;
      row.flagged = q.flagged;
      break;
    }
    case SweepTask::Convergence: {
      const DiscreteChannel channel(params, dt, KrausMode::ExactUnitary);
      const auto gen = build_permsym_liouvillian(params);
      DickeLadderState rho_exact(channel.layout_ptr());
      long n1 = 1;
      if (prep.stationary) {
        rho_exact = channel.stationary();
      } else {
        n1 = std::max(1L, std::lround(prep.t1 / dt));
        rho_exact = channel.power(DickeLadderState::ground(channel.layout_ptr()), n1 - 1);
      }
      const long gap = std::lround(tau_max / dt);
      const BinReducedState ex2 = two_bin_exact_scan(channel, rho_exact, n1, {gap}).front();
      const BinReducedState ex1 =
          reduce_to_bins(retain_bins_from(channel, rho_exact, BinSchedule{dt, n1, n1 + 1}, 1));
      const DickeLadderState rho_an = prepare_state(gen, prep);
      const double t1 = prep.stationary ? 0.0 : prep.t1;
      const BinReducedState an2 = two_bin_analytic(gen, rho_an, dt, static_cast<double>(gap) * dt, t1);
      const BinReducedState an1 = one_bin_analytic(gen, rho_an, dt, t1);
      const Matrix cross = bin_annihilator(2, 0).adjoint() * bin_annihilator(2, 1);
      const Matrix occ = bin_annihilator(1, 0).adjoint() * bin_annihilator(1, 0);
      const cplx c_an = bin_expect(an2, cross);
      row.value = std::abs(bin_expect(ex2, cross) - c_an) / std::abs(c_an);
      const double o_an = bin_expect(an1, occ).real();
      row.aux = std::abs(bin_expect(ex1, occ).real() - o_an) / std::abs(o_an);
      row.tau_star = static_cast<double>(gap) * dt;
      break;
    }
  }
  return row;
}

}  // namespace

void SweepSpec::validate() const {
  if (n_list.empty()) throw std::invalid_argument("sweep: empty N list");
  if (omega_ratios.empty()) throw std::invalid_argument("sweep: empty omega_ratio list");
  if (gamma_loc_ratios.empty()) throw std::invalid_argument("sweep: empty gamma_loc_ratio list");
  for (int n : n_list)
    if (n < 1) throw std::invalid_argument("sweep: N must be >= 1");
  for (double w : omega_ratios)
    if (!(w > 0.0)) throw std::invalid_argument("sweep: omega_ratio must be positive");
  for (double g : gamma_loc_ratios)
    if (!(g >= 0.0)) throw std::invalid_argument("sweep: gamma_loc_ratio must be non-negative");
  for (double dt : dt_list)
    if (!(dt > 0.0)) throw std::invalid_argument("sweep: dt must be positive");
  if (t1_policy == T1Policy::Fixed && t1_list.empty())
    throw std::invalid_argument("sweep: fixed t1 policy needs a t1 list");
  for (double t : t1_list)
    if (!(t >= 0.0)) throw std::invalid_argument("sweep: t1 must be non-negative");
  if (task == SweepTask::LocalDecay && t1_policy == T1Policy::Stationary)
    throw std::invalid_argument("sweep: localdecay needs a transient t1 policy");
  if (task == SweepTask::MzError && observables.empty())
    throw std::invalid_argument("sweep: mz_error needs at least one observable");
  if (!(tau_max > 0.0) || tau_per_period < 3) throw std::invalid_argument("sweep: bad lag window");
  if (!(dg_ratio > 0.0)) throw std::invalid_argument("sweep: dg_ratio must be positive");
  if (workers < 1) throw std::invalid_argument("sweep: workers must be >= 1");
}

double default_dt(int n_particles, double gamma_coll) {
  if (n_particles < 1 || !(gamma_coll > 0.0)) throw std::invalid_argument("default_dt: bad arguments");
  return std::min(2.5e-5, 1e-3 / n_particles) / gamma_coll;
}

std::vector<GridPoint> expand_grid(const SweepSpec& spec) {
  spec.validate();
  const std::vector<double> dts = spec.dt_list.empty() ? std::vector<double>{0.0} : spec.dt_list;
  std::vector<std::optional<double>> t1s{std::nullopt};
  if (spec.t1_policy == T1Policy::Fixed) t1s.assign(spec.t1_list.begin(), spec.t1_list.end());
  std::vector<std::optional<Observable>> obs{std::nullopt};
  if (spec.task == SweepTask::MzError) obs.assign(spec.observables.begin(), spec.observables.end());
  std::vector<GridPoint> out;
  for (int n : spec.n_list)
    for (double w : spec.omega_ratios)
      for (double g : spec.gamma_loc_ratios)
        for (double dt : dts)
          for (const auto& t1 : t1s)
            for (const auto& o : obs) out.push_back(GridPoint{out.size(), n, w, g, dt, t1, o});
  return out;
}

bool ResultRow::operator==(const ResultRow& o) const {
  return index == o.index && task == o.task && n == o.n && same(omega_ratio, o.omega_ratio) &&
         same(gamma_loc_ratio, o.gamma_loc_ratio) && same(dt, o.dt) && same(t1, o.t1) && same(dg, o.dg) &&
         observable == o.observable && same(value, o.value) && same(aux, o.aux) && same(tau_star, o.tau_star) &&
         same(crb, o.crb) && same(convergence, o.convergence) && flagged == o.flagged && status == o.status &&
         message == o.message && code_version == o.code_version;
}

std::size_t ResultTable::failures() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.status != "ok"; }));
}

ResultRow evaluate_point(const SweepSpec& spec, const GridPoint& point) {
  MzMemo memo;
  return evaluate_with(spec, point, memo);
}

ResultTable run_sweep(const SweepSpec& spec) {
  const auto grid = expand_grid(spec);
  ResultTable table;
  table.name = spec.name;
  table.rows.resize(grid.size());
  MzMemo memo;
  auto run_one = [&](std::size_t i) {
    try {
      table.rows[i] = evaluate_with(spec, grid[i], memo);
    } catch (const std::exception& e) {
      ResultRow r;
      r.index = grid[i].index;
      r.task = to_string(spec.task);
      r.n = grid[i].n;
      r.omega_ratio = grid[i].omega_ratio;
      r.gamma_loc_ratio = grid[i].gamma_loc_ratio;
      r.dt = grid[i].dt > 0.0 ? grid[i].dt : default_dt(grid[i].n);
      r.t1 = grid[i].t1.value_or(kNaN);
      r.dg = r.value = r.aux = r.tau_star = r.crb = r.convergence = kNaN;
      r.observable = grid[i].observable ? to_string(*grid[i].observable) : "";
      r.status = "error";
      r.message = sanitize(e.what());
      r.code_version = code_version();
      table.rows[i] = r;
    }
  };
  if (spec.workers == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) run_one(i);
  } else {
    tbb::task_arena arena(spec.workers);
    arena.execute([&] {
      tbb::parallel_for(
          tbb::blocked_range<std::size_t>(0, grid.size(), 1),
          [&](const tbb::blocked_range<std::size_t>& r) {
            for (std::size_t i = r.begin(); i != r.end(); ++i) run_one(i);
          },
          tbb::simple_partitioner());
    });
  }
  return table;
}

FitResult fit_scaling(const std::vector<double>& xs, const std::vector<double>& ys, int restrict_largest) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_scaling: size mismatch");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(ys[i]))
      throw std::invalid_argument("fit_scaling: values must be positive and finite");
    pts.emplace_back(xs[i], ys[i]);
  }
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  FitResult f;
  if (restrict_largest > 0 && static_cast<std::size_t>(restrict_largest) < pts.size()) {
    pts.erase(pts.begin(), pts.end() - restrict_largest);
    f.restriction = "largest " + std::to_string(restrict_largest) + " points";
  } else {
    f.restriction = "all points";
  }
  if (pts.size() < 2) throw std::invalid_argument("fit_scaling: need at least two points");
  const double n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (std::log(x) - mx) * (std::log(x) - mx);
    sxy += (std::log(x) - mx) * (std::log(y) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_scaling: all x values coincide");
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  f.points_used = pts.size();
  if (pts.size() > 2) {
    double ssr = 0.0;
    for (const auto& [x, y] : pts) {
      const double r = std::log(y) - f.intercept - f.exponent * std::log(x);
      ssr += r * r;
    }
    f.stderr_exponent = std::sqrt(ssr / (n - 2.0) / sxx);
  }
  return f;
}

namespace {

std::vector<ScalingGroup> groups_for(const SweepSpec* spec, const ResultTable& table, int restrict_largest) {
  std::vector<GridPoint> grid;
  if (spec) grid = expand_grid(*spec);
  std::map<std::string, ScalingGroup> by_key;
  std::vector<std::string> order;
  for (const auto& r : table.rows) {
    std::string key = "w" + fmt(r.omega_ratio) + "_g" + fmt(r.gamma_loc_ratio);
    if (!r.observable.empty()) key += "_" + r.observable;
    if (r.index < grid.size()) {
      const GridPoint& p = grid[r.index];
      if (p.dt > 0.0) key += "_dt" + fmt(p.dt);
      if (p.t1) key += "_t" + fmt(*p.t1);
    }
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      ScalingGroup g;
      g.label = key;
      g.omega_ratio = r.omega_ratio;
      g.gamma_loc_ratio = r.gamma_loc_ratio;
      g.observable = r.observable;
      it = by_key.emplace(key, g).first;
      order.push_back(key);
    }
    if (r.status == "ok" && r.value > 0.0 && std::isfinite(r.value)) {
      it->second.ns.push_back(r.n);
      it->second.values.push_back(r.value);
    }
  }
  std::vector<ScalingGroup> out;
  for (const auto& k : order) {
    ScalingGroup g = by_key.at(k);
    std::vector<double> distinct = g.ns;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() >= 2 && distinct.size() == g.ns.size()) g.fit = fit_scaling(g.ns, g.values, restrict_largest);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

std::vector<ScalingGroup> scaling_groups(const ResultTable& table, int restrict_largest) {
  return groups_for(nullptr, table, restrict_largest);
}

std::vector<ScalingGroup> scaling_groups(const SweepSpec& spec, const ResultTable& table) {
  return groups_for(&spec, table, spec.fit_largest);
}

// ---------------------------------------------------------------------------

namespace {

const char* const kColumns =
    "index,task,n,omega_ratio,gamma_loc_ratio,dt,t1,dg,observable,value,aux,tau_star,crb,convergence,"
    "flagged,status,message,code_version";

}  // namespace

void write_csv(std::ostream& os, const ResultTable& table) {
  os << "# dicke-sense results schema=" << kSchema << " code=" << code_version() << " name=" << table.name
     << "\n";
  os << kColumns << "\n";
  for (const auto& r : table.rows) {
    os << r.index << ',' << r.task << ',' << r.n << ',' << fmt(r.omega_ratio) << ',' << fmt(r.gamma_loc_ratio)
       << ',' << fmt(r.dt) << ',' << fmt(r.t1) << ',' << fmt(r.dg) << ',' << r.observable << ',' << fmt(r.value)
       << ',' << fmt(r.aux) << ',' << fmt(r.tau_star) << ',' << fmt(r.crb) << ',' << fmt(r.convergence) << ','
       << (r.flagged ? 1 : 0) << ',' << r.status << ',' << sanitize(r.message) << ',' << r.code_version << "\n";
  }
}

ResultTable read_csv(std::istream& is) {
  ResultTable t;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# dicke-sense results", 0) != 0)
    throw std::invalid_argument("read_csv: missing results header line");
  const std::string schema_tag = "schema=" + std::to_string(kSchema);
  if (line.find(schema_tag + " ") == std::string::npos)
    throw std::invalid_argument("read_csv: unsupported schema in '" + line + "'");
  const auto name_pos = line.find(" name=");
  if (name_pos != std::string::npos) t.name = line.substr(name_pos + 6);
  if (!std::getline(is, line) || line != kColumns) throw std::invalid_argument("read_csv: unexpected columns");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 18) throw std::invalid_argument("read_csv: wrong field count in '" + line + "'");
    ResultRow r;
    r.index = static_cast<std::size_t>(to_int(f[0], "index"));
    r.task = f[1];
    r.n = to_int(f[2], "n");
    r.omega_ratio = to_double(f[3], "omega_ratio");
    r.gamma_loc_ratio = to_double(f[4], "gamma_loc_ratio");
    r.dt = to_double(f[5], "dt");
    r.t1 = to_double(f[6], "t1");
    r.dg = to_double(f[7], "dg");
    r.observable = f[8];
    r.value = to_double(f[9], "value");
    r.aux = to_double(f[10], "aux");
    r.tau_star = to_double(f[11], "tau_star");
    r.crb = to_double(f[12], "crb");
    r.convergence = to_double(f[13], "convergence");
    r.flagged = f[14] == "1";
    r.status = f[15];
    r.message = f[16];
    r.code_version = f[17];
    t.rows.push_back(std::move(r));
  }
  return t;
}

std::string summary_json(const SweepSpec& spec, const ResultTable& table) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = kSchema;
  j["code_version"] = code_version();
  j["name"] = spec.name;
  j["task"] = to_string(spec.task);
  j["t1_policy"] = to_string(spec.t1_policy);
  j["n"] = spec.n_list;
  j["omega_ratio"] = spec.omega_ratios;
  j["gamma_loc_ratio"] = spec.gamma_loc_ratios;
  j["dt"] = spec.dt_list;
  j["tau_max"] = spec.tau_max;
  j["tau_per_period"] = spec.tau_per_period;
  j["dg_ratio"] = spec.dg_ratio;
  j["rows"] = table.rows.size();
  j["failures"] = table.failures();
  j["flagged"] = std::count_if(table.rows.begin(), table.rows.end(), [](const ResultRow& r) { return r.flagged; });
  ordered_json fits = ordered_json::array();
  for (const auto& g : groups_for(&spec, table, spec.fit_largest)) {
    if (!g.fit) continue;
    ordered_json f;
    f["group"] = g.label;
    f["omega_ratio"] = g.omega_ratio;
    f["gamma_loc_ratio"] = g.gamma_loc_ratio;
    if (!g.observable.empty()) f["observable"] = g.observable;
    f["exponent"] = g.fit->exponent;
    f["stderr"] = g.fit->stderr_exponent;
    f["points_used"] = g.fit->points_used;
    f["restriction"] = g.fit->restriction;
    fits.push_back(f);
  }
  j["fits"] = fits;
  ordered_json optima = ordered_json::array();
  ordered_json errors = ordered_json::array();
  for (const auto& r : table.rows) {
    if (r.status != "ok") {
      errors.push_back({{"index", r.index}, {"message", r.message}});
    } else if (std::isfinite(r.tau_star)) {
      ordered_json o;
      o["index"] = r.index;
      o["n"] = r.n;
      o["omega_ratio"] = r.omega_ratio;
      if (!r.observable.empty()) o["observable"] = r.observable;
      o["tau_star"] = r.tau_star;
      o["value"] = r.value;
      optima.push_back(o);
    }
  }
  j["optima"] = optima;
  j["errors"] = errors;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::string render_svg(const PlotSpec& plot) {
  constexpr double W = 720, H = 460, L = 80, R = 200, T = 40, B = 60;
  auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      if ((plot.log_x && !(s.xs[i] > 0)) || (plot.log_y && !(s.ys[i] > 0))) continue;
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      x0 = std::min(x0, tx(s.xs[i]));
      x1 = std::max(x1, tx(s.xs[i]));
      y0 = std::min(y0, ty(s.ys[i]));
      y1 = std::max(y1, ty(s.ys[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double py = 0.05 * (y1 - y0);
  y0 -= py;
  y1 += py;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto pyf = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  };
  static const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
     << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << esc(plot.title)
     << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double vx = plot.log_x ? std::pow(10.0, fx) : fx, vy = plot.log_y ? std::pow(10.0, fy) : fy;
    const double sx = L + (W - L - R) * k / 4.0, sy = H - B - (H - T - B) * k / 4.0;
    os << "<line x1=\"" << sx << "\" y1=\"" << H - B << "\" x2=\"" << sx << "\" y2=\"" << H - B + 5
       << "\" stroke=\"black\"/><text x=\"" << sx << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
       << num(vx) << "</text>\n";
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << sy << "\" x2=\"" << L << "\" y2=\"" << sy
       << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
       << num(vy) << "</text>\n";
  }
  os << "<text x=\"" << L + (W - L - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
     << esc(plot.x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << T + (H - T - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << T + (H - T - B) / 2 << ")\">" << esc(plot.y_label) << "</text>\n";
  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const auto& s = plot.series[si];
    const char* color = palette[si % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      if ((plot.log_x && !(s.xs[i] > 0)) || (plot.log_y && !(s.ys[i] > 0))) continue;
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      os << num(px(s.xs[i])) << ',' << num(pyf(s.ys[i])) << ' ';
    }
    os << "\"/>\n";
    const double ly = T + 16 + 18 * static_cast<double>(si);
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R + 36 << "\" y2=\"" << ly - 4
       << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
       << "/><text x=\"" << W - R + 42 << "\" y=\"" << ly << "\">" << esc(s.label) << "</text>\n";
  }
  for (std::size_t ai = 0; ai < plot.annotations.size(); ++ai)
    os << "<text x=\"" << W - R + 12 << "\" y=\"" << H - B - 18 * static_cast<double>(plot.annotations.size() - ai)
       << "\">" << esc(plot.annotations[ai]) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << content;
  f.close();
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::vector<std::string> emit_outputs(const SweepSpec& spec, const ResultTable& table) {
  namespace fs = std::filesystem;
  const fs::path dir(spec.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::string> written;
  std::ostringstream csv;
  write_csv(csv, table);
  const fs::path csv_path = dir / (spec.name + ".csv");
  write_file(csv_path, csv.str());
  written.push_back(csv_path.string());
  auto wants = [&](const char* f) { return std::find(spec.formats.begin(), spec.formats.end(), f) != spec.formats.end(); };
  if (wants("json")) {
    const fs::path p = dir / (spec.name + ".json");
    write_file(p, summary_json(spec, table));
    written.push_back(p.string());
  }
  if (wants("svg")) {
    for (const auto& g : groups_for(&spec, table, spec.fit_largest)) {
      if (g.ns.empty()) continue;
      PlotSpec plot;
      plot.title = spec.name + " " + g.label;
      plot.x_label = "N";
      plot.y_label = to_string(spec.task);
      plot.log_x = plot.log_y = true;
      plot.series.push_back(PlotSeries{"data", g.ns, g.values, false});
      if (g.fit) {
        PlotSeries line{"fit", {}, {}, true};
        for (double n : g.ns) {
          line.xs.push_back(n);
          line.ys.push_back(std::exp(g.fit->intercept) * std::pow(n, g.fit->exponent));
        }
        plot.series.push_back(line);
        char buf[64];
        std::snprintf(buf, sizeof buf, "slope %.3f", g.fit->exponent);
        plot.annotations.emplace_back(buf);
      }
      std::string label = g.label;
      std::replace(label.begin(), label.end(), '.', 'p');
      const fs::path p = dir / (spec.name + "_" + label + ".svg");
      write_file(p, render_svg(plot));
      written.push_back(p.string());
    }
  }
  return written;
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("write_matrix_csv: square matrix required");
  os << "dim,row,col,re,im\n";
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      os << m.rows() << ',' << r << ',' << c << ',' << fmt(m(r, c).real()) << ',' << fmt(m(r, c).imag()) << '\n';
}

Matrix read_matrix_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != "dim,row,col,re,im")
    throw std::invalid_argument("read_matrix_csv: expected header dim,row,col,re,im");
  Matrix m;
  std::vector<bool> seen;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 5) throw std::invalid_argument("read_matrix_csv: wrong field count in '" + line + "'");
    const int dim = to_int(f[0], "dim"), r = to_int(f[1], "row"), c = to_int(f[2], "col");
    if (m.size() == 0) {
      if (dim < 1) throw std::invalid_argument("read_matrix_csv: dim must be positive");
      m = Matrix::Zero(dim, dim);
      seen.assign(static_cast<std::size_t>(dim) * dim, false);
    }
    if (dim != m.rows() || r < 0 || c < 0 || r >= dim || c >= dim)
      throw std::invalid_argument("read_matrix_csv: index out of range in '" + line + "'");
    m(r, c) = cplx(to_double(f[3], "re"), to_double(f[4], "im"));
    seen[static_cast<std::size_t>(r) * dim + c] = true;
  }
  if (m.size() == 0) throw std::invalid_argument("read_matrix_csv: no entries");
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw std::invalid_argument("read_matrix_csv: missing entries");
  return m;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> parse_list(const std::string& raw, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split(raw, ',')) {
    const std::string s = trim(item);
    if (s.empty()) continue;
    const auto parts = split(s, ':');
    if (parts.size() == 3) {
      const double a = to_double(trim(parts[0]), key), b = to_double(trim(parts[1]), key),
                   h = to_double(trim(parts[2]), key);
      if (!(h > 0.0) || b < a) throw std::invalid_argument(key + ": range must be start:stop:step with step > 0");
      const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
      for (long i = 0; i <= n; ++i) out.push_back(a + h * static_cast<double>(i));
    } else if (parts.size() == 1) {
      out.push_back(to_double(s, key));
    } else {
      throw std::invalid_argument(key + ": cannot parse '" + s + "'");
    }
  }
  return out;
}

}  // namespace

SweepSpec parse_sweep_spec(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  SweepSpec spec;
  for (const auto& [section, body] : tree) {
    if (section != "sweep" && section != "output")
      throw std::invalid_argument("config: unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      const std::string v = trim(node.get_value<std::string>());
      const std::string where = section + "." + key;
      if (section == "sweep") {
        if (key == "name") spec.name = v;
        else if (key == "task") spec.task = parse_task(v);
        else if (key == "n") {
          spec.n_list.clear();
          for (double x : parse_list(v, where)) spec.n_list.push_back(to_int(fmt(x), where));
        } else if (key == "omega_ratio") spec.omega_ratios = parse_list(v, where);
        else if (key == "gamma_loc_ratio") spec.gamma_loc_ratios = parse_list(v, where);
        else if (key == "dt") spec.dt_list = v == "default" ? std::vector<double>{} : parse_list(v, where);
        else if (key == "t1") {
          if (v == "stationary") spec.t1_policy = T1Policy::Stationary;
          else if (v == "first_sy_max") spec.t1_policy = T1Policy::FirstSyMaximum;
          else {
            spec.t1_policy = T1Policy::Fixed;
            spec.t1_list = parse_list(v, where);
          }
        } else if (key == "tau_max") spec.tau_max = to_double(v, where);
        else if (key == "tau_per_period") spec.tau_per_period = to_int(v, where);
        else if (key == "observables") {
          spec.observables.clear();
          for (const auto& o : split(v, ',')) spec.observables.push_back(parse_observable(trim(o)));
        } else if (key == "dg_ratio") spec.dg_ratio = to_double(v, where);
        else if (key == "fit_largest") spec.fit_largest = to_int(v, where);
        else throw std::invalid_argument("config: unknown key " + where);
      } else {
        if (key == "dir") spec.out_dir = v;
        else if (key == "workers") spec.workers = to_int(v, where);
        else if (key == "formats") {
          spec.formats.clear();
          for (const auto& f : split(v, ',')) {
            const std::string t = trim(f);
            if (t != "csv" && t != "json" && t != "svg")
              throw std::invalid_argument("config: unknown format '" + t + "'");
            spec.formats.push_back(t);
          }
        } else throw std::invalid_argument("config: unknown key " + where);
      }
    }
  }
  spec.validate();
  return spec;
}

SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  try {
    return parse_sweep_spec(f);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

const char* to_string(SweepTask t) {
  switch (t) {
    case SweepTask::Qfi1: return "qfi1";
    case SweepTask::Qfi2: return "qfi2";
    case SweepTask::MzError: return "mz_error";
    case SweepTask::LocalDecay: return "localdecay";
    case SweepTask::Convergence: return "convergence";
  }
  return "?";
}

SweepTask parse_task(const std::string& s) {
  for (SweepTask t : {SweepTask::Qfi1, SweepTask::Qfi2, SweepTask::MzError, SweepTask::LocalDecay,
                      SweepTask::Convergence})
    if (s == to_string(t)) return t;
  throw std::invalid_argument("unknown task '" + s + "' (qfi1, qfi2, mz_error, localdecay, convergence)");
}

const char* to_string(T1Policy p) {
  switch (p) {
    case T1Policy::Stationary: return "stationary";
    case T1Policy::Fixed: return "fixed";
    case T1Policy::FirstSyMaximum: return "first_sy_max";
  }
  return "?";
}

}  // namespace dicke
