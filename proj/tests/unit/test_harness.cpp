#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "dicke/harness.hpp"

namespace dicke {
namespace {

namespace fs = std::filesystem;

std::string csv_text(const ResultTable& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

SweepSpec small_qfi2() {
  SweepSpec s;
  s.name = "small";
  s.task = SweepTask::Qfi2;
  s.n_list = {3, 4, 5, 6};
  s.omega_ratios = {1.0, 2.0};
  s.tau_max = 1.0;
  s.tau_per_period = 12;
  return s;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dicke_harness_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Fit, ExactPowerLawIsRecovered) {
  std::vector<double> ns{10, 20, 30, 40, 50}, ys;
  for (double n : ns) ys.push_back(0.37 * n * n);
  const auto f = fit_scaling(ns, ys);
  EXPECT_NEAR(f.exponent, 2.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 0.37, 1e-10);
  EXPECT_EQ(f.points_used, 5u);
  EXPECT_NEAR(fit_scaling({10, 100}, {1, 100}).exponent, 2.0, 1e-12);
}

TEST(Fit, RestrictionUsesLargestN) {
  // Slope 1 at small N, slope 3 over the three largest.
  const std::vector<double> ns{1, 2, 4, 8, 16};
  const std::vector<double> ys{1, 2, 4, 32, 256};
  const auto f = fit_scaling(ns, ys, 3);
  EXPECT_NEAR(f.exponent, 3.0, 1e-12);
  EXPECT_EQ(f.points_used, 3u);
  EXPECT_FALSE(f.restriction.empty());
}

TEST(Fit, RejectsBadData) {
  EXPECT_THROW(fit_scaling({1, 2}, {1, 0}), std::invalid_argument);
  EXPECT_THROW(fit_scaling({1, 2}, {1, -2}), std::invalid_argument);
  EXPECT_THROW(fit_scaling({1}, {1}), std::invalid_argument);
  EXPECT_THROW(fit_scaling({1, 2, 3}, {1, 2}), std::invalid_argument);
  EXPECT_THROW(fit_scaling({2, 2}, {1, 3}), std::invalid_argument);
  EXPECT_THROW(fit_scaling({1, 2, 3}, {1, 2, std::numeric_limits<double>::quiet_NaN()}),
               std::invalid_argument);
}

TEST(Grid, AxesExpandInRowOrder) {
  SweepSpec s;
  s.task = SweepTask::MzError;
  s.n_list = {4, 8};
  s.omega_ratios = {1.5, 2.0};
  s.dt_list = {1e-4, 1e-5};
  const auto g = expand_grid(s);
  ASSERT_EQ(g.size(), 2u * 2u * 2u * 3u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i].index, i);
  EXPECT_EQ(g[0].n, 4);
  EXPECT_EQ(g.back().n, 8);
  EXPECT_EQ(*g[0].observable, Observable::Nd);
  EXPECT_EQ(*g[1].observable, Observable::N4);
  EXPECT_DOUBLE_EQ(g[3].dt, 1e-5);
  EXPECT_DOUBLE_EQ(g[6].omega_ratio, 2.0);
}

TEST(Grid, DefaultStepKeepsNGammaDtSmall) {
  EXPECT_DOUBLE_EQ(default_dt(10), 2.5e-5);
  EXPECT_DOUBLE_EQ(default_dt(80), 1e-3 / 80);
  EXPECT_THROW(default_dt(0), std::invalid_argument);
}

TEST(Sweep, SinglePointEqualsDirectCall) {
  SweepSpec s;
  s.task = SweepTask::Qfi1;
  s.n_list = {6};
  s.omega_ratios = {0.5};
  const auto table = run_sweep(s);
  ASSERT_EQ(table.rows.size(), 1u);
  const auto& r = table.rows[0];
  EXPECT_EQ(r.status, "ok");
  const auto q = qfi_one_bin(ModelParams::at_ratio(6, 0.5), Preparation{}, default_dt(6));
  EXPECT_EQ(r.value, q.per_time);
  EXPECT_EQ(r.convergence, q.convergence);
  EXPECT_EQ(r.code_version, code_version());
  EXPECT_TRUE(std::isnan(r.t1));
}

TEST(Sweep, ResultsDoNotDependOnWorkerCount) {
  auto s = small_qfi2();
  s.workers = 1;
  const std::string one = csv_text(run_sweep(s));
  s.workers = 8;
  const std::string eight = csv_text(run_sweep(s));
  EXPECT_EQ(one, eight);
}

TEST(Sweep, FailingPointsBecomeErrorRows) {
  SweepSpec s;
  s.task = SweepTask::Qfi1;
  s.n_list = {4, 60};
  s.omega_ratios = {1.5};
  s.gamma_loc_ratios = {0.1};
  const auto t = run_sweep(s);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].status, "ok");
  EXPECT_EQ(t.rows[1].status, "error");
  EXPECT_FALSE(t.rows[1].message.empty());
  EXPECT_EQ(t.failures(), 1u);
}

TEST(Sweep, MzRowsShareOnePropagation) {
  SweepSpec s;
  s.task = SweepTask::MzError;
  s.n_list = {6};
  s.omega_ratios = {2.0};
  s.tau_max = 1.0;
  s.tau_per_period = 20;
  const auto t = run_sweep(s);
  ASSERT_EQ(t.rows.size(), 3u);
  const auto scans = optimal_sensing_scans(ModelParams::at_ratio(6, 2.0), Preparation{},
                                           tau_grid_for(ModelParams::at_ratio(6, 2.0), 1.0, 20), default_dt(6));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(t.rows[i].observable, to_string(kObservables[i]));
    EXPECT_NEAR(t.rows[i].value, scans[i].error_star * default_dt(6), 1e-14 * t.rows[i].value);
    EXPECT_GE(t.rows[i].aux, 1.0 - 1e-6);  // never below the bound
  }
}

TEST(Csv, RoundTripIsExact) {
  auto t = run_sweep(small_qfi2());
  t.rows[1].status = "error";
  t.rows[1].message = "bad, value";
  t.rows[1].value = std::numeric_limits<double>::quiet_NaN();
  std::istringstream is(csv_text(t));
  const auto back = read_csv(is);
  EXPECT_EQ(back.name, t.name);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i == 1) continue;
    EXPECT_TRUE(back.rows[i] == t.rows[i]) << i;
  }
  EXPECT_EQ(back.rows[1].status, "error");
  EXPECT_TRUE(std::isnan(back.rows[1].value));
  EXPECT_EQ(back.rows[1].message.find(','), std::string::npos);
}

TEST(Csv, RejectsForeignFiles) {
  std::istringstream no_header("a,b,c\n1,2,3\n");
  EXPECT_THROW(read_csv(no_header), std::invalid_argument);
  std::istringstream other_schema("# dicke-sense results schema=99 code=x name=y\n");
  EXPECT_THROW(read_csv(other_schema), std::invalid_argument);
}

TEST(MatrixCsv, RoundTripIsExact) {
  std::srand(3);
  const Matrix m = Matrix::Random(5, 5);
  std::stringstream ss;
  write_matrix_csv(ss, m);
  EXPECT_EQ(read_matrix_csv(ss), m);
  std::istringstream bad("dim,row,col,re,im\n2,0,0,1,0\n");
  EXPECT_THROW(read_matrix_csv(bad), std::invalid_argument);
}

TEST(Config, ParsesListsAndRanges) {
  std::istringstream is(
      "[sweep]\nname = demo\ntask = mz_error\nn = 10:30:10, 50\nomega_ratio = 2\n"
      "gamma_loc_ratio = 0, 0.1\nt1 = first_sy_max\nobservables = Nd, N5\n"
      "[output]\ndir = out\nworkers = 3\nformats = csv, svg\n");
  const auto s = parse_sweep_spec(is);
  EXPECT_EQ(s.name, "demo");
  EXPECT_EQ(s.task, SweepTask::MzError);
  EXPECT_EQ(s.n_list, (std::vector<int>{10, 20, 30, 50}));
  EXPECT_EQ(s.gamma_loc_ratios, (std::vector<double>{0.0, 0.1}));
  EXPECT_EQ(s.t1_policy, T1Policy::FirstSyMaximum);
  EXPECT_EQ(s.observables, (std::vector<Observable>{Observable::Nd, Observable::N5}));
  EXPECT_EQ(s.workers, 3);
  EXPECT_EQ(s.formats, (std::vector<std::string>{"csv", "svg"}));
  EXPECT_TRUE(s.dt_list.empty());
}

TEST(Config, FixedT1ListSelectsFixedPolicy) {
  std::istringstream is("[sweep]\ntask = localdecay\nn = 10\nomega_ratio = 2\nt1 = 0.5, 3\n");
  const auto s = parse_sweep_spec(is);
  EXPECT_EQ(s.t1_policy, T1Policy::Fixed);
  EXPECT_EQ(s.t1_list, (std::vector<double>{0.5, 3.0}));
}

TEST(Config, RejectsInvalidInput) {
  const std::vector<std::string> bad{
      "[sweep]\nn = 10\nomega_ratio = 2\ncolour = red\n",         // unknown key
      "[sweeps]\nn = 10\n",                                        // unknown section
      "[sweep]\nn = ten\nomega_ratio = 2\n",                       // not a number
      "[sweep]\nn = 10.5\nomega_ratio = 2\n",                      // not an integer
      "[sweep]\nn = 10\nomega_ratio = 2:1:0.5\n",                  // reversed range
      "[sweep]\nn = 10\nomega_ratio = -1\n",                       // negative drive
      "[sweep]\ntask = qfi3\nn = 10\nomega_ratio = 2\n",           // unknown task
      "[sweep]\ntask = localdecay\nn = 10\nomega_ratio = 2\n",     // needs a transient t1
      "[sweep]\nn = 10\nomega_ratio = 2\n[output]\nformats = png\n",
      "[sweep]\nn = 10\nomega_ratio = 2\n[output]\nworkers = 0\n",
      "[sweep\nn = 10\n",
  };
  for (const auto& text : bad) {
    std::istringstream is(text);
    EXPECT_THROW(parse_sweep_spec(is), std::invalid_argument) << text;
  }
  EXPECT_THROW(load_sweep_spec("/nonexistent/dicke.ini"), std::runtime_error);
}

TEST(Outputs, CsvAndJsonOnlyWithoutPlots) {
  auto s = small_qfi2();
  s.out_dir = scratch_dir("plain").string();
  s.formats = {"csv", "json"};
  const auto table = run_sweep(s);
  const auto files = emit_outputs(s, table);
  ASSERT_EQ(files.size(), 2u);
  std::ifstream jf(fs::path(s.out_dir) / "small.json");
  const auto j = nlohmann::json::parse(jf);
  EXPECT_EQ(j["name"], "small");
  EXPECT_TRUE(j.contains("fits"));
  std::ifstream cf(fs::path(s.out_dir) / "small.csv");
  EXPECT_EQ(read_csv(cf), table);
  fs::remove_all(s.out_dir);
}

TEST(Outputs, SvgPlotsCarryTheFit) {
  auto s = small_qfi2();
  s.out_dir = scratch_dir("svg").string();
  s.formats = {"csv", "svg"};
  const auto files = emit_outputs(s, run_sweep(s));
  ASSERT_EQ(files.size(), 3u);  // one csv, one plot per omega ratio
  std::ifstream f(files[1]);
  const std::string svg((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("slope"), std::string::npos);
  fs::remove_all(s.out_dir);
}

TEST(Outputs, UnwritableDirectoryIsReported) {
  auto s = small_qfi2();
  s.n_list = {3};
  s.out_dir = "/proc/dicke_no_such_dir";
  EXPECT_THROW(emit_outputs(s, run_sweep(s)), std::runtime_error);
}

TEST(Groups, FitAgainstN) {
  const auto s = small_qfi2();
  const auto groups = scaling_groups(s, run_sweep(s));
  ASSERT_EQ(groups.size(), 2u);
  for (const auto& g : groups) {
    EXPECT_EQ(g.ns, (std::vector<double>{3, 4, 5, 6}));
    ASSERT_TRUE(g.fit.has_value());
    EXPECT_EQ(g.fit->points_used, 3u);
    EXPECT_GT(g.fit->exponent, 0.0);
  }
}

}  // namespace
}  // namespace dicke
