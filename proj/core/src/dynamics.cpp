#include "dicke/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#define lapack_complex_double std::complex<double>
#define lapack_complex_float std::complex<float>
#include <lapacke.h>

namespace dicke {

namespace {

/// Solves L x = 0 with sum_i trace_weights_i x_i = 1 by replacing the row
/// with the largest trace weight.
Vector solve_stationary(const SparseMatrix& l, const std::vector<Index>& trace_indices) {
  const Index n = l.rows();
  const Index replaced = trace_indices.front();
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(l.nonZeros() + n));
  for (Index c = 0; c < l.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(l, c); it; ++it)
      if (it.row() != replaced) trip.emplace_back(it.row(), it.col(), it.value());
  for (Index i : trace_indices) trip.emplace_back(replaced, i, 1.0);
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  Vector rhs = Vector::Zero(n);
  rhs[replaced] = 1.0;

  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success)
    throw DegenerateSteadyState("steady_state: constrained generator is singular (" +
                                lu.lastErrorMessage() + "); stationary space is degenerate");
  Vector x = lu.solve(rhs);
  // One step of iterative refinement.
  const Vector r = rhs - a * x;
  x += lu.solve(r);
  if (!x.allFinite())
    throw DegenerateSteadyState("steady_state: solution is not finite; stationary space is degenerate");
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  const double residual = (l * x).cwiseAbs().maxCoeff();
  double lnorm = 0.0;
  for (Index c = 0; c < l.outerSize(); ++c) {
    double col = 0.0;
    for (SparseMatrix::InnerIterator it(l, c); it; ++it) col += std::abs(it.value());
    lnorm = std::max(lnorm, col);
  }
  if (residual > 1e-8 * lnorm * scale) {
    std::ostringstream os;
    os << "steady_state: residual " << residual << " too large; stationary space may be degenerate";
    throw DegenerateSteadyState(os.str());
  }
  return x;
}

std::vector<Index> trace_indices(const SectorLayout& lay) {
  std::vector<Index> idx;
  for (Index s = 0; s < lay.sectors(); ++s) {
    const Index d = lay.dim(s);
    for (Index k = 0; k < d; ++k) idx.push_back(lay.offset[static_cast<std::size_t>(s)] + k + d * k);
  }
  return idx;
}

/// Fills gap, relaxation time and the gamma_1/gamma_2 classification from
/// sorted eigenvalues.
void classify_spectrum(SpectralDecomposition& sd, double threshold) {
  if (sd.eigenvalues.size() > 1) {
    const cplx l1 = sd.eigenvalues[1];
    sd.gap = std::abs(l1.real());
    sd.relax_time = 1.0 / std::abs(l1);
  }
  for (std::size_t i = 1; i < sd.eigenvalues.size(); ++i) {
    const cplx lam = sd.eigenvalues[i];
    const double im = std::abs(lam.imag());
    if (im > 0.1 * threshold && im <= 10.0 * threshold) sd.borderline.push_back(i);
    if (im <= threshold) {
      if (!sd.gamma_1) sd.gamma_1 = -lam.real();
    } else if (!sd.gamma_2) {
      sd.gamma_2 = -lam.real();
      sd.omega_2 = im;
    }
  }
}

PermSymLiouvillian wrap(const Liouvillian& l) {
  return PermSymLiouvillian(ModelParams{l.two_j(), l.omega(), l.gamma_coll(), 0.0},
                            SectorLayout::maximal(l.two_j()));
}

}  // namespace

DensityMatrix evolve(const Liouvillian& l, const DensityMatrix& rho0, double t,
                     const EvolveOptions& opts) {
  if (t < 0.0) throw std::invalid_argument("evolve: negative time");
  if (rho0.dim() != l.dim()) throw std::invalid_argument("evolve: dimension mismatch");
  Matrix rho = hermitize(propagate(l, rho0.data(), t, opts.expmv));
  const StateCheck c = check_state(rho);
  if (c.min_eigenvalue < -opts.positivity_tol) {
    std::ostringstream os;
    os << "evolve: positivity violated (min eigenvalue " << c.min_eigenvalue << ")";
    throw NumericalError(os.str());
  }
  return DensityMatrix::trusted(std::move(rho));
}

DensityMatrix steady_state(const Liouvillian& l) {
  const Index d = l.dim();
  std::vector<Index> idx;
  for (Index k = d - 1; k >= 0; --k) idx.push_back(k + d * k);
  const Vector x = solve_stationary(l.sparse_superoperator(), idx);
  return DensityMatrix::trusted(hermitize(unvec(x, d)));
}

DickeLadderState steady_state(const PermSymLiouvillian& gen) {
  std::vector<Index> idx = trace_indices(gen.layout());
  // Replace the equation of the ground-state population of the top sector,
  // which always carries weight in the stationary state.
  const Index d0 = gen.layout().dim(0);
  std::iter_swap(idx.begin(), idx.begin() + (d0 - 1));
  DickeLadderState s(gen.layout_ptr(), solve_stationary(gen.sparse_superoperator(), idx));
  s.hermitize();
  return s;
}

SpectralDecomposition spectral_decomposition(const Liouvillian& l, const SpectralOptions& opts) {
  Matrix a = l.superoperator().data;
  const Index n = a.rows();
  Vector w(n);
  Matrix vl, vr;
  const char jobv = opts.modes ? 'V' : 'N';
  if (opts.modes) {
    vl.resize(n, n);
    vr.resize(n, n);
  }
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, jobv, jobv, static_cast<lapack_int>(n), a.data(),
                    static_cast<lapack_int>(n), w.data(), opts.modes ? vl.data() : nullptr,
                    static_cast<lapack_int>(n), opts.modes ? vr.data() : nullptr,
                    static_cast<lapack_int>(n));
  if (info != 0)
    throw NumericalError("spectral_decomposition: zgeev failed with info=" + std::to_string(info) +
                         " on superoperator dimension " + std::to_string(n));

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&w](std::size_t i, std::size_t j) {
    const auto a = w[static_cast<Index>(i)], b = w[static_cast<Index>(j)];
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });

  SpectralDecomposition sd;
  for (std::size_t i : order) sd.eigenvalues.push_back(w[static_cast<Index>(i)]);
  if (opts.modes) {
    const Index d = l.dim();
    for (std::size_t i : order) {
      const Vector r = vr.col(static_cast<Index>(i));
      Vector u = vl.col(static_cast<Index>(i));
      const cplx overlap = u.dot(r);  // u^dagger r
      u /= std::conj(overlap);
      sd.right_modes.push_back(unvec(r, d));
      sd.left_modes.push_back(unvec(u, d));
    }
  }
  classify_spectrum(sd, opts.oscillatory_threshold * l.gamma_coll());
  return sd;
}

cplx correlation_from_modes(const SpectralDecomposition& sd, const Matrix& a, const Matrix& x0,
                            double tau) {
  if (sd.right_modes.empty())
    throw std::invalid_argument("correlation_from_modes: decomposition has no modes");
  cplx acc = 0.0;
  for (std::size_t j = 0; j < sd.eigenvalues.size(); ++j) {
    const cplx coeff = (sd.left_modes[j].adjoint() * x0).trace();
    acc += std::exp(sd.eigenvalues[j] * tau) * expectation(a, sd.right_modes[j]) * coeff;
  }
  return acc;
}

TwoTimeCorrelation two_time_correlation(const PermSymLiouvillian& gen, const DickeLadderState& rho_t1,
                                        const std::vector<double>& tau_grid, CorrelationKind kind,
                                        double t1, const ExpmvOptions& opts) {
  if (tau_grid.empty()) throw std::invalid_argument("two_time_correlation: empty lag grid");
  for (double tau : tau_grid)
    if (!(tau >= 0.0)) throw std::invalid_argument("two_time_correlation: negative lag");
  const SectorLayout& lay = gen.layout();
  const BlockOperator sp = BlockOperator::collective(lay, SpinComponent::Plus);
  const BlockOperator sm = BlockOperator::collective(lay, SpinComponent::Minus);
  DickeLadderState x(gen.layout_ptr());
  const BlockOperator* probe = nullptr;
  switch (kind) {
    case CorrelationKind::PlusTauMinus:
      x = rho_t1.left_multiply(sm);
      probe = &sp;
      break;
    case CorrelationKind::PlusMinusTau:
      x = rho_t1.right_multiply(sp);
      probe = &sm;
      break;
    case CorrelationKind::MinusTauMinus:
      x = rho_t1.left_multiply(sm);
      probe = &sm;
      break;
  }
  std::vector<std::size_t> order(tau_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return tau_grid[a] < tau_grid[b]; });
  TwoTimeCorrelation out;
  out.t1 = t1;
  out.kind = kind;
  out.tau_grid = tau_grid;
  out.values.assign(tau_grid.size(), cplx{});
  const LinearAction act = gen.action();
  double now = 0.0;
  for (std::size_t i : order) {
    x.data() = expmv(act, x.data(), tau_grid[i] - now, opts);
    now = tau_grid[i];
    out.values[i] = x.expect(*probe);
  }
  return out;
}

TwoTimeCorrelation two_time_correlation(const Liouvillian& l, const DensityMatrix& rho_t1,
                                        const std::vector<double>& tau_grid, CorrelationKind kind,
                                        double t1, const ExpmvOptions& opts) {
  const PermSymLiouvillian gen = wrap(l);
  return two_time_correlation(gen, DickeLadderState::from_maximal(gen.layout_ptr(), rho_t1.data()),
                              tau_grid, kind, t1, opts);
}

void write_correlation_csv(const std::string& path, const TwoTimeCorrelation& c,
                           const ModelParams& params) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_correlation_csv: cannot open " + path);
  f << "# " << params.describe() << "\n";
  f << "t1,tau,re,im\n" << std::setprecision(17);
  for (std::size_t i = 0; i < c.tau_grid.size(); ++i)
    f << c.t1 << ',' << c.tau_grid[i] << ',' << c.values[i].real() << ',' << c.values[i].imag() << '\n';
  if (!f) throw std::runtime_error("write_correlation_csv: write failed for " + path);
}

double incoherent_intensity(const DickeLadderState& rho, double gamma_coll) {
  const SectorLayout& lay = rho.layout();
  const BlockOperator spsm = BlockOperator::collective(lay, SpinComponent::Plus) *
                             BlockOperator::collective(lay, SpinComponent::Minus);
  const cplx sm = rho.expect(SpinComponent::Minus);
  return gamma_coll * (rho.expect(spsm).real() - std::norm(sm));
}

double incoherent_intensity(const PermSymLiouvillian& gen) {
  return incoherent_intensity(steady_state(gen), gen.params().gamma_coll);
}

double incoherent_intensity(const Liouvillian& l) { return incoherent_intensity(wrap(l)); }

AnsatzParams make_ansatz_params(const ModelParams& params) {
  params.validate();
  AnsatzParams p;
  p.gamma_coll = params.gamma_coll;
  p.omega = params.omega;
  p.omega_osc = mean_field_frequency(params);
  const ModelParams collective{params.n_particles, params.omega, params.gamma_coll, 0.0};
  const PermSymLiouvillian gen(collective, SectorLayout::maximal(params.n_particles));
  const DickeLadderState ss = steady_state(gen);
  p.i_inc = incoherent_intensity(ss, params.gamma_coll);
  p.coherent_bg = std::norm(ss.expect(SpinComponent::Plus));
  p.c1 = p.i_inc / (2.0 * params.gamma_coll);
  p.c2 = p.i_inc / (4.0 * params.gamma_coll);
  const auto sd = SpectralCache::global().get(collective);
  if (!sd->gamma_1 || !sd->gamma_2)
    throw NumericalError("make_ansatz_params: spectrum lacks a real or an oscillatory slow mode");
  p.gamma_1 = *sd->gamma_1;
  p.gamma_2 = *sd->gamma_2;
  p.derivative_rate = p.gamma_2;
  return p;
}

cplx ansatz_correlation(const AnsatzParams& p, double tau) {
  if (!(p.omega_osc > 0.0)) throw std::domain_error("ansatz_correlation: overdamped parameters");
  return p.coherent_bg + p.c1 * std::exp(-p.gamma_1 * tau) +
         2.0 * p.c2 * std::cos(p.omega_osc * tau) * std::exp(-p.gamma_2 * tau);
}

cplx ansatz_derivative(const AnsatzParams& p, double tau) {
  if (!(p.omega_osc > 0.0)) throw std::domain_error("ansatz_derivative: Omega must be positive");
  const double domega = p.omega / p.omega_osc;
  return -(p.i_inc * tau * domega / (2.0 * p.gamma_coll)) * std::sin(p.omega_osc * tau) *
         std::exp(-p.derivative_rate * tau);
}

// ---------------------------------------------------------------------------

struct SpectralCache::Impl {
  std::string directory;
  mutable std::shared_mutex mutex;
  std::map<std::uint64_t, std::shared_ptr<const SpectralDecomposition>> entries;

  std::filesystem::path file_for(std::uint64_t key) const {
    std::ostringstream os;
    os << "spectrum_" << std::hex << std::setw(16) << std::setfill('0') << key << ".txt";
    return std::filesystem::path(directory) / os.str();
  }
};

SpectralCache::SpectralCache(std::string directory) : impl_(std::make_shared<Impl>()) {
  impl_->directory = std::move(directory);
}

SpectralCache& SpectralCache::global() {
  static SpectralCache cache([] {
    const char* env = std::getenv("DICKE_SENSE_CACHE_DIR");
    return std::string(env ? env : "");
  }());
  return cache;
}

std::size_t SpectralCache::size() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->entries.size();
}

std::shared_ptr<const SpectralDecomposition> SpectralCache::get(const ModelParams& params) {
  const std::uint64_t key = params.hash();
  {
    std::shared_lock lock(impl_->mutex);
    if (auto it = impl_->entries.find(key); it != impl_->entries.end()) return it->second;
  }
  if (params.gamma_loc != 0.0)
    throw std::invalid_argument("SpectralCache: only the collective generator is supported");

  const Liouvillian l = build_liouvillian(params);
  std::shared_ptr<SpectralDecomposition> sd;
  if (!impl_->directory.empty()) {
    std::ifstream in(impl_->file_for(key));
    std::string header;
    if (in && std::getline(in, header) && header == "# " + params.describe()) {
      std::vector<cplx> ev;
      double re = 0.0, im = 0.0;
      while (in >> re >> im) ev.emplace_back(re, im);
      if (static_cast<Index>(ev.size()) == l.dim() * l.dim()) {
        sd = std::make_shared<SpectralDecomposition>();
        sd->eigenvalues = std::move(ev);
      }
    }
  }
  if (!sd) {
    sd = std::make_shared<SpectralDecomposition>(spectral_decomposition(l));
    if (!impl_->directory.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(impl_->directory, ec);
      std::ofstream out(impl_->file_for(key));
      if (out) {
        out << "# " << params.describe() << "\n" << std::setprecision(17);
        for (const cplx& e : sd->eigenvalues) out << e.real() << ' ' << e.imag() << '\n';
      }
    }
  } else {
    classify_spectrum(*sd, SpectralOptions{}.oscillatory_threshold * params.gamma_coll);
  }
  std::unique_lock lock(impl_->mutex);
  auto [it, inserted] = impl_->entries.emplace(key, sd);
  return it->second;
}

}  // namespace dicke
