#include "dicke/timebin.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "dicke/log.hpp"

namespace dicke {

namespace {

void require_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time-bin duration must be positive");
}

/// K0 = sqrt(1 - Gamma dt S_+S_-) and K1 = sqrt(Gamma dt) S_- per sector.
std::pair<BlockOperator, BlockOperator> isometric_first_order(const SectorLayout& lay, double gamma_coll,
                                                              double dt) {
  BlockOperator k0, k1;
  const double g = gamma_coll * dt;
  for (const auto& o : lay.ops) {
    const Vector spsm = (o.s_plus * o.s_minus).diagonal();
    Matrix d = Matrix::Zero(o.dim, o.dim);
    for (Index k = 0; k < o.dim; ++k) {
      const double w = 1.0 - g * spsm[k].real();
      if (w < 0.0)
        throw std::invalid_argument(
            "short-time bin state outside its validity regime: Gamma dt <S_+S_-> exceeds 1");
      d(k, k) = std::sqrt(w);
    }
    k0.blocks.push_back(std::move(d));
    k1.blocks.push_back(std::sqrt(g) * o.s_minus);
  }
  return {k0, k1};
}

/// mu[(a,c),(b,d)] = Tr(K_d^dagger K_c Y_ab) with Y_01 = Y_10^dagger.
Matrix assemble_two_bin(const BlockOperator& k0, const BlockOperator& k1, const DickeLadderState& y00,
                        const DickeLadderState& y10, const DickeLadderState& y11) {
  const BlockOperator* k[2] = {&k0, &k1};
  BlockOperator m[2][2];  // m[c][d] = K_d^dagger K_c
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) m[c][d] = k[d]->adjoint() * *k[c];
  cplx t[2][2][2][2];  // t[a][b][c][d]
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) {
      t[0][0][c][d] = y00.expect(m[c][d]);
      t[1][1][c][d] = y11.expect(m[c][d]);
      t[1][0][c][d] = y10.expect(m[c][d]);
    }
  // Tr(M_cd Y10^dagger) = conj(Tr(M_cd^dagger Y10)) = conj(Tr(M_dc Y10)).
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d) t[0][1][c][d] = std::conj(t[1][0][d][c]);
  Matrix mu(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) mu(2 * a + c, 2 * b + d) = t[a][b][c][d];
  return hermitize(mu);
}

Matrix assemble_one_bin(const BlockOperator& k0, const BlockOperator& k1, const DickeLadderState& rho) {
  Matrix mu(2, 2);
  const BlockOperator* k[2] = {&k0, &k1};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) mu(a, b) = rho.expect(k[b]->adjoint() * *k[a]);
  return hermitize(mu);
}

void warn_validity(const ModelParams& p, double dt, double level) {
  const double x = p.n_particles * p.gamma_coll * dt;
  if (x > level) {
    std::ostringstream os;
    os << "N*Gamma*dt = " << x << " exceeds " << level << "; short-time bin expansion is unreliable";
    warn(os.str());
  }
}

}  // namespace

void BinSchedule::validate() const {
  require_dt(dt);
  if (n1 < 1) throw std::invalid_argument("BinSchedule: n1 must be >= 1");
  if (n2 <= n1) throw std::invalid_argument("BinSchedule: n2 must exceed n1");
}

BinSchedule BinSchedule::from_times(double dt, double t1, double tau) {
  require_dt(dt);
  if (t1 < 0.0 || tau < 0.0) throw std::invalid_argument("BinSchedule: negative time");
  BinSchedule s;
  s.dt = dt;
  s.n1 = std::max(1L, std::lround(t1 / dt));
  s.n2 = s.n1 + 1 + std::lround(tau / dt);
  return s;
}

double KrausPair::completeness_error() const {
  const Matrix c = k0.adjoint() * k0 + k1.adjoint() * k1;
  return (c - Matrix::Identity(c.rows(), c.cols())).cwiseAbs().maxCoeff();
}

KrausPair sector_kraus_pair(const CollectiveSpinOps& ops, double omega, double gamma_coll, double dt,
                            KrausMode mode) {
  require_dt(dt);
  const Index d = ops.dim;
  KrausPair kp;
  kp.mode = mode;
  if (mode == KrausMode::FirstOrder) {
    kp.k0 = Matrix::Identity(d, d) - kI * omega * dt * ops.s_x -
            0.5 * gamma_coll * dt * ops.s_plus * ops.s_minus;
    kp.k1 = std::sqrt(gamma_coll * dt) * ops.s_minus;
    return kp;
  }
  // H dt on system (x) bin with index 2k + sigma; sigma_+ = |1><0| creates a photon.
  Matrix hdt = Matrix::Zero(2 * d, 2 * d);
  const double g = std::sqrt(gamma_coll * dt);
  for (Index r = 0; r < d; ++r)
    for (Index c = 0; c < d; ++c) {
      const cplx sx = omega * dt * ops.s_x(r, c);
      hdt(2 * r, 2 * c) += sx;
      hdt(2 * r + 1, 2 * c + 1) += sx;
      // i g (S_- (x) sigma_+ - S_+ (x) sigma_-)
      hdt(2 * r + 1, 2 * c) += kI * g * ops.s_minus(r, c);
      hdt(2 * r, 2 * c + 1) -= kI * g * ops.s_plus(r, c);
    }
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(hdt));
  const Vector phase = (-kI * es.eigenvalues().cast<cplx>()).array().exp();
  const Matrix u = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
  kp.k0.resize(d, d);
  kp.k1.resize(d, d);
  for (Index r = 0; r < d; ++r)
    for (Index c = 0; c < d; ++c) {
      kp.k0(r, c) = u(2 * r, 2 * c);
      kp.k1(r, c) = u(2 * r + 1, 2 * c);
    }
  return kp;
}

KrausPair kraus_pair(const ModelParams& params, double dt, KrausMode mode) {
  params.validate();
  require_dt(dt);
  warn_validity(params, dt, 0.5);
  return sector_kraus_pair(build_collective_ops(params.n_particles), params.omega, params.gamma_coll, dt,
                           mode);
}

DensityMatrix unmonitored_step(const DensityMatrix& rho, const KrausPair& kraus) {
  if (kraus.k0.rows() != rho.dim()) throw std::invalid_argument("unmonitored_step: dimension mismatch");
  Matrix out = kraus.k0 * rho.data() * kraus.k0.adjoint() + kraus.k1 * rho.data() * kraus.k1.adjoint();
  return DensityMatrix::trusted(hermitize(out));
}

// ---------------------------------------------------------------------------

DiscreteChannel::DiscreteChannel(const ModelParams& params, double dt, KrausMode mode)
    : params_(params), dt_(dt), mode_(mode) {
  params_.validate();
  require_dt(dt);
  warn_validity(params_, dt, 0.5);
  layout_ = params_.gamma_loc > 0.0 ? SectorLayout::full(params_.n_particles)
                                    : SectorLayout::maximal(params_.n_particles);
  for (const auto& o : layout_->ops) {
    KrausPair kp = sector_kraus_pair(o, params_.omega, params_.gamma_coll, dt, mode);
    k0_.blocks.push_back(std::move(kp.k0));
    k1_.blocks.push_back(std::move(kp.k1));
  }
  if (params_.gamma_loc > 0.0)
    local_ = std::make_shared<PermSymLiouvillian>(
        PermSymLiouvillian::local_only(params_.n_particles, params_.gamma_loc, layout_));
}

DickeLadderState DiscreteChannel::apply_local(const DickeLadderState& x) const {
  if (!local_) return x;
  return propagate_permsym(*local_, x, dt_);
}

DickeLadderState DiscreteChannel::couple(const DickeLadderState& x, int a, int b) const {
  return apply_local(x.sandwich(k(a), k(b)));
}

DickeLadderState DiscreteChannel::apply(const DickeLadderState& x) const {
  DickeLadderState y = x.sandwich(k0_, k0_);
  y.data() += x.sandwich(k1_, k1_).data();
  return apply_local(y);
}

const Matrix& DiscreteChannel::dense() const { return squaring(0); }

const Matrix& DiscreteChannel::squaring(int level) const {
  std::lock_guard lock(cache_mutex_);
  const Index n = layout_->total;
  if (n > kDenseLimit)
    throw GuardExceeded("DiscreteChannel: ladder size " + std::to_string(n) + " exceeds dense limit");
  if (squarings_.empty()) {
    squarings_.reserve(64);
    Matrix e(n, n);
    DickeLadderState unit(layout_);
    for (Index i = 0; i < n; ++i) {
      unit.data().setZero();
      unit.data()[i] = 1.0;
      e.col(i) = apply(unit).data();
    }
    squarings_.push_back(std::move(e));
  }
  while (static_cast<int>(squarings_.size()) <= level) squarings_.push_back(squarings_.back() * squarings_.back());
  return squarings_[static_cast<std::size_t>(level)];
}

DickeLadderState DiscreteChannel::power(const DickeLadderState& x, long steps) const {
  if (steps < 0) throw std::invalid_argument("DiscreteChannel::power: negative step count");
  if (steps == 0) return x;
  if (layout_->total > kDenseLimit) {
    DickeLadderState y = x;
    for (long s = 0; s < steps; ++s) y = apply(y);
    return y;
  }
  Vector v = x.data();
  for (int level = 0; (steps >> level) != 0; ++level)
    if ((steps >> level) & 1L) v = squaring(level) * v;
  return DickeLadderState(layout_, std::move(v));
}

DickeLadderState DiscreteChannel::stationary() const {
  const Matrix& e = dense();
  const Index n = e.rows();
  Matrix a = e - Matrix::Identity(n, n);
  const Index d0 = layout_->dim(0);
  const Index replaced = (d0 - 1) + d0 * (d0 - 1);
  a.row(replaced).setZero();
  for (Index s = 0; s < layout_->sectors(); ++s) {
    const Index d = layout_->dim(s);
    for (Index k = 0; k < d; ++k) a(replaced, layout_->offset[static_cast<std::size_t>(s)] + k + d * k) = 1.0;
  }
  Vector rhs = Vector::Zero(n);
  rhs[replaced] = 1.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  Vector x = lu.solve(rhs);
  x += lu.solve(rhs - a * x);
  if (!x.allFinite() || (e * x - x).cwiseAbs().maxCoeff() > 1e-9)
    throw DegenerateSteadyState("DiscreteChannel::stationary: no unique fixed point");
  DickeLadderState s(layout_, std::move(x));
  s.hermitize();
  return s;
}

// ---------------------------------------------------------------------------

Matrix JointBinState::dense() const {
  const auto& lay = entries.front().layout();
  if (lay.sectors() != 1) throw std::invalid_argument("JointBinState::dense: needs a single-sector ladder");
  const Index d = lay.dim(0);
  const int b = bin_dim();
  Matrix out(d * b, d * b);
  for (int r = 0; r < b; ++r)
    for (int c = 0; c < b; ++c) {
      const auto x = entry(r, c).block(0);
      for (Index k = 0; k < d; ++k)
        for (Index kk = 0; kk < d; ++kk) out(k * b + r, kk * b + c) = x(k, kk);
    }
  return out;
}

JointBinState retain_bins_from(const DiscreteChannel& channel, const DickeLadderState& rho_before_n1,
                               const BinSchedule& schedule, int n_bins) {
  schedule.validate();
  if (n_bins != 1 && n_bins != 2) throw std::invalid_argument("retain_bins_from: n_bins must be 1 or 2");
  JointBinState j;
  j.n_bins_retained = n_bins;
  j.schedule = schedule;
  const DickeLadderState x00 = channel.couple(rho_before_n1, 0, 0);
  const DickeLadderState x10 = channel.couple(rho_before_n1, 1, 0);
  const DickeLadderState x11 = channel.couple(rho_before_n1, 1, 1);
  if (n_bins == 1) {
    j.entries = {x00, x10.adjoint(), x10, x11};
    return j;
  }
  const long gap = schedule.n2 - schedule.n1 - 1;
  const DickeLadderState y[2][2] = {{channel.power(x00, gap), channel.power(x10.adjoint(), gap)},
                                    {channel.power(x10, gap), channel.power(x11, gap)}};
  j.entries.assign(16, DickeLadderState(rho_before_n1.layout_ptr()));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          j.entries[static_cast<std::size_t>((2 * a + c) * 4 + (2 * b + d))] = channel.couple(y[a][b], c, d);
  return j;
}

JointBinState evolve_retaining_bins(const DiscreteChannel& channel, const DickeLadderState& rho0,
                                    const BinSchedule& schedule, int n_bins) {
  schedule.validate();
  return retain_bins_from(channel, channel.power(rho0, schedule.n1 - 1), schedule, n_bins);
}

JointBinState evolve_retaining_bins(const ModelParams& params, const DensityMatrix& rho0,
                                    const BinSchedule& schedule, KrausMode mode, int n_bins) {
  const DiscreteChannel channel(params, schedule.dt, mode);
  // The joint dimension is (N+1) 2^n_bins per ladder sector.
  if (static_cast<double>(channel.layout_ptr()->total) * 16.0 > 4e8)
    throw GuardExceeded("evolve_retaining_bins: joint state too large");
  return evolve_retaining_bins(channel, DickeLadderState::from_maximal(channel.layout_ptr(), rho0.data()),
                               schedule, n_bins);
}

JointBinState continue_unmonitored(const DiscreteChannel& channel, const JointBinState& joint, long steps) {
  JointBinState out = joint;
  for (auto& e : out.entries) e = channel.power(e, steps);
  return out;
}

BinReducedState reduce_to_bins(const JointBinState& joint) {
  const int b = joint.bin_dim();
  BinReducedState mu;
  mu.n_bins = joint.n_bins_retained;
  mu.schedule = joint.schedule;
  mu.source = BinSource::ExactDiscrete;
  mu.data.resize(b, b);
  for (int r = 0; r < b; ++r)
    for (int c = 0; c < b; ++c) mu.data(r, c) = joint.entry(r, c).trace();
  mu.data = hermitize(mu.data);
  return mu;
}

std::vector<BinReducedState> two_bin_exact_scan(const DiscreteChannel& channel,
                                                const DickeLadderState& rho_before_n1, long n1,
                                                const std::vector<long>& gaps) {
  std::vector<std::size_t> order(gaps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gaps[a] < gaps[b]; });
  DickeLadderState y00 = channel.couple(rho_before_n1, 0, 0);
  DickeLadderState y10 = channel.couple(rho_before_n1, 1, 0);
  DickeLadderState y11 = channel.couple(rho_before_n1, 1, 1);
  std::vector<BinReducedState> out(gaps.size());
  long now = 0;
  for (std::size_t i : order) {
    if (gaps[i] < 0) throw std::invalid_argument("two_bin_exact_scan: negative gap");
    const long step = gaps[i] - now;
    y00 = channel.power(y00, step);
    y10 = channel.power(y10, step);
    y11 = channel.power(y11, step);
    now = gaps[i];
    BinReducedState& mu = out[i];
    mu.n_bins = 2;
    mu.source = BinSource::ExactDiscrete;
    mu.schedule = BinSchedule{channel.dt(), n1, n1 + 1 + gaps[i]};
    mu.data = assemble_two_bin(channel.k(0), channel.k(1), y00, y10, y11);
  }
  return out;
}

// ---------------------------------------------------------------------------

BinReducedState one_bin_analytic(const PermSymLiouvillian& gen, const DickeLadderState& rho_t1, double dt,
                                 double t1) {
  require_dt(dt);
  warn_validity(gen.params(), dt, 0.1);
  const auto [k0, k1] = isometric_first_order(gen.layout(), gen.params().gamma_coll, dt);
  BinReducedState mu;
  mu.n_bins = 1;
  mu.source = BinSource::ShortTimeAnalytic;
  mu.schedule = BinSchedule::from_times(dt, t1, 0.0);
  mu.data = assemble_one_bin(k0, k1, rho_t1);
  return mu;
}

BinReducedState one_bin_analytic(const ModelParams& params, const DensityMatrix& rho_t1, double dt, double t1) {
  const auto gen = build_permsym_liouvillian(params);
  return one_bin_analytic(gen, DickeLadderState::from_maximal(gen.layout_ptr(), rho_t1.data()), dt, t1);
}

std::vector<BinReducedState> two_bin_analytic_scan(const PermSymLiouvillian& gen,
                                                   const DickeLadderState& rho_t1, double dt,
                                                   const std::vector<double>& taus, double t1) {
  require_dt(dt);
  warn_validity(gen.params(), dt, 0.1);
  const auto [k0, k1] = isometric_first_order(gen.layout(), gen.params().gamma_coll, dt);
  std::vector<std::size_t> order(taus.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return taus[a] < taus[b]; });
  DickeLadderState y00 = rho_t1.sandwich(k0, k0);
  DickeLadderState y10 = rho_t1.sandwich(k1, k0);
  DickeLadderState y11 = rho_t1.sandwich(k1, k1);
  const LinearAction act = gen.action();
  std::vector<BinReducedState> out(taus.size());
  double now = 0.0;
  for (std::size_t i : order) {
    if (!(taus[i] >= 0.0)) throw std::invalid_argument("two_bin_analytic: negative lag");
    const double step = taus[i] - now;
    y00.data() = expmv(act, y00.data(), step);
    y10.data() = expmv(act, y10.data(), step);
    y11.data() = expmv(act, y11.data(), step);
    now = taus[i];
    BinReducedState& mu = out[i];
    mu.n_bins = 2;
    mu.source = BinSource::ShortTimeAnalytic;
    mu.schedule = BinSchedule::from_times(dt, t1, taus[i]);
    mu.data = assemble_two_bin(k0, k1, y00, y10, y11);
  }
  return out;
}

BinReducedState two_bin_analytic(const PermSymLiouvillian& gen, const DickeLadderState& rho_t1, double dt,
                                 double tau, double t1) {
  return two_bin_analytic_scan(gen, rho_t1, dt, {tau}, t1).front();
}

BinReducedState two_bin_analytic(const ModelParams& params, const DensityMatrix& rho_t1, double dt, double tau,
                                 double t1) {
  const auto gen = build_permsym_liouvillian(params);
  return two_bin_analytic(gen, DickeLadderState::from_maximal(gen.layout_ptr(), rho_t1.data()), dt, tau, t1);
}

// ---------------------------------------------------------------------------

Matrix bin_annihilator(int n_bins, int which) {
  Matrix b = Matrix::Zero(2, 2);
  b(0, 1) = 1.0;
  if (n_bins == 1) {
    if (which != 0) throw std::invalid_argument("bin_annihilator: bin index out of range");
    return b;
  }
  if (n_bins != 2 || which < 0 || which > 1) throw std::invalid_argument("bin_annihilator: bad arguments");
  Matrix out = Matrix::Zero(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const int ra = r >> 1, rc = r & 1, ca = c >> 1, cc = c & 1;
      out(r, c) = which == 0 ? b(ra, ca) * (rc == cc ? 1.0 : 0.0) : b(rc, cc) * (ra == ca ? 1.0 : 0.0);
    }
  return out;
}

cplx bin_expect(const BinReducedState& mu, const Matrix& op) { return expectation(op, mu.data); }

double probing_time(double eta, double dt) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("probing_time: efficiency must lie in (0, 1]");
  require_dt(dt);
  return dt / eta;
}

ProbingRegime classify_probing(double tau_eta, double relax_time) {
  return tau_eta > relax_time ? ProbingRegime::VeryInefficient : ProbingRegime::Efficient;
}

const char* to_string(BinSource s) {
  return s == BinSource::ExactDiscrete ? "exact_discrete" : "short_time_analytic";
}

const char* to_string(KrausMode m) { return m == KrausMode::ExactUnitary ? "exact_unitary" : "first_order"; }

void write_bin_states_csv(const std::string& path, const std::vector<BinReducedState>& states,
                          const ModelParams& params) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_bin_states_csv: cannot open " + path);
  f << "# " << params.describe() << "\n";
  f << "n_bins,row,col,re,im,t1,tau,dt,source\n" << std::setprecision(17);
  for (const auto& mu : states)
    for (Index r = 0; r < mu.data.rows(); ++r)
      for (Index c = 0; c < mu.data.cols(); ++c)
        f << mu.n_bins << ',' << r << ',' << c << ',' << mu.data(r, c).real() << ',' << mu.data(r, c).imag()
          << ',' << mu.schedule.t1() << ',' << mu.schedule.tau() << ',' << mu.schedule.dt << ','
          << to_string(mu.source) << '\n';
  if (!f) throw std::runtime_error("write_bin_states_csv: write failed for " + path);
}

}  // namespace dicke
