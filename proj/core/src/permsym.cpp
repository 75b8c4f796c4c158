#include "dicke/permsym.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace dicke {

namespace {

std::shared_ptr<const SectorLayout> make_layout(int n, bool all) {
  if (n < 1) throw std::invalid_argument("SectorLayout: particle count must be >= 1");
  auto l = std::make_shared<SectorLayout>();
  l->n_particles = n;
  const int lowest = all ? n % 2 : n;
  for (int tj = n; tj >= lowest; tj -= 2) {
    l->two_j.push_back(tj);
    l->offset.push_back(l->total);
    l->total += static_cast<Index>(tj + 1) * (tj + 1);
    l->ops.push_back(build_spin_ops(tj));
  }
  return l;
}

void require_same_layout(const SectorLayout& a, const SectorLayout& b) {
  if (&a != &b && (a.n_particles != b.n_particles || a.two_j != b.two_j))
    throw std::invalid_argument("ladder layouts differ");
}

}  // namespace

std::shared_ptr<const SectorLayout> SectorLayout::full(int n) { return make_layout(n, true); }
std::shared_ptr<const SectorLayout> SectorLayout::maximal(int n) { return make_layout(n, false); }

// ---------------------------------------------------------------------------

BlockOperator BlockOperator::collective(const SectorLayout& layout, SpinComponent c) {
  BlockOperator op;
  for (const auto& o : layout.ops) {
    switch (c) {
      case SpinComponent::X: op.blocks.push_back(o.s_x); break;
      case SpinComponent::Y: op.blocks.push_back(o.s_y); break;
      case SpinComponent::Z: op.blocks.push_back(o.s_z); break;
      case SpinComponent::Plus: op.blocks.push_back(o.s_plus); break;
      case SpinComponent::Minus: op.blocks.push_back(o.s_minus); break;
    }
  }
  return op;
}

BlockOperator BlockOperator::identity(const SectorLayout& layout) {
  BlockOperator op;
  for (Index s = 0; s < layout.sectors(); ++s)
    op.blocks.push_back(Matrix::Identity(layout.dim(s), layout.dim(s)));
  return op;
}

BlockOperator BlockOperator::adjoint() const {
  BlockOperator op;
  for (const auto& b : blocks) op.blocks.push_back(b.adjoint());
  return op;
}

BlockOperator BlockOperator::operator*(const BlockOperator& o) const {
  if (o.blocks.size() != blocks.size()) throw std::invalid_argument("BlockOperator: size mismatch");
  BlockOperator op;
  for (std::size_t i = 0; i < blocks.size(); ++i) op.blocks.push_back(blocks[i] * o.blocks[i]);
  return op;
}

BlockOperator BlockOperator::operator+(const BlockOperator& o) const {
  if (o.blocks.size() != blocks.size()) throw std::invalid_argument("BlockOperator: size mismatch");
  BlockOperator op;
  for (std::size_t i = 0; i < blocks.size(); ++i) op.blocks.push_back(blocks[i] + o.blocks[i]);
  return op;
}

BlockOperator BlockOperator::operator*(cplx s) const {
  BlockOperator op;
  for (const auto& b : blocks) op.blocks.push_back(s * b);
  return op;
}

// ---------------------------------------------------------------------------

DickeLadderState::DickeLadderState(std::shared_ptr<const SectorLayout> layout)
    : layout_(std::move(layout)), data_(Vector::Zero(layout_->total)) {}

DickeLadderState::DickeLadderState(std::shared_ptr<const SectorLayout> layout, Vector data)
    : layout_(std::move(layout)), data_(std::move(data)) {
  if (data_.size() != layout_->total)
    throw std::invalid_argument("DickeLadderState: data size does not match layout");
}

DickeLadderState DickeLadderState::ground(std::shared_ptr<const SectorLayout> layout) {
  DickeLadderState s(std::move(layout));
  const Index d = s.layout().dim(0);
  s.block(0)(d - 1, d - 1) = 1.0;
  return s;
}

DickeLadderState DickeLadderState::from_maximal(std::shared_ptr<const SectorLayout> layout,
                                                const Matrix& rho) {
  DickeLadderState s(std::move(layout));
  const Index d = s.layout().dim(0);
  if (rho.rows() != d || rho.cols() != d)
    throw std::invalid_argument("from_maximal: matrix does not match the maximal sector");
  s.block(0) = rho;
  return s;
}

Eigen::Map<Matrix> DickeLadderState::block(Index s) {
  const Index d = layout_->dim(s);
  return Eigen::Map<Matrix>(data_.data() + layout_->offset[static_cast<std::size_t>(s)], d, d);
}

Eigen::Map<const Matrix> DickeLadderState::block(Index s) const {
  const Index d = layout_->dim(s);
  return Eigen::Map<const Matrix>(data_.data() + layout_->offset[static_cast<std::size_t>(s)], d, d);
}

cplx DickeLadderState::trace() const {
  cplx t = 0.0;
  for (Index s = 0; s < layout_->sectors(); ++s) t += block(s).trace();
  return t;
}

std::vector<double> DickeLadderState::sector_weights() const {
  std::vector<double> w;
  for (Index s = 0; s < layout_->sectors(); ++s) w.push_back(block(s).trace().real());
  return w;
}

cplx DickeLadderState::expect(const BlockOperator& a) const {
  if (static_cast<Index>(a.blocks.size()) != layout_->sectors())
    throw std::invalid_argument("expect: operator does not match layout");
  cplx acc = 0.0;
  for (Index s = 0; s < layout_->sectors(); ++s)
    acc += expectation(a.blocks[static_cast<std::size_t>(s)], block(s));
  return acc;
}

cplx DickeLadderState::expect(SpinComponent c) const {
  cplx acc = 0.0;
  for (Index s = 0; s < layout_->sectors(); ++s) {
    const auto& o = layout_->sector_ops(s);
    const Matrix* m = nullptr;
    switch (c) {
      case SpinComponent::X: m = &o.s_x; break;
      case SpinComponent::Y: m = &o.s_y; break;
      case SpinComponent::Z: m = &o.s_z; break;
      case SpinComponent::Plus: m = &o.s_plus; break;
      case SpinComponent::Minus: m = &o.s_minus; break;
    }
    acc += expectation(*m, block(s));
  }
  return acc;
}

StateCheck DickeLadderState::check() const {
  StateCheck c;
  c.hermiticity_error = 0.0;
  c.min_eigenvalue = INFINITY;
  for (Index s = 0; s < layout_->sectors(); ++s) {
    const Matrix b = block(s);
    c.hermiticity_error = std::max(c.hermiticity_error, (b - b.adjoint()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix> es(dicke::hermitize(b), Eigen::EigenvaluesOnly);
    c.min_eigenvalue = std::min(c.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  c.trace_error = std::abs(trace() - cplx(1.0, 0.0));
  return c;
}

void DickeLadderState::hermitize() {
  for (Index s = 0; s < layout_->sectors(); ++s) {
    auto b = block(s);
    const Matrix h = 0.5 * (b + b.adjoint());
    b = h;
  }
}

DickeLadderState DickeLadderState::left_multiply(const BlockOperator& a) const {
  DickeLadderState out(layout_);
  for (Index s = 0; s < layout_->sectors(); ++s)
    out.block(s).noalias() = a.blocks[static_cast<std::size_t>(s)] * block(s);
  return out;
}

DickeLadderState DickeLadderState::right_multiply(const BlockOperator& a) const {
  DickeLadderState out(layout_);
  for (Index s = 0; s < layout_->sectors(); ++s)
    out.block(s).noalias() = block(s) * a.blocks[static_cast<std::size_t>(s)];
  return out;
}

DickeLadderState DickeLadderState::sandwich(const BlockOperator& a, const BlockOperator& b) const {
  DickeLadderState out(layout_);
  for (Index s = 0; s < layout_->sectors(); ++s) {
    const auto i = static_cast<std::size_t>(s);
    out.block(s).noalias() = a.blocks[i] * block(s) * b.blocks[i].adjoint();
  }
  return out;
}

DickeLadderState DickeLadderState::adjoint() const {
  DickeLadderState out(layout_);
  for (Index s = 0; s < layout_->sectors(); ++s) out.block(s) = block(s).adjoint();
  return out;
}

// ---------------------------------------------------------------------------

double lowering_cg2(double j, double m, int dj) {
  switch (dj) {
    case 1:
      return (j - m + 1) * (j - m + 2) / ((2 * j + 1) * (2 * j + 2));
    case 0:
      return j > 0 ? (j + m) * (j - m + 1) / (2 * j * (j + 1)) : 0.0;
    case -1:
      return j > 0 ? (j + m) * (j + m - 1) / (2 * j * (2 * j + 1)) : 0.0;
    default:
      throw std::invalid_argument("lowering_cg2: dj must be -1, 0 or 1");
  }
}

PermSymLiouvillian::PermSymLiouvillian(const ModelParams& params,
                                       std::shared_ptr<const SectorLayout> layout)
    : PermSymLiouvillian(Unchecked{}, (params.validate(), params), std::move(layout)) {}

PermSymLiouvillian PermSymLiouvillian::local_only(int n_particles, double gamma_loc,
                                                  std::shared_ptr<const SectorLayout> layout) {
  if (!(gamma_loc >= 0.0)) throw std::invalid_argument("local_only: negative decay rate");
  return PermSymLiouvillian(Unchecked{}, ModelParams{n_particles, 0.0, 0.0, gamma_loc},
                            std::move(layout));
}

PermSymLiouvillian::PermSymLiouvillian(Unchecked, const ModelParams& params,
                                       std::shared_ptr<const SectorLayout> layout)
    : params_(params), layout_(std::move(layout)) {
  const SectorLayout& lay = *layout_;
  if (lay.n_particles != params_.n_particles)
    throw std::invalid_argument("PermSymLiouvillian: layout particle count mismatch");
  const Index ns = lay.sectors();
  const bool complete = lay.two_j.back() == params_.n_particles % 2;
  if (params_.gamma_loc > 0.0 && !complete)
    throw std::invalid_argument("PermSymLiouvillian: local decay needs every spin sector");
  const double half_n = 0.5 * params_.n_particles;
  branching_ = Eigen::MatrixXd::Zero(ns, ns);

  for (Index s = 0; s < ns; ++s) {
    const auto& o = lay.sector_ops(s);
    RealVector loss;
    if (params_.gamma_loc > 0.0) {
      loss.resize(o.dim);
      for (Index k = 0; k < o.dim; ++k) loss[k] = params_.gamma_loc * (half_n + o.m_at(k));
    }
    sectors_.emplace_back(o.two_j, params_.omega, params_.gamma_coll, loss);
  }
  if (params_.gamma_loc == 0.0) return;

  // Branching weights R(j -> j') are m-independent; solve them from the
  // requirement that the total outgoing rate from |j,m> is gamma (N/2 + m).
  for (Index s = 0; s < ns; ++s) {
    const double j = 0.5 * lay.two_j[static_cast<std::size_t>(s)];
    std::vector<std::pair<int, Index>> targets;  // (dj, sector index)
    if (s > 0) targets.emplace_back(1, s - 1);
    if (j > 0) targets.emplace_back(0, s);
    if (s + 1 < ns) targets.emplace_back(-1, s + 1);
    const Index d = lay.dim(s);
    Eigen::MatrixXd a(d, static_cast<Index>(targets.size()));
    Eigen::VectorXd rhs(d);
    for (Index k = 0; k < d; ++k) {
      const double m = j - static_cast<double>(k);
      rhs[k] = half_n + m;
      for (std::size_t t = 0; t < targets.size(); ++t)
        a(k, static_cast<Index>(t)) = lowering_cg2(j, m, targets[t].first);
    }
    const Eigen::VectorXd r = a.colPivHouseholderQr().solve(rhs);
    const double resid = (a * r - rhs).cwiseAbs().maxCoeff();
    if (resid > 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()) || (r.array() < -1e-12).any()) {
      std::ostringstream os;
      os << "PermSymLiouvillian: inconsistent branching weights for j=" << j
         << " (residual " << resid << ")";
      throw NumericalError(os.str());
    }
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto [dj, target] = targets[t];
      const double rate = std::max(0.0, r[static_cast<Index>(t)]);
      branching_(s, target) = rate;
      if (rate == 0.0) continue;
      Feed f;
      f.from = s;
      f.to = target;
      f.shift = dj + 1;
      f.weight = RealVector::Zero(d);
      const Index dt = lay.dim(target);
      for (Index k = 0; k < d; ++k) {
        const Index kt = k + f.shift;
        if (kt < 0 || kt >= dt) continue;
        const double m = j - static_cast<double>(k);
        f.weight[k] = std::sqrt(params_.gamma_loc * rate * lowering_cg2(j, m, dj));
      }
      feeds_.push_back(std::move(f));
    }
  }
}

double PermSymLiouvillian::branching(Index from, Index to) const {
  return branching_(from, to);
}

void PermSymLiouvillian::apply(const cplx* in, cplx* out) const {
  const SectorLayout& lay = *layout_;
  for (Index s = 0; s < lay.sectors(); ++s) {
    const Index off = lay.offset[static_cast<std::size_t>(s)];
    sectors_[static_cast<std::size_t>(s)].apply(in + off, out + off);
  }
  for (const Feed& f : feeds_) {
    const Index ds = lay.dim(f.from), dt = lay.dim(f.to);
    const cplx* src = in + lay.offset[static_cast<std::size_t>(f.from)];
    cplx* dst = out + lay.offset[static_cast<std::size_t>(f.to)];
    for (Index l = 0; l < ds; ++l) {
      const double wl = f.weight[l];
      if (wl == 0.0) continue;
      const Index lt = l + f.shift;
      for (Index k = 0; k < ds; ++k) {
        const double wk = f.weight[k];
        if (wk == 0.0) continue;
        dst[(k + f.shift) + dt * lt] += (wk * wl) * src[k + ds * l];
      }
    }
  }
}

DickeLadderState PermSymLiouvillian::apply(const DickeLadderState& x) const {
  require_same_layout(x.layout(), *layout_);
  DickeLadderState out(layout_);
  apply(x.data().data(), out.data().data());
  return out;
}

double PermSymLiouvillian::norm_bound() const {
  double b = 0.0;
  for (const auto& l : sectors_) b = std::max(b, l.norm_bound());
  return b + params_.gamma_loc * params_.n_particles;
}

SparseMatrix PermSymLiouvillian::sparse_superoperator() const {
  const SectorLayout& lay = *layout_;
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Index s = 0; s < lay.sectors(); ++s) {
    const Index off = lay.offset[static_cast<std::size_t>(s)];
    const SparseMatrix blk = sectors_[static_cast<std::size_t>(s)].sparse_superoperator();
    for (Index c = 0; c < blk.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(blk, c); it; ++it)
        trip.emplace_back(off + it.row(), off + it.col(), it.value());
  }
  for (const Feed& f : feeds_) {
    const Index ds = lay.dim(f.from), dt = lay.dim(f.to);
    const Index os = lay.offset[static_cast<std::size_t>(f.from)];
    const Index ot = lay.offset[static_cast<std::size_t>(f.to)];
    for (Index l = 0; l < ds; ++l)
      for (Index k = 0; k < ds; ++k) {
        const double w = f.weight[k] * f.weight[l];
        if (w == 0.0) continue;
        trip.emplace_back(ot + (k + f.shift) + dt * (l + f.shift), os + k + ds * l, cplx(w, 0.0));
      }
  }
  SparseMatrix m(lay.total, lay.total);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

LinearAction PermSymLiouvillian::action() const {
  LinearAction a;
  a.size = size();
  a.norm_bound = norm_bound();
  a.apply = [this](const cplx* in, cplx* out) { apply(in, out); };
  return a;
}

PermSymLiouvillian build_permsym_liouvillian(const ModelParams& params, const PermSymOptions& opts) {
  params.validate();
  const bool all = opts.all_sectors || params.gamma_loc > 0.0;
  if (all && params.n_particles > opts.max_particles)
    throw GuardExceeded("build_permsym_liouvillian: N=" + std::to_string(params.n_particles) +
                        " exceeds the all-sector guard " + std::to_string(opts.max_particles));
  return PermSymLiouvillian(params, all ? SectorLayout::full(params.n_particles)
                                        : SectorLayout::maximal(params.n_particles));
}

DickeLadderState propagate_permsym(const PermSymLiouvillian& gen, const DickeLadderState& x,
                                   double t, const ExpmvOptions& opts) {
  require_same_layout(x.layout(), gen.layout());
  return DickeLadderState(gen.layout_ptr(), expmv(gen.action(), x.data(), t, opts));
}

DickeLadderState evolve_permsym(const PermSymLiouvillian& gen, const DickeLadderState& state0,
                                double t, const ExpmvOptions& opts) {
  if (t < 0.0) throw std::invalid_argument("evolve_permsym: negative time");
  DickeLadderState out = propagate_permsym(gen, state0, t, opts);
  out.hermitize();
  const StateCheck c = out.check();
  if (c.min_eigenvalue < -1e-6) {
    std::ostringstream os;
    os << "evolve_permsym: positivity violated (min eigenvalue " << c.min_eigenvalue << ")";
    throw NumericalError(os.str());
  }
  return out;
}

}  // namespace dicke
