#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dicke/density_matrix.hpp"
#include "dicke/expmv.hpp"
#include "dicke/liouvillian.hpp"
#include "dicke/permsym.hpp"

namespace dicke {

struct EvolveOptions {
  ExpmvOptions expmv;
  double positivity_tol = 1e-6;
};

/// e^{L t} rho0, symmetrized. Rejects t < 0; throws NumericalError when the
/// result has an eigenvalue below -positivity_tol.
DensityMatrix evolve(const Liouvillian& l, const DensityMatrix& rho0, double t,
                     const EvolveOptions& opts = {});

/// Unique stationary state from a sparse LU solve with the trace constraint
/// replacing one equation. Throws DegenerateSteadyState when the stationary
/// space is not one-dimensional.
DensityMatrix steady_state(const Liouvillian& l);
DickeLadderState steady_state(const PermSymLiouvillian& gen);

/// Eigen-decomposition of the superoperator, sorted by descending real part.
struct SpectralDecomposition {
  std::vector<cplx> eigenvalues;
  std::vector<Matrix> right_modes;  // empty unless requested
  std::vector<Matrix> left_modes;   // Tr(l_j^dagger r_k) = delta_jk
  double gap = 0.0;                 // |Re lambda_1|
  double relax_time = 0.0;          // 1 / |lambda_1|
  std::optional<double> gamma_1;    // slowest non-oscillatory decay rate
  std::optional<double> gamma_2;    // slowest oscillatory decay rate
  double omega_2 = 0.0;             // |Im| of the gamma_2 pair
  std::vector<std::size_t> borderline;  // modes within a decade of the threshold
};

struct SpectralOptions {
  bool modes = false;
  double oscillatory_threshold = 1e-8;  // in units of gamma_coll
};

SpectralDecomposition spectral_decomposition(const Liouvillian& l, const SpectralOptions& opts = {});

/// Regression sum sum_j e^{lambda_j tau} Tr(A r_j) Tr(l_j^dagger X0); needs modes.
cplx correlation_from_modes(const SpectralDecomposition& sd, const Matrix& a, const Matrix& x0,
                            double tau);

enum class CorrelationKind {
  PlusTauMinus,   // <S_+(tau) S_->
  PlusMinusTau,   // <S_+ S_-(tau)>
  MinusTauMinus,  // <S_-(tau) S_->
};

struct TwoTimeCorrelation {
  double t1 = 0.0;
  CorrelationKind kind = CorrelationKind::PlusTauMinus;
  std::vector<double> tau_grid;
  std::vector<cplx> values;
};

/// Quantum regression: propagate B rho (or rho B) and trace against A.
/// Lags must be non-negative; the grid may be unsorted.
TwoTimeCorrelation two_time_correlation(const PermSymLiouvillian& gen, const DickeLadderState& rho_t1,
                                        const std::vector<double>& tau_grid,
                                        CorrelationKind kind = CorrelationKind::PlusTauMinus,
                                        double t1 = 0.0, const ExpmvOptions& opts = {});
TwoTimeCorrelation two_time_correlation(const Liouvillian& l, const DensityMatrix& rho_t1,
                                        const std::vector<double>& tau_grid,
                                        CorrelationKind kind = CorrelationKind::PlusTauMinus,
                                        double t1 = 0.0, const ExpmvOptions& opts = {});

/// CSV with columns t1,tau,re,im after a '#' metadata line.
void write_correlation_csv(const std::string& path, const TwoTimeCorrelation& c,
                           const ModelParams& params);

/// Gamma (<S_+S_-> - <S_+><S_->) in the given state.
double incoherent_intensity(const DickeLadderState& rho, double gamma_coll);
/// Same, at the stationary state.
double incoherent_intensity(const PermSymLiouvillian& gen);
double incoherent_intensity(const Liouvillian& l);

/// Three-mode ansatz for the stationary <S_+(tau) S_-> in the oscillatory
/// regime: |<S_+>|^2 + c1 e^{-gamma_1 tau} + 2 c2 cos(Omega tau) e^{-gamma_2 tau}.
struct AnsatzParams {
  double gamma_coll = 1.0;
  double omega = 0.0;
  double omega_osc = 0.0;  // Omega = sqrt(omega^2 - omega_c^2)
  double i_inc = 0.0;
  double gamma_1 = 0.0;
  double gamma_2 = 0.0;
  double coherent_bg = 0.0;  // |<S_+>_ss|^2
  double c1 = 0.0;           // i_inc / (2 gamma_coll)
  double c2 = 0.0;           // i_inc / (4 gamma_coll)
  /// Envelope rate of the derivative; defaults to gamma_2.
  double derivative_rate = 0.0;
};

/// Stationary quantities and the two slowest decay rates for `params`.
/// Throws std::domain_error in the overdamped regime.
AnsatzParams make_ansatz_params(const ModelParams& params);

cplx ansatz_correlation(const AnsatzParams& p, double tau);
/// -(i_inc tau dOmega/domega / 2 gamma_coll) sin(Omega tau) e^{-rate tau}.
cplx ansatz_derivative(const AnsatzParams& p, double tau);

/// Read-mostly cache of eigenvalue-only decompositions keyed by
/// ModelParams::hash(). Safe for concurrent use. When a directory is given
/// (or DICKE_SENSE_CACHE_DIR is set) spectra are persisted as text files.
class SpectralCache {
 public:
  explicit SpectralCache(std::string directory = {});
  static SpectralCache& global();

  std::shared_ptr<const SpectralDecomposition> get(const ModelParams& params);
  std::size_t size() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace dicke
