#pragma once

#include <cstdint>
#include <string>

namespace dicke {

/// Parameters of the driven collective-decay model with optional local decay.
///
///   d rho/dt = -i omega [S_x, rho] + gamma_coll D[S_-] rho
///              + gamma_loc sum_j D[sigma_-^(j)] rho
///
/// Rates share one arbitrary unit; most callers set gamma_coll = 1.
struct ModelParams {
  int n_particles = 1;
  double omega = 0.0;
  double gamma_coll = 1.0;
  double gamma_loc = 0.0;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  /// Total spin of the maximal sector, N/2.
  double spin() const { return 0.5 * n_particles; }
  int dim() const { return n_particles + 1; }

  /// Convenience constructor in units of the critical drive.
  static ModelParams at_ratio(int n, double omega_ratio, double gamma_coll = 1.0,
                              double gamma_loc_ratio = 0.0);

  ModelParams with_omega(double w) const {
    ModelParams p = *this;
    p.omega = w;
    return p;
  }

  /// Stable 64-bit key (exact bit patterns of all fields).
  std::uint64_t hash() const;
  std::string describe() const;

  bool operator==(const ModelParams&) const = default;
};

/// Critical drive N * Gamma / 2 separating the overdamped and oscillatory regimes.
double omega_c(const ModelParams& params);

/// Mean-field oscillation frequency sqrt(omega^2 - omega_c^2); requires omega > omega_c.
double mean_field_frequency(const ModelParams& params);

}  // namespace dicke
