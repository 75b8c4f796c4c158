#include "dicke/model.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dicke {

void ModelParams::validate() const {
  if (n_particles < 1) {
    throw std::invalid_argument("invalid particle count N=" + std::to_string(n_particles) +
                                " (need N >= 1)");
  }
  if (!(gamma_coll > 0.0) || !std::isfinite(gamma_coll)) {
    throw std::invalid_argument("collective decay rate must be positive and finite");
  }
  if (!(gamma_loc >= 0.0) || !std::isfinite(gamma_loc)) {
    throw std::invalid_argument("local decay rate must be non-negative and finite");
  }
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    throw std::invalid_argument("Rabi frequency must be non-negative and finite");
  }
}

ModelParams ModelParams::at_ratio(int n, double omega_ratio, double gamma_coll,
                                  double gamma_loc_ratio) {
  ModelParams p;
  p.n_particles = n;
  p.gamma_coll = gamma_coll;
  p.omega = omega_ratio * 0.5 * n * gamma_coll;
  p.gamma_loc = gamma_loc_ratio * gamma_coll;
  p.validate();
  return p;
}

std::uint64_t ModelParams::hash() const {
  // FNV-1a over the raw field bits.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(n_particles));
  mix(std::bit_cast<std::uint64_t>(omega));
  mix(std::bit_cast<std::uint64_t>(gamma_coll));
  mix(std::bit_cast<std::uint64_t>(gamma_loc));
  return h;
}

std::string ModelParams::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "N=" << n_particles << " omega=" << omega << " gamma_coll=" << gamma_coll
     << " gamma_loc=" << gamma_loc;
  return os.str();
}

double omega_c(const ModelParams& params) {
  params.validate();
  return 0.5 * params.n_particles * params.gamma_coll;
}

double mean_field_frequency(const ModelParams& params) {
  const double wc = omega_c(params);
  if (!(params.omega > wc)) {
    throw std::domain_error("mean-field frequency undefined for omega <= omega_c (overdamped)");
  }
  return std::sqrt(params.omega * params.omega - wc * wc);
}

}  // namespace dicke
