#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "pcfsq/constants.hpp"

namespace pcfsq {

enum class PulseShape { Sech, Gaussian };

/// Fibre constants in the units they are usually quoted in.
/// beta2 is the magnitude of the group-velocity dispersion; `anomalous`
/// records the sign (soliton propagation requires anomalous dispersion).
struct FibreParams {
  double beta2_ps2_km = 0.0;
  bool anomalous = true;
  double beta3_ps3_km = 0.0;
  double gamma_per_w_km = 0.0;
  double wavelength_m = 0.0;
  double effective_area_m2 = 0.0;
  double group_velocity_m_s = kSpeedOfLight / 1.45;
  double loss_fraction = 0.0;     // lumped linear loss epsilon in [0,1]
  double spectral_overlap = 1.0;  // fringe visibility V in [0,1]
  double gawbs_magnitude = 0.0;   // G, dimensionless

  void validate() const {
    if (!(beta2_ps2_km > 0.0)) throw std::invalid_argument("fibre: beta2 must be > 0");
    if (!(gamma_per_w_km > 0.0)) throw std::invalid_argument("fibre: gamma must be > 0");
    if (!(wavelength_m > 0.0)) throw std::invalid_argument("fibre: wavelength must be > 0");
    if (loss_fraction < 0.0 || loss_fraction > 1.0)
      throw std::invalid_argument("fibre: loss_fraction outside [0,1]");
    if (spectral_overlap < 0.0 || spectral_overlap > 1.0)
      throw std::invalid_argument("fibre: spectral_overlap outside [0,1]");
    if (gawbs_magnitude < 0.0) throw std::invalid_argument("fibre: gawbs_magnitude must be >= 0");
  }
};

struct PulseParams {
  double t0_ps = 0.0;
  double total_energy_pj = 0.0;  // both Sagnac arms combined
  PulseShape shape = PulseShape::Sech;

  void validate() const {
    if (!(t0_ps > 0.0)) throw std::invalid_argument("pulse: t0 must be > 0");
    if (total_energy_pj < 0.0) throw std::invalid_argument("pulse: total_energy must be >= 0");
  }
};

/// Dimensionless scales of the propagation equation.
struct Scales {
  double z0_m = 0.0;        // dispersion length t0^2/beta2
  double nbar = 0.0;        // half photon number of the fundamental soliton
  double es_pj = 0.0;       // fundamental soliton energy 2*nbar*hbar*omega0
  double b3 = 0.0;          // beta3 / (|beta2| t0)
  double s = 0.0;           // self-steepening coefficient 1/(omega0 t0)
  double omega0_rad_s = 0.0;
  double t0_s = 0.0;
};

inline Scales derive_scales(const FibreParams& fibre, const PulseParams& pulse) {
  fibre.validate();
  pulse.validate();
  Scales sc;
  sc.omega0_rad_s = 2.0 * kPi * kSpeedOfLight / fibre.wavelength_m;
  sc.t0_s = pulse.t0_ps * 1e-12;
  // t0^2/beta2: ps^2 / (ps^2/km) = km
  sc.z0_m = pulse.t0_ps * pulse.t0_ps / fibre.beta2_ps2_km * 1e3;
  // beta2/(gamma t0) has units ps*W = 1e-12 J
  const double photon_j = kHbar * sc.omega0_rad_s;
  sc.nbar = fibre.beta2_ps2_km / (fibre.gamma_per_w_km * pulse.t0_ps) * 1e-12 / photon_j;
  sc.es_pj = 2.0 * sc.nbar * photon_j * 1e12;
  sc.b3 = fibre.beta3_ps3_km / (fibre.beta2_ps2_km * pulse.t0_ps);
  sc.s = 1.0 / (sc.omega0_rad_s * sc.t0_s);
  return sc;
}

/// Input amplitude of one Sagnac arm: each arm carries half the total energy,
/// so the envelope is A*sech(tau) with A = sqrt((E/2)/E_s).
inline double arm_amplitude(double total_energy_pj, const Scales& scales) {
  if (total_energy_pj < 0.0) throw std::invalid_argument("total_energy must be >= 0");
  return std::sqrt(0.5 * total_energy_pj / scales.es_pj);
}

inline const char* to_string(PulseShape s) {
  return s == PulseShape::Sech ? "sech" : "gaussian";
}

}  // namespace pcfsq
