#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pcfsq/fft.hpp"
#include "pcfsq/grid.hpp"
#include "pcfsq/response.hpp"
#include "pcfsq/rng.hpp"

namespace pcfsq {

/// Wigner vacuum input: complex Gaussian, independent per time bin, with
/// <|dphi_j|^2> = 1/(2 nbar dt) — half a photon per temporal mode in the
/// normalization where nbar * sum |phi_j|^2 dt counts photons.
///
/// Draws are made per spectral mode and keyed by the signed frequency integer,
/// whose variance 1/(2 nbar * 2T) depends only on the window. Refining the
/// grid (same window, more points) therefore keeps the identical vacuum
/// realization on all shared frequencies and only adds fresh high-frequency
/// modes, which makes grid-convergence comparisons nearly noise-free.
inline void init_vacuum(const Grid& grid, double nbar, const NoiseKey& key, FftWorkspace& ws,
                        cplx* out) {
  if (nbar <= 0.0) throw std::invalid_argument("init_vacuum: nbar must be positive");
  const int n = grid.n_points;
  const double window = n * grid.dt;
  const double amp = std::sqrt(1.0 / (4.0 * nbar * window));
  cplx* spec = ws.scratch_b();
  for (int j = 0; j < n; ++j) {
    const int m = j < n / 2 ? j : j - n;  // signed frequency integer
    const std::uint32_t idx = m >= 0 ? static_cast<std::uint32_t>(2 * m)
                                     : static_cast<std::uint32_t>(-2 * m - 1);
    double x, y;
    normal_pair(key, NoiseChannel::vacuum, 0, idx, x, y);
    spec[j] = amp * cplx(x, y);
  }
  ws.to_time(spec, out);
}

inline std::vector<cplx> init_vacuum(const Grid& grid, double nbar, const NoiseKey& key) {
  FftWorkspace ws(grid.n_points);
  std::vector<cplx> field(grid.n_points);
  init_vacuum(grid, nbar, key, ws, field.data());
  return field;
}

// Precomputed half-complex amplitudes for synthesizing one step of the real
// Raman noise field. Target statistics: periodogram N dt |Gamma_k|^2 = S(Omega_k)/dz,
// so the spectral coefficient variance per full-DFT bin is S_k/(N dt dz).
class RamanNoiseSampler {
 public:
  RamanNoiseSampler(const Grid& grid, const RamanNoiseSpec& spec, double dz) : n_(grid.n_points) {
    if (dz <= 0.0) throw std::invalid_argument("RamanNoiseSampler: dz must be positive");
    const int half = n_ / 2;
    amp_.assign(half + 1, 0.0);
    if (spec.spectral_density.empty()) return;  // no noise configured
    if (static_cast<int>(spec.spectral_density.size()) != n_)
      throw std::invalid_argument("RamanNoiseSampler: spectral density does not match the grid");
    const double norm = 1.0 / (n_ * grid.dt * dz);
    for (int k = 1; k < half; ++k) {
      const double v = spec.spectral_density[k] * norm;
      amp_[k] = std::sqrt(0.5 * v);
      active_ = active_ || v > 0.0;
    }
    const double v_nyq = spec.spectral_density[half] * norm;
    amp_[half] = std::sqrt(v_nyq);
    active_ = active_ || v_nyq > 0.0;
  }

  bool active() const { return active_; }

  /// Writes one real noise field Gamma_j (length n) for the given step.
  void sample(const NoiseKey& key, std::uint32_t step, FftWorkspace& ws, double* out) const {
    if (!active_) {
      for (int j = 0; j < n_; ++j) out[j] = 0.0;
      return;
    }
    cplx* h = ws.scratch_half();
    const int half = n_ / 2;
    h[0] = 0.0;
    for (int k = 1; k < half; ++k) {
      double x, y;
      normal_pair(key, NoiseChannel::raman, step, static_cast<std::uint32_t>(k), x, y);
      h[k] = amp_[k] * cplx(x, y);
    }
    double x, y;
    normal_pair(key, NoiseChannel::raman, step, static_cast<std::uint32_t>(half), x, y);
    h[half] = amp_[half] * x;
    ws.backward_c2r(h, out);
  }

 private:
  int n_;
  std::vector<double> amp_;
  bool active_ = false;
};

/// One-shot convenience form (tests); the propagator keeps a sampler instead.
inline std::vector<double> sample_raman_noise(const Grid& grid, const RamanNoiseSpec& spec,
                                              double dz, const NoiseKey& key,
                                              std::uint32_t step = 0) {
  RamanNoiseSampler sampler(grid, spec, dz);
  FftWorkspace ws(grid.n_points);
  std::vector<double> gamma(grid.n_points);
  sampler.sample(key, step, ws, gamma.data());
  return gamma;
}

enum class GawbsCorrelation {
  white_in_z,
  per_fibre_constant,
};

enum class GawbsInterArm {
  independent,
  common,
};

struct GawbsModel {
  double magnitude = 3.2e-4;  // G
  GawbsCorrelation correlation = GawbsCorrelation::white_in_z;
  GawbsInterArm inter_arm = GawbsInterArm::independent;
  // Acoustic phase density: Var(accumulated phase) = G^2 * phase_density * z.
  // Fixes the normalization of eta that the magnitude G is quoted against;
  // near-unit density means eta is approximately unit-density white noise in z.
  // The value is set so enabling GAWBS degrades the optima of the energy sweep
  // and of the fibre-length study by the observed amounts.
  double phase_density = 1.35;

  void validate() const {
    if (magnitude < 0.0) throw std::invalid_argument("gawbs magnitude must be >= 0");
    if (phase_density < 0.0) throw std::invalid_argument("gawbs phase density must be >= 0");
  }
};

/// Refractive-index fluctuation eta for one step (white_in_z) or for the whole
/// fibre (per_fibre_constant, variance 1; caller scales by length).
inline double sample_gawbs(const GawbsModel& model, double dz, const NoiseKey& key,
                           std::uint32_t step) {
  model.validate();
  if (dz <= 0.0) throw std::invalid_argument("sample_gawbs: dz must be positive");
  NoiseKey k = key;
  if (model.inter_arm == GawbsInterArm::common) k.arm = 0;
  double x, y;
  if (model.correlation == GawbsCorrelation::per_fibre_constant) {
    normal_pair(k, NoiseChannel::gawbs, 0, 0, x, y);
    return x;
  }
  normal_pair(k, NoiseChannel::gawbs, step, 0, x, y);
  return std::sqrt(model.phase_density / dz) * x;
}

/// Acoustic phases accumulated by one arm at each stop of an ascending z
/// grid, walking the same step partition a propagation to z_stops.back()
/// would use (full dz steps, shortened remainder). The phase is a global
/// rotation of the field, so it commutes with the propagation exactly and can
/// be applied at measurement.
inline std::vector<double> accumulated_gawbs_phases(const GawbsModel& model,
                                                    const std::vector<double>& z_stops,
                                                    double dz, const NoiseKey& key) {
  model.validate();
  std::vector<double> out(z_stops.size(), 0.0);
  if (z_stops.empty()) return out;
  if (model.correlation == GawbsCorrelation::per_fibre_constant) {
    const double eta = model.magnitude > 0.0 ? sample_gawbs(model, dz, key, 0) : 0.0;
    for (std::size_t i = 0; i < z_stops.size(); ++i)
      out[i] = model.magnitude * eta * z_stops[i];
    return out;
  }
  for (std::size_t i = 1; i < z_stops.size(); ++i)
    if (z_stops[i] < z_stops[i - 1])
      throw std::invalid_argument("accumulated_gawbs_phases: z_stops must be ascending");
  if (model.magnitude == 0.0) return out;
  // Stops end a (possibly shortened) step, mirroring the propagator, so the
  // phase recorded at a stop is bit-identical to an accumulation ending there.
  const double length_z = z_stops.back();
  double theta = 0.0;
  double z = 0.0;
  std::uint32_t step = 0;
  std::size_t next = 0;
  while (true) {
    while (next < z_stops.size() && z >= z_stops[next] - 1e-12) out[next++] = theta;
    if (z >= length_z - 1e-12) break;
    const double h = std::min(dz, z_stops[next] - z);
    theta += model.magnitude * sample_gawbs(model, h, key, step) * h;
    z += h;
    ++step;
  }
  while (next < z_stops.size()) out[next++] = theta;
  return out;
}

/// Single-length convenience form.
inline double accumulated_gawbs_phase(const GawbsModel& model, double length_z, double dz,
                                      const NoiseKey& key) {
  if (length_z <= 0.0) return 0.0;
  return accumulated_gawbs_phases(model, {length_z}, dz, key)[0];
}

}  // namespace pcfsq
