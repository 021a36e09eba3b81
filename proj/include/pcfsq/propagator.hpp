#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pcfsq/fft.hpp"
#include "pcfsq/grid.hpp"
#include "pcfsq/response.hpp"
#include "pcfsq/rng.hpp"
#include "pcfsq/stochastic.hpp"

namespace pcfsq {

struct TrajectoryField {
  std::vector<cplx> values;
  double z = 0.0;
};

struct StepConfig {
  double dz = 1e-3;
  bool kerr = true;  // entire intensity-dependent phase; off = shot-noise calibration
  bool raman_noise = true;
  bool gawbs = true;
  bool third_order = false;
  bool self_steepening = false;
  double b3 = 0.0;
  double s = 0.0;

  void validate() const {
    if (dz <= 0.0) throw std::invalid_argument("step dz must be positive");
    if (s < 0.0) throw std::invalid_argument("self-steepening coefficient must be >= 0");
  }

  double effective_b3() const { return third_order ? b3 : 0.0; }
};

using SnapshotFn = std::function<void(const TrajectoryField&)>;

namespace detail {

[[noreturn]] inline void integration_failure(std::uint32_t step, double z, double max_abs) {
  std::ostringstream msg;
  msg << "non-finite field at step " << step << ", z = " << z << ", max|phi| = " << max_abs;
  throw std::runtime_error(msg.str());
}

// phi *= exp(i theta), with a cheap polynomial for small angles. At the 0.005
// cutoff the polynomial's |exp| deviates from 1 by < 3e-16, so photon number
// stays conserved to rounding even over 1e5 steps.
inline void rotate_by_phase(cplx& phi, double theta) {
  double c, s;
  if (theta < 0.005 && theta > -0.005) {
    const double t2 = theta * theta;
    c = 1.0 - 0.5 * t2 * (1.0 - t2 / 12.0);
    s = theta * (1.0 - t2 / 6.0);
  } else {
    c = std::cos(theta);
    s = std::sin(theta);
  }
  phi = cplx(phi.real() * c - phi.imag() * s, phi.real() * s + phi.imag() * c);
}

}  // namespace detail

/// Multiplies the field spectrum by precomputed per-bin factors (one linear
/// half/full step). factors must have unit magnitude.
inline void apply_linear(TrajectoryField& field, const std::vector<cplx>& factors,
                         FftWorkspace& ws) {
  const int n = static_cast<int>(field.values.size());
  cplx* spec = ws.scratch_a();
  ws.to_spectrum(field.values.data(), spec);
  for (int k = 0; k < n; ++k) spec[k] *= factors[k];
  ws.to_time(spec, field.values.data());
}

/// One nonlinear sub-step of width dz:
///   phi -> phi * exp(i dz (K + G eta + Gamma)),  K = h * |phi|^2 (convolution),
/// then, if enabled, the self-steepening term -s d(|phi|^2 phi)/dtau as an
/// explicit spectral-derivative update. The phase block is exactly
/// norm-preserving; only the steepening term moves photons between bins.
/// h_spectrum: response in DFT bin order; empty means instantaneous (K=|phi|^2).
/// gamma: real Raman noise field for this step, or nullptr.
/// g_eta: acoustic phase rate G*eta for this step.
inline void nonlinear_step(TrajectoryField& field, double dz, const Grid& grid,
                           const std::vector<cplx>& h_spectrum, const double* gamma,
                           double g_eta, const StepConfig& cfg, FftWorkspace& ws,
                           std::uint32_t step_index = 0) {
  const int n = grid.n_points;
  double* rho = ws.scratch_real();
  double total = 0.0;
  double max_rho = 0.0;
  for (int j = 0; j < n; ++j) {
    const double r = std::norm(field.values[j]);
    rho[j] = r;
    total += r;
    if (r > max_rho) max_rho = r;
  }
  if (!std::isfinite(total))
    detail::integration_failure(step_index, field.z, std::sqrt(max_rho));

  const double s_coeff = cfg.self_steepening ? cfg.s : 0.0;
  if (s_coeff > 0.0) {
    // explicit advection-like term: keep the shift per step well under a bin
    const double cfl = s_coeff * max_rho * dz / grid.dt;
    if (cfl >= 0.1) {
      std::ostringstream msg;
      msg << "self-steepening step too large: s*max|phi|^2*dz/dt = " << cfl
          << " >= 0.1 (reduce dz)";
      throw std::runtime_error(msg.str());
    }
  }

  const double* kerr = rho;
  if (!cfg.kerr) {
    kerr = nullptr;
  } else if (!h_spectrum.empty()) {
    cplx* half = ws.scratch_half();
    ws.forward_r2c(rho, half);
    const double inv_n = 1.0 / n;
    for (int k = 0; k <= n / 2; ++k) half[k] *= std::conj(h_spectrum[k]) * inv_n;
    half[0] = cplx(half[0].real(), 0.0);
    half[n / 2] = cplx(half[n / 2].real(), 0.0);
    ws.backward_c2r(half, rho);  // rho now holds K; original |phi|^2 consumed
  }

  if (kerr && gamma) {
    for (int j = 0; j < n; ++j)
      detail::rotate_by_phase(field.values[j], dz * (kerr[j] + g_eta + gamma[j]));
  } else if (kerr) {
    if (g_eta != 0.0) {
      for (int j = 0; j < n; ++j)
        detail::rotate_by_phase(field.values[j], dz * (kerr[j] + g_eta));
    } else {
      for (int j = 0; j < n; ++j) detail::rotate_by_phase(field.values[j], dz * kerr[j]);
    }
  } else if (gamma) {
    for (int j = 0; j < n; ++j)
      detail::rotate_by_phase(field.values[j], dz * (g_eta + gamma[j]));
  } else if (g_eta != 0.0) {
    for (int j = 0; j < n; ++j) detail::rotate_by_phase(field.values[j], dz * g_eta);
  }

  if (s_coeff > 0.0) {
    cplx* w = ws.scratch_a();
    cplx* spec = ws.scratch_b();
    for (int j = 0; j < n; ++j) w[j] = std::norm(field.values[j]) * field.values[j];
    ws.to_spectrum(w, spec);
    for (int k = 0; k < n; ++k) spec[k] *= cplx(0.0, -grid.omega[k]);  // d/dtau -> -i Omega
    ws.to_time(spec, w);
    const double scale = s_coeff * dz;
    for (int j = 0; j < n; ++j) field.values[j] -= scale * w[j];
  }
}

/// Symmetric split step: exact linear half, nonlinear step, exact linear half.
inline void strang_step(TrajectoryField& field, double dz, const Grid& grid,
                        const std::vector<cplx>& h_spectrum, const double* gamma,
                        double g_eta, const StepConfig& cfg, FftWorkspace& ws,
                        std::uint32_t step_index = 0) {
  if (dz <= 0.0) throw std::invalid_argument("strang_step: dz must be positive");
  const auto half = linear_multiplier(grid, cfg.effective_b3(), 0.5 * dz);
  apply_linear(field, half, ws);
  nonlinear_step(field, dz, grid, h_spectrum, gamma, g_eta, cfg, ws, step_index);
  apply_linear(field, half, ws);
  field.z += dz;
}

// Reusable single-trajectory integrator: precomputes linear factor tables and
// the Raman noise amplitudes for the nominal dz, and fuses adjacent linear
// half steps between nonlinear steps. One instance per worker thread.
class Propagator {
 public:
  Propagator(const Grid& grid, const StepConfig& cfg, std::vector<cplx> h_spectrum,
             const RamanNoiseSpec& noise_spec, const GawbsModel& gawbs)
      : grid_(&grid),
        cfg_(cfg),
        h_spectrum_(std::move(h_spectrum)),
        gawbs_(gawbs),
        sampler_(grid, noise_spec, cfg.dz),
        lin_full_(linear_multiplier(grid, cfg.effective_b3(), cfg.dz)),
        lin_half_(linear_multiplier(grid, cfg.effective_b3(), 0.5 * cfg.dz)),
        noise_spec_(noise_spec),
        ws_(grid.n_points),
        gamma_(grid.n_points) {
    cfg_.validate();
    gawbs_.validate();
  }

  const Grid& grid() const { return *grid_; }
  const StepConfig& config() const { return cfg_; }
  FftWorkspace& workspace() { return ws_; }

  /// Integrates from field.z = 0 to length_z with the propagator's partition
  /// (full steps of dz, shortened final step). observer, when set, is called
  /// at z=0 and after every step.
  void run(TrajectoryField& field, double length_z, const NoiseKey& key,
           const SnapshotFn& observer = {}) {
    if (length_z < 0.0) throw std::invalid_argument("propagate: length must be >= 0");
    field.z = 0.0;
    if (observer) observer(field);
    if (length_z <= 0.0) return;

    double pending = 0.0;  // linear half step not yet applied
    double z = 0.0;
    std::uint32_t step = 0;
    while (z < length_z - 1e-12) {
      const double h = std::min(cfg_.dz, length_z - z);
      flush_linear(field, pending + 0.5 * h);
      const double* gamma = sample_gamma(h, key, step);
      const double g_eta = sample_eta(h, key, step);
      nonlinear_step(field, h, *grid_, h_spectrum_, gamma, g_eta, cfg_, ws_, step);
      pending = 0.5 * h;
      z += h;
      ++step;
      if (observer) {
        flush_linear(field, pending);
        pending = 0.0;
        field.z = z;
        observer(field);
      }
    }
    flush_linear(field, pending);
    field.z = length_z;
  }

  /// Integrates to z_stops.back(), invoking on_stop(index, field) at each stop.
  /// Stops must be ascending; each stop ends a (possibly shortened) step. The
  /// first stop is bit-identical to a run() of that length; later stops agree
  /// with dedicated runs up to the step-width rounding introduced at earlier
  /// stops. Adjacent linear half steps stay fused between stops.
  void run_with_stops(TrajectoryField& field, const std::vector<double>& z_stops,
                      const NoiseKey& key,
                      const std::function<void(std::size_t, const TrajectoryField&)>& on_stop) {
    if (z_stops.empty()) throw std::invalid_argument("run_with_stops: no stops given");
    for (std::size_t i = 1; i < z_stops.size(); ++i)
      if (z_stops[i] < z_stops[i - 1])
        throw std::invalid_argument("run_with_stops: z_stops must be ascending");
    const double length_z = z_stops.back();
    field.z = 0.0;
    double pending = 0.0;
    double z = 0.0;
    std::uint32_t step = 0;
    std::size_t next = 0;
    while (true) {
      while (next < z_stops.size() && z >= z_stops[next] - 1e-12) {
        flush_linear(field, pending);
        pending = 0.0;
        field.z = std::max(z_stops[next], 0.0);
        on_stop(next, field);
        ++next;
      }
      if (z >= length_z - 1e-12) break;
      const double h = std::min(cfg_.dz, z_stops[next] - z);
      flush_linear(field, pending + 0.5 * h);
      const double* gamma = sample_gamma(h, key, step);
      const double g_eta = sample_eta(h, key, step);
      nonlinear_step(field, h, *grid_, h_spectrum_, gamma, g_eta, cfg_, ws_, step);
      pending = 0.5 * h;
      z += h;
      ++step;
    }
    flush_linear(field, pending);
    field.z = length_z;
  }

 private:
  void flush_linear(TrajectoryField& field, double width) {
    if (width <= 0.0) return;
    if (width == cfg_.dz) {
      apply_linear(field, lin_full_, ws_);
    } else if (width == 0.5 * cfg_.dz) {
      apply_linear(field, lin_half_, ws_);
    } else {
      apply_linear(field, linear_multiplier(*grid_, cfg_.effective_b3(), width), ws_);
    }
  }

  const double* sample_gamma(double h, const NoiseKey& key, std::uint32_t step) {
    if (!cfg_.raman_noise || !sampler_.active()) return nullptr;
    if (h == cfg_.dz) {
      sampler_.sample(key, step, ws_, gamma_.data());
    } else {
      RamanNoiseSampler partial(*grid_, noise_spec_, h);
      partial.sample(key, step, ws_, gamma_.data());
    }
    return gamma_.data();
  }

  double sample_eta(double h, const NoiseKey& key, std::uint32_t step) {
    if (!cfg_.gawbs || gawbs_.magnitude == 0.0) return 0.0;
    return gawbs_.magnitude * sample_gawbs(gawbs_, h, key, step);
  }

  const Grid* grid_;
  StepConfig cfg_;
  std::vector<cplx> h_spectrum_;
  GawbsModel gawbs_;
  RamanNoiseSampler sampler_;
  std::vector<cplx> lin_full_, lin_half_;
  RamanNoiseSpec noise_spec_;
  FftWorkspace ws_;
  std::vector<double> gamma_;
};

/// One-shot contract form of the integrator (tests, small runs).
inline void propagate(TrajectoryField& field, double length_z, const Grid& grid,
                      const StepConfig& cfg, const std::vector<cplx>& h_spectrum,
                      const RamanNoiseSpec& noise_spec, const GawbsModel& gawbs,
                      const NoiseKey& key, const SnapshotFn& observer = {}) {
  Propagator prop(grid, cfg, h_spectrum, noise_spec, gawbs);
  prop.run(field, length_z, key, observer);
}

}  // namespace pcfsq
