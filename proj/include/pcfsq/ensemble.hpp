#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pcfsq/measurement.hpp"
#include "pcfsq/params.hpp"
#include "pcfsq/propagator.hpp"
#include "pcfsq/stochastic.hpp"

namespace pcfsq {

inline std::vector<cplx> make_pulse(const Grid& grid, double amplitude, PulseShape shape) {
  std::vector<cplx> f(grid.n_points);
  for (int j = 0; j < grid.n_points; ++j) {
    const double tau = grid.tau[j];
    f[j] = shape == PulseShape::Sech ? amplitude / std::cosh(tau)
                                     : amplitude * std::exp(-0.5 * tau * tau);
  }
  return f;
}

struct EnsembleSpec {
  const Grid* grid = nullptr;
  StepConfig step;
  std::vector<cplx> h_spectrum;  // empty = instantaneous response
  RamanNoiseSpec noise_spec;
  GawbsModel gawbs;
  double nbar = 0.0;
  double amplitude = 0.0;  // per-arm input amplitude
  PulseShape shape = PulseShape::Sech;
  std::uint64_t seed = 0;
  int paths = 0;
  int workers = 1;
};

// Pure (pre-detection) Stokes samples at every requested z, plus the
// per-trajectory acoustic phase differences between the arms. GAWBS, loss and
// overlap are all applied afterwards by measure(), so one propagation sweep
// serves every detection variant.
struct EnsembleResult {
  std::vector<double> z_stops;
  std::vector<StokesEnsemble> stokes;            // [stop], indexed by trajectory
  std::vector<std::vector<double>> gawbs_delta;  // [stop][trajectory]
};

inline EnsembleResult run_ensemble(const EnsembleSpec& spec,
                                   const std::vector<double>& z_stops) {
  if (!spec.grid) throw std::invalid_argument("run_ensemble: no grid");
  if (spec.paths < 2) throw std::invalid_argument("run_ensemble: need at least 2 paths");
  if (spec.nbar <= 0.0) throw std::invalid_argument("run_ensemble: nbar must be positive");
  if (z_stops.empty()) throw std::invalid_argument("run_ensemble: no z stops");
  for (std::size_t i = 0; i + 1 < z_stops.size(); ++i)
    if (!(z_stops[i] < z_stops[i + 1]))
      throw std::invalid_argument("run_ensemble: z stops must ascend");
  if (!(z_stops.back() > 0.0)) throw std::invalid_argument("run_ensemble: length must be > 0");

  const Grid& grid = *spec.grid;
  const int n = grid.n_points;
  const std::size_t nstops = z_stops.size();
  const int paths = spec.paths;

  EnsembleResult res;
  res.z_stops = z_stops;
  res.stokes.assign(nstops, StokesEnsemble(static_cast<std::size_t>(paths)));
  res.gawbs_delta.assign(nstops, std::vector<double>(paths, 0.0));

  std::atomic<int> cursor{0};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto worker = [&]() {
    // The acoustic phase is a global rotation that commutes with Eq.-of-motion
    // stepping, so it is never applied to the field here; measure() rotates
    // the stored Stokes samples by the per-trajectory phase difference.
    StepConfig cfg = spec.step;
    cfg.gawbs = false;
    Propagator prop(grid, cfg, spec.h_spectrum, spec.noise_spec, spec.gawbs);
    FftWorkspace& ws = prop.workspace();
    const std::vector<cplx> pulse = make_pulse(grid, spec.amplitude, spec.shape);
    std::vector<TrajectoryField> arm_a_stops(nstops);
    TrajectoryField arm;
    arm.values.resize(n);

    while (true) {
      const int i = cursor.fetch_add(1);
      if (i >= paths) break;
      try {
        const NoiseKey key_a{spec.seed, static_cast<std::uint32_t>(i), 0};
        const NoiseKey key_b{spec.seed, static_cast<std::uint32_t>(i), 1};

        init_vacuum(grid, spec.nbar, key_a, ws, arm.values.data());
        for (int j = 0; j < n; ++j) arm.values[j] += pulse[j];
        prop.run_with_stops(arm, z_stops, key_a,
                            [&](std::size_t st, const TrajectoryField& f) {
                              arm_a_stops[st] = f;
                            });

        init_vacuum(grid, spec.nbar, key_b, ws, arm.values.data());
        for (int j = 0; j < n; ++j) arm.values[j] += pulse[j];
        prop.run_with_stops(arm, z_stops, key_b,
                            [&](std::size_t st, const TrajectoryField& f) {
                              const auto [px, py] = combine_sagnac(arm_a_stops[st], f);
                              res.stokes[st][i] = stokes_sample(px, py, spec.nbar, grid);
                            });

        if (spec.gawbs.magnitude > 0.0) {
          const auto tha = accumulated_gawbs_phases(spec.gawbs, z_stops, cfg.dz, key_a);
          const auto thb = accumulated_gawbs_phases(spec.gawbs, z_stops, cfg.dz, key_b);
          for (std::size_t st = 0; st < nstops; ++st)
            res.gawbs_delta[st][i] = thb[st] - tha[st];
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        break;
      }
    }
  };

  const int nthreads = std::max(1, std::min(spec.workers, paths));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return res;
}

struct MeasureOptions {
  bool gawbs = false;
  double loss_eps = 0.0;
  double visibility = 1.0;
  double shot_norm = 0.0;  // >0: empirical shot-noise denominator
  int use_paths = 0;       // >0: evaluate only the first use_paths trajectories
};

/// Detection-stage evaluation of stored pure samples: optional acoustic-phase
/// rotation per trajectory, dark-plane extrema, then lumped loss and overlap.
inline SqueezingResult measure(const StokesEnsemble& pure,
                               const std::vector<double>& gawbs_delta,
                               const MeasureOptions& opt) {
  std::size_t count = pure.size();
  if (opt.use_paths > 0 && static_cast<std::size_t>(opt.use_paths) < count)
    count = static_cast<std::size_t>(opt.use_paths);
  if (opt.gawbs && gawbs_delta.size() < count)
    throw std::invalid_argument("measure: missing acoustic phases");

  const StokesEnsemble* src = &pure;
  StokesEnsemble rotated;
  if (opt.gawbs || count != pure.size()) {
    rotated.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      rotated.add(opt.gawbs ? rotate_s2_s3(pure[i], gawbs_delta[i]) : pure[i]);
    src = &rotated;
  }
  const SqueezingResult raw = dark_plane_extrema(*src, opt.shot_norm);
  return apply_detection(raw, opt.loss_eps, opt.visibility);
}

}  // namespace pcfsq
