#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcfsq/ensemble.hpp"
#include "pcfsq/params.hpp"
#include "pcfsq/response.hpp"

namespace pcfsq {

// Which effects a run includes. loss/overlap/gawbs act at the measurement
// stage; the rest alter the propagation itself.
struct RunToggles {
  bool loss = false;
  bool overlap = false;
  bool gawbs = false;
  bool raman_noise = true;
  bool third_order = false;
  bool self_steepening = false;
};

struct ExperimentContext {
  Grid grid;
  FibreParams fibre;
  PulseParams pulse;
  Scales scales;
  RamanModel raman;
  GawbsModel gawbs;
  double dz = 1e-3;
  std::uint64_t seed = 1;
  int paths = 1000;
  int workers = 1;
  double shot_norm = 0.0;  // >0: empirical shot denominator
  bool kerr = true;        // off only for shot-noise calibration runs
};

struct RunRecord {
  double energy_pj = 0.0;
  double length_m = 0.0;
  RunToggles toggles;
  double b3 = 0.0;  // effective values entering the run
  double s = 0.0;
  int paths = 0;
  SqueezingResult result;
  double wall_s = 0.0;
  bool failed = false;
  std::string error;
};

inline StepConfig make_step(const ExperimentContext& ctx, const RunToggles& t) {
  StepConfig sc;
  sc.dz = ctx.dz;
  sc.kerr = ctx.kerr;
  sc.raman_noise = t.raman_noise;
  sc.gawbs = false;  // acoustic phase enters at measurement (commutes exactly)
  sc.third_order = t.third_order;
  sc.b3 = ctx.scales.b3;
  sc.self_steepening = t.self_steepening;
  sc.s = ctx.scales.s;
  return sc;
}

inline EnsembleSpec make_ensemble_spec(const ExperimentContext& ctx, double energy_pj,
                                       const RunToggles& t) {
  EnsembleSpec es;
  es.grid = &ctx.grid;
  es.step = make_step(ctx, t);
  if (ctx.raman.kind != RamanKind::instantaneous && ctx.raman.fraction > 0.0 && ctx.kerr)
    es.h_spectrum = response_spectrum(ctx.grid, ctx.raman);
  if (t.raman_noise && ctx.kerr)
    es.noise_spec = raman_noise_spec(ctx.grid, ctx.raman, ctx.scales);
  else
    es.noise_spec.spectral_density.assign(ctx.grid.n_points, 0.0);
  es.gawbs = ctx.gawbs;
  es.nbar = ctx.scales.nbar;
  es.amplitude = arm_amplitude(energy_pj, ctx.scales);
  es.shape = ctx.pulse.shape;
  es.seed = ctx.seed;
  es.paths = ctx.paths;
  es.workers = ctx.workers;
  return es;
}

inline MeasureOptions make_measure_options(const ExperimentContext& ctx, const RunToggles& t,
                                           int use_paths = 0) {
  MeasureOptions o;
  o.gawbs = t.gawbs;
  o.loss_eps = t.loss ? ctx.fibre.loss_fraction : 0.0;
  o.visibility = t.overlap ? ctx.fibre.spectral_overlap : 1.0;
  o.shot_norm = ctx.shot_norm;
  o.use_paths = use_paths;
  return o;
}

// One heavy propagation pass (all trajectories, all z stops) for one energy.
struct EnsemblePoint {
  double energy_pj = 0.0;
  double wall_s = 0.0;
  bool failed = false;
  std::string error;
  EnsembleResult data;
};

inline EnsemblePoint propagate_point(const ExperimentContext& ctx, double energy_pj,
                                     const std::vector<double>& z_stops,
                                     const RunToggles& t) {
  EnsemblePoint p;
  p.energy_pj = energy_pj;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (energy_pj < 0.0) throw std::invalid_argument("energy must be >= 0");
    p.data = run_ensemble(make_ensemble_spec(ctx, energy_pj, t), z_stops);
  } catch (const std::exception& e) {
    p.failed = true;
    p.error = e.what();
  }
  p.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return p;
}

inline RunRecord make_record(const ExperimentContext& ctx, const EnsemblePoint& p,
                             std::size_t stop, double length_m, const RunToggles& t,
                             int use_paths = 0) {
  RunRecord r;
  r.energy_pj = p.energy_pj;
  r.length_m = length_m;
  r.toggles = t;
  r.b3 = t.third_order ? ctx.scales.b3 : 0.0;
  r.s = t.self_steepening ? ctx.scales.s : 0.0;
  r.paths = use_paths > 0 ? use_paths : ctx.paths;
  r.wall_s = p.wall_s;
  if (p.failed) {
    r.failed = true;
    r.error = p.error;
    return r;
  }
  r.result =
      measure(p.data.stokes[stop], p.data.gawbs_delta[stop], make_measure_options(ctx, t, use_paths));
  return r;
}

inline std::vector<double> default_energy_grid() {
  std::vector<double> es;
  for (int i = 0; i < 20; ++i) es.push_back(3.0 + i * (35.0 - 3.0) / 19.0);
  return es;
}

/// 60 lengths, denser below 10 m where the squeezing optimum lives.
inline std::vector<double> default_length_grid(double lmax_m) {
  if (!(lmax_m > 0.0)) throw std::invalid_argument("lmax must be > 0");
  std::vector<double> ls;
  const double dense_max = std::min(10.0, lmax_m);
  const int n_dense = lmax_m > 10.0 ? 40 : 60;
  for (int i = 1; i <= n_dense; ++i) ls.push_back(dense_max * i / n_dense);
  if (lmax_m > dense_max)
    for (int i = 1; i <= 20; ++i) ls.push_back(dense_max + (lmax_m - dense_max) * i / 20.0);
  return ls;
}

inline std::vector<RunRecord> sweep_energy(const ExperimentContext& ctx,
                                           const std::vector<double>& energies,
                                           double length_m, const RunToggles& t,
                                           std::ostream* progress = nullptr) {
  if (energies.empty()) throw std::invalid_argument("sweep: no energies");
  const double lz = length_m / ctx.scales.z0_m;
  if (!(lz > 0.0)) throw std::invalid_argument("sweep: length must be > 0");
  std::vector<RunRecord> records;
  records.reserve(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const EnsemblePoint p = propagate_point(ctx, energies[i], {lz}, t);
    records.push_back(make_record(ctx, p, 0, length_m, t));
    if (progress) {
      const auto& r = records.back();
      *progress << "[" << (i + 1) << "/" << energies.size() << "] E = " << r.energy_pj
                << " pJ: ";
      if (r.failed)
        *progress << "FAILED (" << r.error << ")";
      else
        *progress << "M_min = " << r.result.m_min_db << " dB +- " << r.result.sem_db;
      *progress << "  [" << r.wall_s << " s]" << std::endl;
    }
  }
  return records;
}

struct LengthStudy {
  std::vector<RunRecord> records;  // one per length, ascending
  std::size_t best_index = 0;
  double band_lo_m = 0.0;  // lengths whose M_min is within 5% (linear) of best
  double band_hi_m = 0.0;
  bool non_interior = false;  // optimum sits at the scan end
  bool failed = false;
};

inline LengthStudy optimize_length(const ExperimentContext& ctx, double energy_pj,
                                   const std::vector<double>& lengths_m, const RunToggles& t,
                                   std::ostream* progress = nullptr) {
  if (lengths_m.empty()) throw std::invalid_argument("length scan: no lengths");
  // snap requested lengths onto the step partition so snapshots land exactly
  // on step boundaries; report the snapped lengths
  std::vector<double> z_stops;
  for (double lm : lengths_m) {
    double z = std::round(lm / ctx.scales.z0_m / ctx.dz) * ctx.dz;
    if (z < ctx.dz) z = ctx.dz;
    if (z_stops.empty() || z > z_stops.back() + 1e-12) z_stops.push_back(z);
  }

  LengthStudy study;
  const EnsemblePoint p = propagate_point(ctx, energy_pj, z_stops, t);
  study.records.reserve(z_stops.size());
  for (std::size_t st = 0; st < z_stops.size(); ++st)
    study.records.push_back(make_record(ctx, p, st, z_stops[st] * ctx.scales.z0_m, t));
  if (p.failed) {
    study.failed = true;
    return study;
  }
  if (progress)
    *progress << "length scan at E = " << energy_pj << " pJ: " << z_stops.size()
              << " stops in " << p.wall_s << " s" << std::endl;

  std::size_t best = 0;
  for (std::size_t i = 1; i < study.records.size(); ++i)
    if (study.records[i].result.m_min < study.records[best].result.m_min) best = i;
  study.best_index = best;
  study.non_interior = best + 1 == study.records.size();

  const double cut = study.records[best].result.m_min * 1.05;
  std::size_t lo = best, hi = best;
  while (lo > 0 && study.records[lo - 1].result.m_min <= cut) --lo;
  while (hi + 1 < study.records.size() && study.records[hi + 1].result.m_min <= cut) ++hi;
  study.band_lo_m = study.records[lo].length_m;
  study.band_hi_m = study.records[hi].length_m;
  return study;
}

struct B3Study {
  std::vector<double> b3_values;
  std::vector<std::vector<RunRecord>> records;  // [b3 value][energy]
  std::vector<double> max_abs_delta_db;         // vs the B3 = 0 column
};

inline B3Study study_b3(const ExperimentContext& ctx, const std::vector<double>& b3_values,
                        const std::vector<double>& energies, double length_m,
                        const RunToggles& base, std::ostream* progress = nullptr) {
  if (b3_values.empty()) throw std::invalid_argument("b3 study: no values");
  for (double v : b3_values)
    if (v < 0.0) throw std::invalid_argument("b3 study: values must be >= 0");
  B3Study study;
  study.b3_values = b3_values;
  RunToggles t = base;
  t.third_order = true;
  for (double b3 : b3_values) {
    ExperimentContext c = ctx;
    c.scales.b3 = b3;
    if (progress) *progress << "B3 = " << b3 << ":" << std::endl;
    study.records.push_back(sweep_energy(c, energies, length_m, t, progress));
  }
  std::size_t base_col = 0;
  for (std::size_t i = 0; i < b3_values.size(); ++i)
    if (b3_values[i] == 0.0) base_col = i;
  study.max_abs_delta_db.assign(b3_values.size(), 0.0);
  for (std::size_t i = 0; i < b3_values.size(); ++i) {
    double worst = 0.0;
    for (std::size_t e = 0; e < energies.size(); ++e) {
      const auto& a = study.records[i][e];
      const auto& b = study.records[base_col][e];
      if (a.failed || b.failed) continue;
      worst = std::max(worst, std::abs(a.result.m_min_db - b.result.m_min_db));
    }
    study.max_abs_delta_db[i] = worst;
  }
  return study;
}

struct SteepeningStudy {
  std::vector<RunRecord> base;    // s = 0
  std::vector<RunRecord> with_s;  // s = 1/(omega0 t0), same seed (paired draws)
  double max_abs_delta_db = 0.0;
  double max_delta_energy_pj = 0.0;
};

inline SteepeningStudy study_self_steepening(const ExperimentContext& ctx,
                                             const std::vector<double>& energies,
                                             double length_m, const RunToggles& base,
                                             double s_override = -1.0,
                                             std::ostream* progress = nullptr) {
  ExperimentContext c = ctx;
  if (s_override >= 0.0) c.scales.s = s_override;
  RunToggles t_off = base;
  t_off.self_steepening = false;
  RunToggles t_on = base;
  t_on.self_steepening = true;
  SteepeningStudy study;
  if (progress) *progress << "s = 0:" << std::endl;
  study.base = sweep_energy(c, energies, length_m, t_off, progress);
  if (progress) *progress << "s = " << c.scales.s << ":" << std::endl;
  study.with_s = sweep_energy(c, energies, length_m, t_on, progress);
  for (std::size_t e = 0; e < energies.size(); ++e) {
    const auto& a = study.base[e];
    const auto& b = study.with_s[e];
    if (a.failed || b.failed) continue;
    const double d = std::abs(a.result.m_min_db - b.result.m_min_db);
    if (d > study.max_abs_delta_db) {
      study.max_abs_delta_db = d;
      study.max_delta_energy_pj = a.energy_pj;
    }
  }
  return study;
}

struct ConvergenceReport {
  RunRecord base;
  RunRecord half_dz;
  RunRecord double_n;
  double delta_half_db = 0.0;
  double delta_grid_db = 0.0;
  bool pass_half = false;
  bool pass_grid = false;
  bool pass() const { return pass_half && pass_grid; }
};

/// Re-runs one point with dz/2 and with 2x grid points; converged iff both
/// squeezing deltas stay below the baseline sampling error.
inline ConvergenceReport convergence_check(const ExperimentContext& ctx, double energy_pj,
                                           double length_m, const RunToggles& t,
                                           std::ostream* progress = nullptr) {
  ConvergenceReport rep;
  const auto run_one = [&](const ExperimentContext& c, const char* tag) {
    const double lz = length_m / c.scales.z0_m;
    const EnsemblePoint p = propagate_point(c, energy_pj, {lz}, t);
    RunRecord r = make_record(c, p, 0, length_m, t);
    if (progress) {
      *progress << tag << ": ";
      if (r.failed)
        *progress << "FAILED (" << r.error << ")";
      else
        *progress << "M_min = " << r.result.m_min_db << " dB +- " << r.result.sem_db;
      *progress << "  [" << r.wall_s << " s]" << std::endl;
    }
    return r;
  };

  rep.base = run_one(ctx, "baseline");
  ExperimentContext half = ctx;
  half.dz = 0.5 * ctx.dz;
  rep.half_dz = run_one(half, "dz/2");
  ExperimentContext fine = ctx;
  fine.grid = make_grid(2 * ctx.grid.n_points, ctx.grid.t_window);
  rep.double_n = run_one(fine, "2n");

  if (!rep.base.failed && !rep.half_dz.failed) {
    rep.delta_half_db = std::abs(rep.base.result.m_min_db - rep.half_dz.result.m_min_db);
    rep.pass_half = rep.delta_half_db < rep.base.result.sem_db;
  }
  if (!rep.base.failed && !rep.double_n.failed) {
    rep.delta_grid_db = std::abs(rep.base.result.m_min_db - rep.double_n.result.m_min_db);
    rep.pass_grid = rep.delta_grid_db < rep.base.result.sem_db;
  }
  return rep;
}

/// Empirical shot-noise calibration: gamma-off linear run, returns the mean
/// dark-plane variance to use as denominator override.
inline double empirical_shot_norm(const ExperimentContext& ctx, double energy_pj) {
  ExperimentContext c = ctx;
  c.kerr = false;
  c.seed = ctx.seed ^ 0x9E3779B97F4A7C15ull;  // separate stream from the main run
  RunToggles t;
  t.raman_noise = false;
  const EnsemblePoint p = propagate_point(c, energy_pj, {c.dz}, t);
  if (p.failed) throw std::runtime_error("shot calibration failed: " + p.error);
  const StokesMoments m = p.data.stokes[0].moments();
  return 0.5 * (m.c11 + m.c22);
}

}  // namespace pcfsq
