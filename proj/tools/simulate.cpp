// Command-line driver: loads a config (or an emitted manifest), runs the
// selected experiment, and writes CSV + .dat/.gp + manifest artifacts.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcfsq/config.hpp"
#include "pcfsq/output.hpp"

namespace {

using namespace pcfsq;

int finalize(const std::vector<RunRecord>& records, const RunConfig& cfg,
             const std::string& xlabel, int xcol) {
  const StudyOutputs out =
      write_study(cfg.out_dir, cfg.label, records, cfg.resolved, xlabel, xcol);
  bool any_failed = false;
  for (const auto& r : records) {
    if (!r.failed) continue;
    any_failed = true;
    std::cerr << "trajectory failure at E = " << r.energy_pj << " pJ, L = " << r.length_m
              << " m: " << r.error << "\n";
  }
  std::cout << "wrote " << out.csv_path << " (" << records.size() << " rows)\n";
  return any_failed ? 1 : 0;
}

void print_point(const RunRecord& r) {
  if (r.failed) {
    std::cout << "E = " << r.energy_pj << " pJ, L = " << r.length_m << " m: FAILED ("
              << r.error << ")\n";
    return;
  }
  std::cout << "E = " << r.energy_pj << " pJ, L = " << r.length_m
            << " m: M_min = " << r.result.m_min_db << " dB +- " << r.result.sem_db
            << ", M_max = " << r.result.m_max_db << " dB, theta_min = " << r.result.theta_min
            << (r.result.degenerate ? "  [degenerate ensemble]" : "") << "\n";
}

RunToggles config_toggles(const RunConfig& cfg) { return cfg.toggles; }

/// Energy sweep honouring the per-point empirical shot calibration if asked.
std::vector<RunRecord> run_sweep(const ExperimentContext& ctx, const RunConfig& cfg,
                                 const std::vector<double>& energies, double length_m,
                                 const RunToggles& t) {
  if (!cfg.empirical_shot) return sweep_energy(ctx, energies, length_m, t, &std::cerr);
  const double lz = length_m / ctx.scales.z0_m;
  std::vector<RunRecord> records;
  records.reserve(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    ExperimentContext c = ctx;
    c.shot_norm = empirical_shot_norm(c, energies[i]);
    const EnsemblePoint p = propagate_point(c, energies[i], {lz}, t);
    records.push_back(make_record(c, p, 0, length_m, t));
    const auto& r = records.back();
    std::cerr << "[" << (i + 1) << "/" << energies.size() << "] E = " << r.energy_pj << " pJ: ";
    if (r.failed)
      std::cerr << "FAILED (" << r.error << ")";
    else
      std::cerr << "M_min = " << r.result.m_min_db << " dB +- " << r.result.sem_db;
    std::cerr << "  [" << r.wall_s << " s]" << std::endl;
  }
  return records;
}

/// Field snapshots of one representative trajectory (arm A, trajectory 0).
void write_snapshot_trajectory(const ExperimentContext& ctx, const RunConfig& cfg,
                               const RunToggles& t) {
  const EnsembleSpec es = make_ensemble_spec(ctx, cfg.pulse.total_energy_pj, t);
  StepConfig sc = es.step;
  sc.gawbs = false;
  Propagator prop(*es.grid, sc, es.h_spectrum, es.noise_spec, es.gawbs);
  TrajectoryField field;
  field.values.resize(es.grid->n_points);
  const NoiseKey key{es.seed, 0, 0};
  init_vacuum(*es.grid, es.nbar, key, prop.workspace(), field.values.data());
  const std::vector<cplx> pulse = make_pulse(*es.grid, es.amplitude, es.shape);
  for (int j = 0; j < es.grid->n_points; ++j) field.values[j] += pulse[j];

  const std::string path = cfg.out_dir + "/" + cfg.snapshot_file;
  SnapshotWriter writer(path, static_cast<std::uint32_t>(es.grid->n_points));
  long count = 0;
  const long stride = cfg.snapshot_stride;
  prop.run(field, cfg.sweep_length_m / ctx.scales.z0_m, key,
           [&](const TrajectoryField& f) {
             if (count++ % stride == 0) writer.write(f);
           });
  std::cerr << "snapshots -> " << path << "\n";
}

int run_experiment(const RunConfig& cfg) {
  ExperimentContext ctx = make_context(cfg);
  const RunToggles t = config_toggles(cfg);
  const double energy = cfg.pulse.total_energy_pj;

  if (cfg.raman.kind != RamanKind::instantaneous) {
    // optional inspection dumps of the response and its noise density
    if (cfg.dump_stokes) {
      write_text_atomic(cfg.out_dir + "/" + cfg.label + "_response.dat",
                        response_dat(ctx.grid, response_spectrum(ctx.grid, ctx.raman)));
      write_text_atomic(cfg.out_dir + "/" + cfg.label + "_noise.dat",
                        noise_spec_dat(ctx.grid, raman_noise_spec(ctx.grid, ctx.raman, ctx.scales)));
    }
  }

  switch (cfg.experiment) {
    case Experiment::shot_noise: {
      // coherent-state calibration: Kerr off, technical noise off
      ctx.kerr = false;
      RunToggles lin = t;
      lin.raman_noise = false;
      if (cfg.empirical_shot) ctx.shot_norm = empirical_shot_norm(ctx, energy);
      const double lz = cfg.sweep_length_m / ctx.scales.z0_m;
      const EnsemblePoint p = propagate_point(ctx, energy, {lz}, lin);
      const RunRecord r = make_record(ctx, p, 0, cfg.sweep_length_m, lin);
      print_point(r);
      return finalize({r}, cfg, "energy [pJ]", 1);
    }

    case Experiment::single: {
      if (cfg.empirical_shot) ctx.shot_norm = empirical_shot_norm(ctx, energy);
      const double lz = cfg.sweep_length_m / ctx.scales.z0_m;
      const EnsemblePoint p = propagate_point(ctx, energy, {lz}, t);
      const RunRecord r = make_record(ctx, p, 0, cfg.sweep_length_m, t);
      print_point(r);
      if (cfg.dump_stokes && !p.failed)
        write_text_atomic(cfg.out_dir + "/" + cfg.label + "_stokes.dat",
                          stokes_dat(p.data.stokes.back()));
      if (!cfg.snapshot_file.empty()) write_snapshot_trajectory(ctx, cfg, t);
      return finalize({r}, cfg, "energy [pJ]", 1);
    }

    case Experiment::sweep: {
      const auto records = run_sweep(ctx, cfg, cfg.energies_pj, cfg.sweep_length_m, t);
      std::size_t best = 0;
      for (std::size_t i = 1; i < records.size(); ++i)
        if (!records[i].failed && records[i].result.m_min_db < records[best].result.m_min_db)
          best = i;
      if (!records[best].failed) {
        std::cout << "best: ";
        print_point(records[best]);
      }
      return finalize(records, cfg, "energy [pJ]", 1);
    }

    case Experiment::length: {
      if (cfg.empirical_shot) ctx.shot_norm = empirical_shot_norm(ctx, energy);
      const LengthStudy study =
          optimize_length(ctx, energy, default_length_grid(cfg.lmax_m), t, &std::cerr);
      if (!study.failed) {
        std::cout << "best: ";
        print_point(study.records[study.best_index]);
        std::cout << "within 5% of best: " << study.band_lo_m << " .. " << study.band_hi_m
                  << " m" << (study.non_interior ? "  [optimum at scan end]" : "") << "\n";
      }
      return finalize(study.records, cfg, "length [m]", 2);
    }

    case Experiment::b3_study: {
      const B3Study study =
          study_b3(ctx, cfg.b3_values, cfg.energies_pj, cfg.sweep_length_m, t, &std::cerr);
      std::vector<RunRecord> flat;
      for (const auto& col : study.records) flat.insert(flat.end(), col.begin(), col.end());
      for (std::size_t i = 0; i < study.b3_values.size(); ++i)
        std::cout << "B3 = " << study.b3_values[i]
                  << ": max |delta| vs B3=0 = " << study.max_abs_delta_db[i] << " dB\n";
      return finalize(flat, cfg, "energy [pJ]", 1);
    }

    case Experiment::steepening_study: {
      const SteepeningStudy study =
          study_self_steepening(ctx, cfg.energies_pj, cfg.sweep_length_m, t, -1.0, &std::cerr);
      std::vector<RunRecord> flat = study.base;
      flat.insert(flat.end(), study.with_s.begin(), study.with_s.end());
      std::cout << "max |delta| = " << study.max_abs_delta_db << " dB at E = "
                << study.max_delta_energy_pj << " pJ\n";
      return finalize(flat, cfg, "energy [pJ]", 1);
    }

    case Experiment::convergence: {
      const ConvergenceReport rep =
          convergence_check(ctx, energy, cfg.sweep_length_m, t, &std::cerr);
      std::cout << "dz/2 delta = " << rep.delta_half_db << " dB ("
                << (rep.pass_half ? "pass" : "FAIL") << "), 2n delta = " << rep.delta_grid_db
                << " dB (" << (rep.pass_grid ? "pass" : "FAIL") << ")\n";
      const std::vector<RunRecord> records = {rep.base, rep.half_dz, rep.double_n};
      const int rc = finalize(records, cfg, "energy [pJ]", 1);
      return rc != 0 ? rc : (rep.pass() ? 0 : 1);
    }
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory-ensemble simulator of fibre polarisation squeezing"};
  std::string config_path, preset, out_dir;
  std::uint64_t seed = 0;
  int paths = 0, workers = 0;
  bool validate_only = false;

  app.add_option("config", config_path, "config file (key = value) or run manifest (.json)")
      ->required();
  auto* opt_preset = app.add_option("--preset", preset, "named parameter preset");
  auto* opt_seed = app.add_option("--seed", seed, "random seed");
  auto* opt_paths = app.add_option("--paths", paths, "trajectory count");
  auto* opt_workers = app.add_option("--workers", workers, "worker thread count");
  auto* opt_out = app.add_option("--out", out_dir, "output directory");
  app.add_flag("--validate-only", validate_only, "parse, print resolved config, no compute");

  CLI11_PARSE(app, argc, argv);

  std::map<std::string, std::string> overrides;
  if (opt_preset->count()) overrides["run.preset"] = preset;
  if (opt_seed->count()) overrides["run.seed"] = std::to_string(seed);
  if (opt_paths->count()) overrides["run.paths"] = std::to_string(paths);
  if (opt_workers->count()) overrides["run.workers"] = std::to_string(workers);
  if (opt_out->count()) overrides["run.out_dir"] = out_dir;

  try {
    const char* env_out = std::getenv("PCFSQ_OUT_DIR");
    const RunConfig cfg = load_config(config_path, overrides, env_out ? env_out : "");
    if (validate_only) {
      print_resolved(cfg, std::cout);
      return 0;
    }
    std::filesystem::create_directories(cfg.out_dir);
    return run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
