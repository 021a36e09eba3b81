#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "pcfsq/ensemble.hpp"

using namespace pcfsq;

namespace {

bool same_samples(const StokesEnsemble& a, const StokesEnsemble& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].s0 != b[i].s0 || a[i].s1 != b[i].s1 || a[i].s2 != b[i].s2 || a[i].s3 != b[i].s3)
      return false;
  }
  return true;
}

EnsembleSpec small_spec(const Grid& grid) {
  EnsembleSpec spec;
  spec.grid = &grid;
  spec.step.dz = 0.05;
  spec.nbar = 1.0e4;
  spec.amplitude = 2.0;
  spec.seed = 20240101;
  spec.paths = 64;
  spec.gawbs.magnitude = 3.2e-4;
  return spec;
}

}  // namespace

TEST_CASE("pulse shapes evaluate on the grid", "[ensemble]") {
  const Grid grid = make_grid(128, 8.0);
  const auto sech = make_pulse(grid, 2.0, PulseShape::Sech);
  const auto gauss = make_pulse(grid, 2.0, PulseShape::Gaussian);
  const int mid = grid.n_points / 2;  // tau = 0 sits at the centre bin
  REQUIRE(grid.tau[mid] == 0.0);
  CHECK(std::abs(sech[mid] - cplx(2.0, 0.0)) < 1e-15);
  CHECK(std::abs(gauss[mid] - cplx(2.0, 0.0)) < 1e-15);
  CHECK(std::abs(sech[mid + 16] - cplx(2.0 / std::cosh(grid.tau[mid + 16]), 0.0)) < 1e-15);
  CHECK(std::abs(gauss[mid + 16] -
                 cplx(2.0 * std::exp(-0.5 * grid.tau[mid + 16] * grid.tau[mid + 16]), 0.0)) <
        1e-15);
}

TEST_CASE("worker count never changes the samples", "[ensemble]") {
  const Grid grid = make_grid(128, 8.0);
  EnsembleSpec spec = small_spec(grid);
  const std::vector<double> stops = {0.2, 0.4};

  spec.workers = 1;
  const EnsembleResult serial = run_ensemble(spec, stops);
  spec.workers = 4;
  const EnsembleResult pooled = run_ensemble(spec, stops);

  REQUIRE(serial.stokes.size() == 2);
  REQUIRE(pooled.stokes.size() == 2);
  for (std::size_t st = 0; st < 2; ++st) {
    CHECK(same_samples(serial.stokes[st], pooled.stokes[st]));
    CHECK(serial.gawbs_delta[st] == pooled.gawbs_delta[st]);
  }
}

TEST_CASE("the seed fully determines the ensemble", "[ensemble]") {
  const Grid grid = make_grid(128, 8.0);
  EnsembleSpec spec = small_spec(grid);
  spec.paths = 16;
  const std::vector<double> stops = {0.3};

  const EnsembleResult a = run_ensemble(spec, stops);
  const EnsembleResult b = run_ensemble(spec, stops);
  CHECK(same_samples(a.stokes[0], b.stokes[0]));

  spec.seed += 1;
  const EnsembleResult c = run_ensemble(spec, stops);
  CHECK(!same_samples(a.stokes[0], c.stokes[0]));
}

TEST_CASE("vacuum beat note reproduces the shot-noise level", "[ensemble]") {
  const Grid grid = make_grid(128, 8.0);
  EnsembleSpec spec = small_spec(grid);
  spec.step.dz = 0.02;
  spec.step.kerr = false;  // calibration mode: linear propagation of vacuum + pulse
  spec.step.raman_noise = false;
  spec.gawbs.magnitude = 0.0;
  spec.paths = 1500;
  const EnsembleResult res = run_ensemble(spec, {0.1});

  const SqueezingResult m = measure(res.stokes[0], res.gawbs_delta[0], {});
  // Var(S_theta) = |<S3>| for every dark-plane angle, to sampling error
  CHECK_THAT(m.m_min_db, Catch::Matchers::WithinAbs(0.0, 5.0 * m.sem_db));
  CHECK_THAT(m.m_max_db, Catch::Matchers::WithinAbs(0.0, 5.0 * m.sem_db));
  CHECK(m.sem_db < 0.25);

  // the bright axis carries the photon number of both arms
  const StokesMoments mom = res.stokes[0].moments();
  CHECK_THAT(mom.mean_s3, Catch::Matchers::WithinRel(mom.mean_s0, 1e-3));
  CHECK(mom.mean_s1 < 0.01 * mom.mean_s0);
}

TEST_CASE("acoustic phase differences follow the stop schedule", "[ensemble]") {
  const Grid grid = make_grid(64, 6.0);
  EnsembleSpec spec = small_spec(grid);
  spec.paths = 2000;
  spec.step.kerr = false;
  spec.step.raman_noise = false;
  spec.gawbs.magnitude = 0.02;
  spec.gawbs.phase_density = 0.05;
  const EnsembleResult res = run_ensemble(spec, {0.5, 1.0});

  double v1 = 0.0, v2 = 0.0;
  for (int i = 0; i < spec.paths; ++i) {
    v1 += res.gawbs_delta[0][i] * res.gawbs_delta[0][i];
    v2 += res.gawbs_delta[1][i] * res.gawbs_delta[1][i];
  }
  v1 /= spec.paths;
  v2 /= spec.paths;
  // two independent arms: Var(delta) = 2 G^2 pd z, linear in z
  const double target = 2.0 * spec.gawbs.magnitude * spec.gawbs.magnitude *
                        spec.gawbs.phase_density * 0.5;
  CHECK_THAT(v1, Catch::Matchers::WithinAbs(target, 5.0 * target * std::sqrt(2.0 / spec.paths)));
  CHECK_THAT(v2 / v1, Catch::Matchers::WithinAbs(2.0, 0.35));

  // a common acoustic bath cancels between the arms
  spec.gawbs.inter_arm = GawbsInterArm::common;
  spec.paths = 8;
  const EnsembleResult common = run_ensemble(spec, {0.5});
  for (int i = 0; i < spec.paths; ++i) CHECK(common.gawbs_delta[0][i] == 0.0);

  // acoustics off: deltas identically zero
  spec.gawbs.inter_arm = GawbsInterArm::independent;
  spec.gawbs.magnitude = 0.0;
  const EnsembleResult off = run_ensemble(spec, {0.5});
  for (int i = 0; i < spec.paths; ++i) CHECK(off.gawbs_delta[0][i] == 0.0);
}

TEST_CASE("measure() honours the trajectory prefix", "[ensemble]") {
  const Grid grid = make_grid(64, 6.0);
  EnsembleSpec spec = small_spec(grid);
  spec.paths = 120;
  const EnsembleResult res = run_ensemble(spec, {0.3});

  StokesEnsemble prefix;
  std::vector<double> prefix_delta;
  for (int i = 0; i < 50; ++i) {
    prefix.add(res.stokes[0][i]);
    prefix_delta.push_back(res.gawbs_delta[0][i]);
  }

  MeasureOptions opt;
  opt.use_paths = 50;
  const SqueezingResult cut = measure(res.stokes[0], res.gawbs_delta[0], opt);
  const SqueezingResult manual = measure(prefix, prefix_delta, {});
  CHECK(cut.m_min == manual.m_min);
  CHECK(cut.m_max == manual.m_max);
  CHECK(cut.sem_db == manual.sem_db);

  const SqueezingResult full = measure(res.stokes[0], res.gawbs_delta[0], {});
  CHECK(cut.m_min != full.m_min);

  opt.use_paths = 10000;  // prefixes beyond the ensemble mean "use everything"
  const SqueezingResult big = measure(res.stokes[0], res.gawbs_delta[0], opt);
  CHECK(big.m_min == full.m_min);
}

TEST_CASE("measure() applies acoustics, loss and overlap in sequence", "[ensemble]") {
  const Grid grid = make_grid(64, 6.0);
  EnsembleSpec spec = small_spec(grid);
  spec.paths = 300;
  spec.gawbs.magnitude = 0.05;
  spec.gawbs.phase_density = 0.05;
  const EnsembleResult res = run_ensemble(spec, {0.5});

  MeasureOptions plain;
  const SqueezingResult pure = measure(res.stokes[0], res.gawbs_delta[0], plain);

  MeasureOptions with_gawbs;
  with_gawbs.gawbs = true;
  const SqueezingResult rotated = measure(res.stokes[0], res.gawbs_delta[0], with_gawbs);
  CHECK(rotated.m_max > pure.m_max);  // bright-axis leakage adds noise

  MeasureOptions with_detection;
  with_detection.loss_eps = 0.13;
  with_detection.visibility = 0.91;
  const SqueezingResult detected = measure(res.stokes[0], res.gawbs_delta[0], with_detection);
  const double a = (1.0 - 0.13) * 0.91;
  CHECK_THAT(detected.m_min, Catch::Matchers::WithinRel(a * pure.m_min + 1.0 - a, 1e-14));

  MeasureOptions with_shot;
  with_shot.shot_norm = 2.0 * std::abs(res.stokes[0].moments().mean_s3);
  const SqueezingResult renorm = measure(res.stokes[0], res.gawbs_delta[0], with_shot);
  CHECK_THAT(renorm.m_min, Catch::Matchers::WithinRel(0.5 * pure.m_min, 1e-13));

  MeasureOptions starved;
  starved.gawbs = true;
  CHECK_THROWS_AS(measure(res.stokes[0], {}, starved), std::invalid_argument);
}

TEST_CASE("ensemble validation and failure propagation", "[ensemble]") {
  const Grid grid = make_grid(64, 6.0);
  EnsembleSpec spec = small_spec(grid);

  EnsembleSpec no_grid = spec;
  no_grid.grid = nullptr;
  CHECK_THROWS_AS(run_ensemble(no_grid, {0.5}), std::invalid_argument);

  EnsembleSpec one_path = spec;
  one_path.paths = 1;
  CHECK_THROWS_AS(run_ensemble(one_path, {0.5}), std::invalid_argument);

  EnsembleSpec bad_nbar = spec;
  bad_nbar.nbar = 0.0;
  CHECK_THROWS_AS(run_ensemble(bad_nbar, {0.5}), std::invalid_argument);

  CHECK_THROWS_AS(run_ensemble(spec, {}), std::invalid_argument);
  CHECK_THROWS_AS(run_ensemble(spec, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(run_ensemble(spec, {0.0}), std::invalid_argument);

  EnsembleSpec sick = spec;
  sick.paths = 4;
  sick.amplitude = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(run_ensemble(sick, {0.5}), std::runtime_error);
}
