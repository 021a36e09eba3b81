#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "pcfsq/config.hpp"
#include "pcfsq/output.hpp"

using namespace pcfsq;
using confdetail::parse_config_text;

namespace {

const char* kMinimalText =
    "[run]\n"
    "experiment = single\n"
    "preset = nl-pm-750-810nm\n"
    "[pulse]\n"
    "energy_pj = 14.6\n";

RunConfig minimal_config() { return resolve_config(parse_config_text(kMinimalText)); }

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("the fibre preset fills the hardware numbers", "[config]") {
  const RunConfig c = minimal_config();
  CHECK(c.experiment == Experiment::single);
  CHECK(c.fibre.beta2_ps2_km == 12.2);
  CHECK(c.fibre.gamma_per_w_km == 91.4);
  CHECK(c.fibre.wavelength_m == 810.0 * 1e-9);
  CHECK(c.fibre.loss_fraction == 0.13);
  CHECK(c.fibre.gawbs_magnitude == 3.2e-4);
  CHECK(c.gawbs.magnitude == 3.2e-4);
  CHECK(c.pulse.t0_ps == 0.068);
  CHECK(c.pulse.shape == PulseShape::Sech);
  CHECK(c.pulse.total_energy_pj == 14.6);
  // defaults fill the rest
  CHECK(c.n_points == 4096);
  CHECK(c.t_window == 20.0);
  CHECK(c.dz == 1e-3);
  CHECK(c.raman.kind == RamanKind::single_oscillator);
  CHECK_THAT(c.raman.tau1, Catch::Matchers::WithinRel(12.2e-3 / 0.068, 1e-14));
  CHECK_THAT(c.raman.tau2, Catch::Matchers::WithinRel(32.0e-3 / 0.068, 1e-14));
  CHECK(c.energies_pj.size() == 20);  // default sweep grid

  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text("[run]\nexperiment = single\npreset = no-such-fibre\n")),
      ConfigError, Catch::Matchers::MessageMatches(
                       Catch::Matchers::ContainsSubstring("unknown preset")));
}

TEST_CASE("an empty config reports every missing key at once", "[config]") {
  try {
    resolve_config(parse_config_text(""));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("missing required keys"));
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("run.experiment"));
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("fibre.beta2_ps2_km"));
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("fibre.gamma_per_w_km"));
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("fibre.wavelength_nm"));
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("pulse.t0_ps"));
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("pulse.energy_pj"));
  }
}

TEST_CASE("parse errors carry the offending line", "[config]") {
  CHECK_THROWS_MATCHES(parse_config_text("[warp]\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("unknown section") &&
                           Catch::Matchers::ContainsSubstring("line 1")));
  CHECK_THROWS_MATCHES(parse_config_text("[run]\nbogus = 1\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("run.bogus") &&
                           Catch::Matchers::ContainsSubstring("line 2")));
  CHECK_THROWS_MATCHES(parse_config_text("seed = 3\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("outside any [section]")));
  CHECK_THROWS_MATCHES(parse_config_text("[run]\nseed\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("expected 'key = value'")));
  CHECK_THROWS_MATCHES(parse_config_text("[run\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("malformed section")));
  CHECK_THROWS_MATCHES(parse_config_text("[run]\nseed = 1\nseed = 2\n"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("duplicate key") &&
                           Catch::Matchers::ContainsSubstring("line 3") &&
                           Catch::Matchers::ContainsSubstring("line 2")));

  // comments and whitespace are stripped before any of that
  const auto entries = parse_config_text("[run]\n  seed =  42   # tuned by dice roll\n");
  CHECK(entries.at("run.seed").value == "42");
  CHECK(entries.at("run.seed").line == 2);
}

TEST_CASE("range errors name the key and its origin", "[config]") {
  const std::string base(kMinimalText);
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[run]\npaths = -5\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("run.paths") &&
                                      Catch::Matchers::ContainsSubstring("out of range") &&
                                      Catch::Matchers::ContainsSubstring(">= 2")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[grid]\nn_points = 100\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("grid.n_points") &&
                                      Catch::Matchers::ContainsSubstring("power of two")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[step]\ndz = 0\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("step.dz")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[fibre]\nloss_eps = 1.5\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("fibre.loss_eps") &&
                                      Catch::Matchers::ContainsSubstring("line 7")));
}

TEST_CASE("malformed values are rejected with their type", "[config]") {
  const std::string base(kMinimalText);
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[toggles]\nloss = maybe\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("not a boolean")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[step]\ndz = tiny\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("not a number")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[run]\npaths = 2.5\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("not an integer")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[run]\nseed = -3\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("unsigned")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text("[run]\nexperiment = warp\npreset = nl-pm-750-810nm\n")),
      ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("run.experiment")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[pulse]\nshape = square\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("sech|gaussian")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[raman]\nmodel = foo\n")), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("raman.model")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(base + "[gawbs]\ncorrelation = pink\n")), ConfigError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("white_in_z|per_fibre_constant")));
}

TEST_CASE("later layers override earlier ones", "[config]") {
  // the file overrides the preset
  const RunConfig file_wins =
      resolve_config(parse_config_text(std::string(kMinimalText) + "[fibre]\nbeta2_ps2_km = 13\n"));
  CHECK(file_wins.fibre.beta2_ps2_km == 13.0);

  // the command line overrides the file
  const RunConfig cli_wins = resolve_config(
      parse_config_text(std::string(kMinimalText) + "[fibre]\nbeta2_ps2_km = 13\n"),
      {{"fibre.beta2_ps2_km", "14"}, {"run.paths", "64"}});
  CHECK(cli_wins.fibre.beta2_ps2_km == 14.0);
  CHECK(cli_wins.paths == 64);

  // a preset can be chosen from the command line alone
  const RunConfig cli_preset = resolve_config(
      parse_config_text("[run]\nexperiment = sweep\n"),
      {{"run.preset", "nl-pm-750-810nm"}});
  CHECK(cli_preset.fibre.beta2_ps2_km == 12.2);

  // unknown command-line keys are rejected up front
  CHECK_THROWS_MATCHES(resolve_config(parse_config_text(kMinimalText), {{"run.bogus", "1"}}),
                       ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("run.bogus") &&
                           Catch::Matchers::ContainsSubstring("command line")));

  // the out-dir environment fallback loses to an explicit key
  const RunConfig env_only = resolve_config(parse_config_text(kMinimalText), {}, "/data/runs");
  CHECK(env_only.out_dir == "/data/runs");
  const RunConfig explicit_dir = resolve_config(
      parse_config_text(std::string(kMinimalText) + "[run]\nout_dir = results\n"), {},
      "/data/runs");
  CHECK(explicit_dir.out_dir == "results");
}

TEST_CASE("toggles demand their parameters", "[config]") {
  // overlap needs a visibility, which no preset provides
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(std::string(kMinimalText) + "[toggles]\noverlap = true\n")),
      ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("fibre.overlap_v")));
  CHECK_NOTHROW(resolve_config(parse_config_text(
      std::string(kMinimalText) + "[toggles]\noverlap = true\n[fibre]\noverlap_v = 0.91\n")));

  // loss and acoustics are satisfied by the preset numbers
  CHECK_NOTHROW(resolve_config(
      parse_config_text(std::string(kMinimalText) + "[toggles]\nloss = true\ngawbs = true\n")));

  // studies need their grids
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text("[run]\nexperiment = b3_study\npreset = nl-pm-750-810nm\n")),
      ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("b3.values")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(std::string(kMinimalText) + "[raman]\nmodel = multi_lorentzian\n")),
      ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("raman.lines")));

  // a sweep needs no single pulse energy
  CHECK_NOTHROW(resolve_config(
      parse_config_text("[run]\nexperiment = sweep\npreset = nl-pm-750-810nm\n")));
}

TEST_CASE("lists and line triples", "[config]") {
  const RunConfig c = resolve_config(parse_config_text(
      std::string(kMinimalText) +
      "[sweep]\nenergies_pj = 3, 5, 7.5\nlength_m = 2\n"
      "[b3]\nvalues = 0, 0.01\n"
      "[raman]\nmodel = multi_lorentzian\nlines = 13.2:0.5:1, 17.6:1.2:0.4\n"));
  CHECK(c.energies_pj == std::vector<double>{3.0, 5.0, 7.5});
  CHECK(c.sweep_length_m == 2.0);
  CHECK(c.b3_values == std::vector<double>{0.0, 0.01});
  REQUIRE(c.raman.lines.size() == 2);
  CHECK_THAT(c.raman.lines[0].center, Catch::Matchers::WithinRel(2.0 * kPi * 13.2 * 0.068, 1e-14));
  CHECK_THAT(c.raman.lines[0].width, Catch::Matchers::WithinRel(2.0 * kPi * 0.5 * 0.068, 1e-14));
  CHECK(c.raman.lines[0].amplitude == 1.0);
  CHECK_THAT(c.raman.lines[1].center, Catch::Matchers::WithinRel(2.0 * kPi * 17.6 * 0.068, 1e-14));

  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(std::string(kMinimalText) + "[sweep]\nenergies_pj = ,\n")),
      ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("non-empty list")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(std::string(kMinimalText) + "[sweep]\nenergies_pj = 3, -1\n")),
      ConfigError, Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("all > 0")));
  CHECK_THROWS_MATCHES(
      resolve_config(parse_config_text(
          std::string(kMinimalText) + "[raman]\nmodel = multi_lorentzian\nlines = 13.2:0.5\n")),
      ConfigError, Catch::Matchers::MessageMatches(
                       Catch::Matchers::ContainsSubstring("center:width:amplitude")));
}

TEST_CASE("the manifest reproduces its run exactly", "[config]") {
  const RunConfig first = resolve_config(parse_config_text(
      std::string(kMinimalText) +
      "[run]\nseed = 987\npaths = 500\nworkers = 4\nlabel = demo\n"
      "[grid]\nn_points = 1024\nt_window = 15\n"
      "[step]\ndz = 0.004\n"
      "[toggles]\nloss = true\ngawbs = true\n"
      "[gawbs]\nphase_density = 0.0085\n"
      "[sweep]\nenergies_pj = 3, 14.6, 35\n"));

  const std::string manifest = manifest_json(first.resolved);
  const RunConfig second = resolve_config(manifest_entries(manifest));

  CHECK(first.resolved == second.resolved);  // full fixed point
  CHECK(second.seed == 987);
  CHECK(second.paths == 500);
  CHECK(second.n_points == 1024);
  CHECK(second.dz == 0.004);
  CHECK(second.toggles.loss);
  CHECK(second.toggles.gawbs);
  CHECK(second.gawbs.phase_density == 0.0085);
  CHECK(second.energies_pj == first.energies_pj);
  CHECK(second.label == "demo");

  // awkward doubles survive the 17-digit round trip bit-exactly
  const RunConfig odd = resolve_config(
      parse_config_text(kMinimalText), {{"step.dz", "0.0030000000000000001"},
                                        {"grid.t_window", "19.999999999999996"}});
  const RunConfig back = resolve_config(manifest_entries(manifest_json(odd.resolved)));
  CHECK(back.dz == odd.dz);
  CHECK(back.t_window == odd.t_window);

  CHECK_THROWS_MATCHES(manifest_entries("{ not json"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("invalid JSON")));
  CHECK_THROWS_MATCHES(manifest_entries("{\"config\": {}}"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("schema_version")));
  CHECK_THROWS_MATCHES(
      manifest_entries("{\"schema_version\": 1, \"config\": {\"run.bogus\": \"1\"}}"),
      ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("run.bogus")));
}

TEST_CASE("configs load from disk by extension", "[config]") {
  const auto cfg_path = write_temp("pcfsq_test_config.cfg", kMinimalText);
  const RunConfig from_file = load_config(cfg_path.string());
  CHECK(from_file.fibre.beta2_ps2_km == 12.2);

  const auto man_path =
      write_temp("pcfsq_test_manifest.json", manifest_json(from_file.resolved));
  const RunConfig from_manifest = load_config(man_path.string());
  CHECK(from_manifest.resolved == from_file.resolved);

  CHECK_THROWS_MATCHES(load_config("/no/such/file.cfg"), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("cannot open")));

  std::filesystem::remove(cfg_path);
  std::filesystem::remove(man_path);
}

TEST_CASE("the resolved config builds a consistent context", "[config]") {
  RunConfig c = resolve_config(parse_config_text(
      std::string(kMinimalText) + "[run]\nseed = 11\npaths = 96\nworkers = 3\n"
                                  "[grid]\nn_points = 256\nt_window = 10\n[step]\ndz = 0.01\n"));
  const ExperimentContext ctx = make_context(c);
  CHECK(ctx.grid.n_points == 256);
  CHECK(ctx.grid.t_window == 10.0);
  CHECK(ctx.dz == 0.01);
  CHECK(ctx.seed == 11);
  CHECK(ctx.paths == 96);
  CHECK(ctx.workers == 3);
  CHECK_THAT(ctx.scales.z0_m, Catch::Matchers::WithinAbs(0.379, 5e-4));
  CHECK(ctx.gawbs.magnitude == c.fibre.gawbs_magnitude);
}
