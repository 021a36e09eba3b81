#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcfsq/experiments.hpp"
#include "pcfsq/version.hpp"

namespace pcfsq {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment {
  shot_noise,
  single,
  sweep,
  length,
  b3_study,
  steepening_study,
  convergence,
};

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::shot_noise: return "shot_noise";
    case Experiment::single: return "single";
    case Experiment::sweep: return "sweep";
    case Experiment::length: return "length";
    case Experiment::b3_study: return "b3_study";
    case Experiment::steepening_study: return "steepening_study";
    case Experiment::convergence: return "convergence";
  }
  return "?";
}

/// Everything a run needs, resolved from preset -> file -> command line.
/// `resolved` holds the complete flattened key set (defaults included) so the
/// emitted manifest alone reproduces the run.
struct RunConfig {
  Experiment experiment = Experiment::single;
  std::string preset;
  std::uint64_t seed = 1;
  int paths = 1000;
  int workers = 1;
  std::string out_dir = ".";
  std::string label;

  FibreParams fibre;
  PulseParams pulse;

  int n_points = 4096;
  double t_window = 20.0;

  double dz = 1e-3;
  std::string snapshot_file;
  int snapshot_stride = 10;

  RamanModel raman;
  double raman_tau1_fs = 12.2;  // as configured; RamanModel holds pulse units
  double raman_tau2_fs = 32.0;
  std::vector<double> raman_lines_thz;  // flattened center,width,amplitude triples

  GawbsModel gawbs;
  RunToggles toggles;

  bool empirical_shot = false;
  bool dump_stokes = false;

  std::vector<double> energies_pj;  // sweep grid (default grid if not set)
  double sweep_length_m = 1.0;
  double lmax_m = 30.0;
  std::vector<double> b3_values;

  std::map<std::string, std::string> resolved;
};

namespace confdetail {

enum class Source { preset, file, cli, manifest };

struct Entry {
  std::string value;
  int line = 0;
  Source source = Source::file;
};

using EntryMap = std::map<std::string, Entry>;

inline std::string where(const Entry& e) {
  switch (e.source) {
    case Source::preset: return "(preset)";
    case Source::cli: return "(command line)";
    case Source::manifest: return "(manifest)";
    case Source::file: break;
  }
  return "(line " + std::to_string(e.line) + ")";
}

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> s = {"run",   "fibre",   "pulse",       "grid",
                                          "step",  "raman",   "gawbs",       "toggles",
                                          "sweep", "length",  "measurement", "b3"};
  return s;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> s = {
      "run.experiment",      "run.preset",          "run.seed",
      "run.paths",           "run.workers",         "run.out_dir",
      "run.label",           "fibre.beta2_ps2_km",  "fibre.beta3_ps3_km",
      "fibre.gamma_per_w_km", "fibre.wavelength_nm", "fibre.loss_eps",
      "fibre.overlap_v",     "fibre.gawbs_g",       "pulse.t0_ps",
      "pulse.shape",         "pulse.energy_pj",     "grid.n_points",
      "grid.t_window",       "step.dz",             "step.snapshot_file",
      "step.snapshot_stride", "raman.model",        "raman.fraction",
      "raman.tau1_fs",       "raman.tau2_fs",       "raman.temperature_k",
      "raman.lines",         "gawbs.correlation",   "gawbs.inter_arm",
      "gawbs.phase_density", "toggles.loss",        "toggles.overlap",
      "toggles.gawbs",       "toggles.raman_noise", "toggles.third_order",
      "toggles.self_steepening", "measurement.empirical_shot",
      "measurement.dump_stokes", "sweep.energies_pj", "sweep.length_m",
      "length.lmax_m",       "b3.values"};
  return s;
}

inline EntryMap parse_config_text(const std::string& text) {
  EntryMap entries;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section header at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (!known_sections().count(section))
        throw ConfigError("config: unknown section [" + section + "] at line " +
                          std::to_string(line_no));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value' at line " + std::to_string(line_no));
    const std::string bare = trim(line.substr(0, eq));
    if (bare.empty())
      throw ConfigError("config: empty key at line " + std::to_string(line_no));
    if (section.empty())
      throw ConfigError("config: key '" + bare + "' outside any [section] at line " +
                        std::to_string(line_no));
    const std::string key = section + "." + bare;
    if (!known_keys().count(key))
      throw ConfigError("config: unknown key '" + key + "' at line " + std::to_string(line_no));
    const auto [it, inserted] =
        entries.emplace(key, Entry{trim(line.substr(eq + 1)), line_no, Source::file});
    if (!inserted)
      throw ConfigError("config: duplicate key '" + key + "' at line " + std::to_string(line_no) +
                        " (first at line " + std::to_string(it->second.line) + ")");
  }
  return entries;
}

inline double parse_double(const std::string& key, const Entry& e) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " = '" + e.value + "' is not a number " + where(e));
  }
}

inline long long parse_integer(const std::string& key, const Entry& e) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " = '" + e.value + "' is not an integer " + where(e));
  }
}

inline std::uint64_t parse_u64(const std::string& key, const Entry& e) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(e.value, &pos);
    if (pos != e.value.size() || e.value.find('-') != std::string::npos)
      throw std::invalid_argument("bad");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " = '" + e.value + "' is not an unsigned integer " +
                      where(e));
  }
}

inline bool parse_bool(const std::string& key, const Entry& e) {
  const std::string& v = e.value;
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config: " + key + " = '" + v + "' is not a boolean " + where(e));
}

inline std::vector<double> parse_double_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(e.value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(key, Entry{item, e.line, e.source}));
  }
  return out;
}

/// Lorentzian lines as comma-separated center:width:amplitude triples (THz).
inline std::vector<double> parse_line_triples(const std::string& key, const Entry& e) {
  std::vector<double> flat;
  std::string item;
  std::istringstream in(e.value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream triple(item);
    std::string part;
    int n = 0;
    while (std::getline(triple, part, ':')) {
      flat.push_back(parse_double(key, Entry{trim(part), e.line, e.source}));
      ++n;
    }
    if (n != 3)
      throw ConfigError("config: " + key + " expects center:width:amplitude triples " + where(e));
  }
  return flat;
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join_doubles(const std::vector<double>& vs) {
  std::string s;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) s += ",";
    s += fmt17(vs[i]);
  }
  return s;
}

inline std::string join_triples(const std::vector<double>& flat) {
  std::string s;
  for (std::size_t i = 0; i + 2 < flat.size(); i += 3) {
    if (i) s += ",";
    s += fmt17(flat[i]) + ":" + fmt17(flat[i + 1]) + ":" + fmt17(flat[i + 2]);
  }
  return s;
}

inline EntryMap preset_entries(const std::string& name) {
  if (name == "nl-pm-750-810nm") {
    EntryMap m;
    const auto put = [&m](const char* k, const char* v) {
      m.emplace(k, Entry{v, 0, Source::preset});
    };
    put("fibre.beta2_ps2_km", "12.2");
    put("fibre.beta3_ps3_km", "0");
    put("fibre.gamma_per_w_km", "91.4");
    put("fibre.wavelength_nm", "810");
    put("fibre.loss_eps", "0.13");
    put("fibre.gawbs_g", "3.2e-4");
    put("pulse.t0_ps", "0.068");
    put("pulse.shape", "sech");
    return m;
  }
  throw ConfigError("config: unknown preset '" + name + "'");
}

}  // namespace confdetail

/// Resolves layered entries (preset under file under command line) into a
/// validated RunConfig. Every error names the offending key and its origin.
inline RunConfig resolve_config(const confdetail::EntryMap& file_entries,
                                const std::map<std::string, std::string>& cli_overrides = {},
                                const std::string& env_out_dir = "") {
  using namespace confdetail;

  for (const auto& [k, v] : cli_overrides)
    if (!known_keys().count(k)) throw ConfigError("config: unknown key '" + k + "' (command line)");

  // preset name: command line wins over the file
  std::string preset;
  if (auto it = cli_overrides.find("run.preset"); it != cli_overrides.end())
    preset = it->second;
  else if (auto f = file_entries.find("run.preset"); f != file_entries.end())
    preset = f->second.value;

  EntryMap entries;
  if (!preset.empty()) entries = preset_entries(preset);
  for (const auto& [k, e] : file_entries) entries.insert_or_assign(k, e);
  for (const auto& [k, v] : cli_overrides) entries.insert_or_assign(k, Entry{v, 0, Source::cli});

  const auto has = [&entries](const char* k) { return entries.count(k) != 0; };
  const auto entry = [&entries](const char* k) -> const Entry& { return entries.at(k); };

  RunConfig c;
  c.preset = preset;

  // ---- experiment selector and conditional requirements ----
  std::vector<std::string> missing;
  if (!has("run.experiment")) missing.push_back("run.experiment");

  Experiment exp = Experiment::single;
  if (has("run.experiment")) {
    const std::string v = entry("run.experiment").value;
    if (v == "shot_noise") exp = Experiment::shot_noise;
    else if (v == "single") exp = Experiment::single;
    else if (v == "sweep") exp = Experiment::sweep;
    else if (v == "length") exp = Experiment::length;
    else if (v == "b3_study") exp = Experiment::b3_study;
    else if (v == "steepening_study") exp = Experiment::steepening_study;
    else if (v == "convergence") exp = Experiment::convergence;
    else
      throw ConfigError("config: run.experiment = '" + v +
                        "' (expected shot_noise|single|sweep|length|b3_study|steepening_study|"
                        "convergence) " +
                        where(entry("run.experiment")));
  }
  c.experiment = exp;

  for (const char* k : {"fibre.beta2_ps2_km", "fibre.gamma_per_w_km", "fibre.wavelength_nm",
                        "pulse.t0_ps"})
    if (!entries.count(k)) missing.push_back(k);

  const bool needs_energy = exp == Experiment::shot_noise || exp == Experiment::single ||
                            exp == Experiment::length || exp == Experiment::convergence;
  if (needs_energy && !has("pulse.energy_pj")) missing.push_back("pulse.energy_pj");

  const bool overlap_on = has("toggles.overlap") && parse_bool("toggles.overlap", entry("toggles.overlap"));
  const bool loss_on = has("toggles.loss") && parse_bool("toggles.loss", entry("toggles.loss"));
  const bool gawbs_on = has("toggles.gawbs") && parse_bool("toggles.gawbs", entry("toggles.gawbs"));
  if (overlap_on && !has("fibre.overlap_v")) missing.push_back("fibre.overlap_v");
  if (loss_on && !has("fibre.loss_eps")) missing.push_back("fibre.loss_eps");
  if (gawbs_on && !has("fibre.gawbs_g")) missing.push_back("fibre.gawbs_g");
  if (exp == Experiment::b3_study && !has("b3.values")) missing.push_back("b3.values");

  if (has("raman.model") && entry("raman.model").value == "multi_lorentzian" &&
      !has("raman.lines"))
    missing.push_back("raman.lines");

  if (!missing.empty()) {
    std::string msg = "config: missing required key";
    if (missing.size() > 1) msg += "s";
    msg += ": ";
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i) msg += ", ";
      msg += missing[i];
    }
    throw ConfigError(msg);
  }

  const auto range_error = [](const char* key, const Entry& e, const std::string& need) {
    throw ConfigError("config: " + std::string(key) + " = " + e.value + " out of range (need " +
                      need + ") " + where(e));
  };

  // ---- run ----
  if (has("run.seed")) c.seed = parse_u64("run.seed", entry("run.seed"));
  if (has("run.paths")) {
    const long long v = parse_integer("run.paths", entry("run.paths"));
    if (v < 2) range_error("run.paths", entry("run.paths"), ">= 2");
    c.paths = static_cast<int>(v);
  }
  if (has("run.workers")) {
    const long long v = parse_integer("run.workers", entry("run.workers"));
    if (v < 1) range_error("run.workers", entry("run.workers"), ">= 1");
    c.workers = static_cast<int>(v);
  }
  if (has("run.out_dir"))
    c.out_dir = entry("run.out_dir").value;
  else if (!env_out_dir.empty())
    c.out_dir = env_out_dir;
  c.label = has("run.label") ? entry("run.label").value : to_string(exp);

  // ---- fibre ----
  c.fibre.beta2_ps2_km = parse_double("fibre.beta2_ps2_km", entry("fibre.beta2_ps2_km"));
  if (!(c.fibre.beta2_ps2_km > 0.0))
    range_error("fibre.beta2_ps2_km", entry("fibre.beta2_ps2_km"), "> 0");
  if (has("fibre.beta3_ps3_km"))
    c.fibre.beta3_ps3_km = parse_double("fibre.beta3_ps3_km", entry("fibre.beta3_ps3_km"));
  c.fibre.gamma_per_w_km = parse_double("fibre.gamma_per_w_km", entry("fibre.gamma_per_w_km"));
  if (!(c.fibre.gamma_per_w_km > 0.0))
    range_error("fibre.gamma_per_w_km", entry("fibre.gamma_per_w_km"), "> 0");
  const double wl_nm = parse_double("fibre.wavelength_nm", entry("fibre.wavelength_nm"));
  if (!(wl_nm > 0.0)) range_error("fibre.wavelength_nm", entry("fibre.wavelength_nm"), "> 0");
  c.fibre.wavelength_m = wl_nm * 1e-9;
  if (has("fibre.loss_eps")) {
    c.fibre.loss_fraction = parse_double("fibre.loss_eps", entry("fibre.loss_eps"));
    if (c.fibre.loss_fraction < 0.0 || c.fibre.loss_fraction > 1.0)
      range_error("fibre.loss_eps", entry("fibre.loss_eps"), "in [0,1]");
  }
  if (has("fibre.overlap_v")) {
    c.fibre.spectral_overlap = parse_double("fibre.overlap_v", entry("fibre.overlap_v"));
    if (!(c.fibre.spectral_overlap > 0.0) || c.fibre.spectral_overlap > 1.0)
      range_error("fibre.overlap_v", entry("fibre.overlap_v"), "in (0,1]");
  }
  if (has("fibre.gawbs_g")) {
    c.fibre.gawbs_magnitude = parse_double("fibre.gawbs_g", entry("fibre.gawbs_g"));
    if (c.fibre.gawbs_magnitude < 0.0)
      range_error("fibre.gawbs_g", entry("fibre.gawbs_g"), ">= 0");
  }

  // ---- pulse ----
  c.pulse.t0_ps = parse_double("pulse.t0_ps", entry("pulse.t0_ps"));
  if (!(c.pulse.t0_ps > 0.0)) range_error("pulse.t0_ps", entry("pulse.t0_ps"), "> 0");
  if (has("pulse.shape")) {
    const std::string v = entry("pulse.shape").value;
    if (v == "sech") c.pulse.shape = PulseShape::Sech;
    else if (v == "gaussian") c.pulse.shape = PulseShape::Gaussian;
    else
      throw ConfigError("config: pulse.shape = '" + v + "' (expected sech|gaussian) " +
                        where(entry("pulse.shape")));
  }
  if (has("pulse.energy_pj")) {
    c.pulse.total_energy_pj = parse_double("pulse.energy_pj", entry("pulse.energy_pj"));
    if (needs_energy && !(c.pulse.total_energy_pj > 0.0))
      range_error("pulse.energy_pj", entry("pulse.energy_pj"), "> 0");
  }

  // ---- grid ----
  if (has("grid.n_points")) {
    const long long v = parse_integer("grid.n_points", entry("grid.n_points"));
    if (v < 64 || (v & (v - 1)) != 0)
      range_error("grid.n_points", entry("grid.n_points"), "a power of two >= 64");
    c.n_points = static_cast<int>(v);
  }
  if (has("grid.t_window")) {
    c.t_window = parse_double("grid.t_window", entry("grid.t_window"));
    if (!(c.t_window > 0.0)) range_error("grid.t_window", entry("grid.t_window"), "> 0");
  }

  // ---- step ----
  if (has("step.dz")) {
    c.dz = parse_double("step.dz", entry("step.dz"));
    if (!(c.dz > 0.0)) range_error("step.dz", entry("step.dz"), "> 0");
  }
  if (has("step.snapshot_file")) c.snapshot_file = entry("step.snapshot_file").value;
  if (has("step.snapshot_stride")) {
    const long long v = parse_integer("step.snapshot_stride", entry("step.snapshot_stride"));
    if (v < 1) range_error("step.snapshot_stride", entry("step.snapshot_stride"), ">= 1");
    c.snapshot_stride = static_cast<int>(v);
  }

  // ---- raman ----
  if (has("raman.model")) {
    const std::string v = entry("raman.model").value;
    if (v == "instantaneous") c.raman.kind = RamanKind::instantaneous;
    else if (v == "single_oscillator") c.raman.kind = RamanKind::single_oscillator;
    else if (v == "multi_lorentzian") c.raman.kind = RamanKind::multi_lorentzian;
    else
      throw ConfigError("config: raman.model = '" + v +
                        "' (expected instantaneous|single_oscillator|multi_lorentzian) " +
                        where(entry("raman.model")));
  }
  if (has("raman.fraction")) {
    c.raman.fraction = parse_double("raman.fraction", entry("raman.fraction"));
    if (c.raman.fraction < 0.0 || c.raman.fraction > 1.0)
      range_error("raman.fraction", entry("raman.fraction"), "in [0,1]");
  }
  if (has("raman.tau1_fs")) {
    c.raman_tau1_fs = parse_double("raman.tau1_fs", entry("raman.tau1_fs"));
    if (!(c.raman_tau1_fs > 0.0)) range_error("raman.tau1_fs", entry("raman.tau1_fs"), "> 0");
  }
  if (has("raman.tau2_fs")) {
    c.raman_tau2_fs = parse_double("raman.tau2_fs", entry("raman.tau2_fs"));
    if (!(c.raman_tau2_fs > 0.0)) range_error("raman.tau2_fs", entry("raman.tau2_fs"), "> 0");
  }
  c.raman.tau1 = c.raman_tau1_fs * 1e-3 / c.pulse.t0_ps;
  c.raman.tau2 = c.raman_tau2_fs * 1e-3 / c.pulse.t0_ps;
  if (has("raman.temperature_k")) {
    c.raman.temperature_k = parse_double("raman.temperature_k", entry("raman.temperature_k"));
    if (c.raman.temperature_k < 0.0)
      range_error("raman.temperature_k", entry("raman.temperature_k"), ">= 0");
  }
  if (has("raman.lines")) {
    c.raman_lines_thz = parse_line_triples("raman.lines", entry("raman.lines"));
    for (std::size_t i = 0; i + 2 < c.raman_lines_thz.size(); i += 3) {
      // frequencies in THz -> dimensionless Omega = 2*pi*nu*t0
      LorentzianLine ln;
      ln.center = 2.0 * kPi * c.raman_lines_thz[i] * c.pulse.t0_ps;
      ln.width = 2.0 * kPi * c.raman_lines_thz[i + 1] * c.pulse.t0_ps;
      ln.amplitude = c.raman_lines_thz[i + 2];
      if (!(ln.center > 0.0) || !(ln.width > 0.0) || !(ln.amplitude > 0.0))
        range_error("raman.lines", entry("raman.lines"), "positive triples");
      c.raman.lines.push_back(ln);
    }
  }

  // ---- gawbs ----
  if (has("gawbs.correlation")) {
    const std::string v = entry("gawbs.correlation").value;
    if (v == "white_in_z") c.gawbs.correlation = GawbsCorrelation::white_in_z;
    else if (v == "per_fibre_constant") c.gawbs.correlation = GawbsCorrelation::per_fibre_constant;
    else
      throw ConfigError("config: gawbs.correlation = '" + v +
                        "' (expected white_in_z|per_fibre_constant) " +
                        where(entry("gawbs.correlation")));
  }
  if (has("gawbs.inter_arm")) {
    const std::string v = entry("gawbs.inter_arm").value;
    if (v == "independent") c.gawbs.inter_arm = GawbsInterArm::independent;
    else if (v == "common") c.gawbs.inter_arm = GawbsInterArm::common;
    else
      throw ConfigError("config: gawbs.inter_arm = '" + v +
                        "' (expected independent|common) " + where(entry("gawbs.inter_arm")));
  }
  if (has("gawbs.phase_density")) {
    c.gawbs.phase_density = parse_double("gawbs.phase_density", entry("gawbs.phase_density"));
    if (c.gawbs.phase_density < 0.0)
      range_error("gawbs.phase_density", entry("gawbs.phase_density"), ">= 0");
  }
  c.gawbs.magnitude = c.fibre.gawbs_magnitude;

  // ---- toggles ----
  if (has("toggles.loss")) c.toggles.loss = loss_on;
  if (has("toggles.overlap")) c.toggles.overlap = overlap_on;
  if (has("toggles.gawbs")) c.toggles.gawbs = gawbs_on;
  if (has("toggles.raman_noise"))
    c.toggles.raman_noise = parse_bool("toggles.raman_noise", entry("toggles.raman_noise"));
  if (has("toggles.third_order"))
    c.toggles.third_order = parse_bool("toggles.third_order", entry("toggles.third_order"));
  if (has("toggles.self_steepening"))
    c.toggles.self_steepening =
        parse_bool("toggles.self_steepening", entry("toggles.self_steepening"));

  // ---- measurement ----
  if (has("measurement.empirical_shot"))
    c.empirical_shot = parse_bool("measurement.empirical_shot", entry("measurement.empirical_shot"));
  if (has("measurement.dump_stokes"))
    c.dump_stokes = parse_bool("measurement.dump_stokes", entry("measurement.dump_stokes"));

  // ---- study grids ----
  if (has("sweep.energies_pj")) {
    c.energies_pj = parse_double_list("sweep.energies_pj", entry("sweep.energies_pj"));
    if (c.energies_pj.empty())
      range_error("sweep.energies_pj", entry("sweep.energies_pj"), "a non-empty list");
    for (double e : c.energies_pj)
      if (!(e > 0.0)) range_error("sweep.energies_pj", entry("sweep.energies_pj"), "all > 0");
  } else {
    c.energies_pj = default_energy_grid();
  }
  if (has("sweep.length_m")) {
    c.sweep_length_m = parse_double("sweep.length_m", entry("sweep.length_m"));
    if (!(c.sweep_length_m > 0.0)) range_error("sweep.length_m", entry("sweep.length_m"), "> 0");
  }
  if (has("length.lmax_m")) {
    c.lmax_m = parse_double("length.lmax_m", entry("length.lmax_m"));
    if (!(c.lmax_m > 0.0)) range_error("length.lmax_m", entry("length.lmax_m"), "> 0");
  }
  if (has("b3.values")) {
    c.b3_values = parse_double_list("b3.values", entry("b3.values"));
    if (c.b3_values.empty()) range_error("b3.values", entry("b3.values"), "a non-empty list");
    for (double v : c.b3_values)
      if (v < 0.0) range_error("b3.values", entry("b3.values"), "all >= 0");
  }

  // belt and braces: the domain structs re-check their own invariants
  c.fibre.validate();
  c.pulse.validate();
  c.raman.validate();
  c.gawbs.validate();

  // ---- full resolved key set, for the manifest ----
  using confdetail::fmt17;
  auto& r = c.resolved;
  r["run.experiment"] = to_string(c.experiment);
  if (!c.preset.empty()) r["run.preset"] = c.preset;
  r["run.seed"] = std::to_string(c.seed);
  r["run.paths"] = std::to_string(c.paths);
  r["run.workers"] = std::to_string(c.workers);
  r["run.out_dir"] = c.out_dir;
  r["run.label"] = c.label;
  r["fibre.beta2_ps2_km"] = fmt17(c.fibre.beta2_ps2_km);
  r["fibre.beta3_ps3_km"] = fmt17(c.fibre.beta3_ps3_km);
  r["fibre.gamma_per_w_km"] = fmt17(c.fibre.gamma_per_w_km);
  r["fibre.wavelength_nm"] = fmt17(wl_nm);
  r["fibre.loss_eps"] = fmt17(c.fibre.loss_fraction);
  r["fibre.overlap_v"] = fmt17(c.fibre.spectral_overlap);
  r["fibre.gawbs_g"] = fmt17(c.fibre.gawbs_magnitude);
  r["pulse.t0_ps"] = fmt17(c.pulse.t0_ps);
  r["pulse.shape"] = to_string(c.pulse.shape);
  if (has("pulse.energy_pj")) r["pulse.energy_pj"] = fmt17(c.pulse.total_energy_pj);
  r["grid.n_points"] = std::to_string(c.n_points);
  r["grid.t_window"] = fmt17(c.t_window);
  r["step.dz"] = fmt17(c.dz);
  if (!c.snapshot_file.empty()) r["step.snapshot_file"] = c.snapshot_file;
  r["step.snapshot_stride"] = std::to_string(c.snapshot_stride);
  r["raman.model"] = c.raman.kind == RamanKind::instantaneous ? "instantaneous"
                     : c.raman.kind == RamanKind::single_oscillator ? "single_oscillator"
                                                                    : "multi_lorentzian";
  r["raman.fraction"] = fmt17(c.raman.fraction);
  r["raman.tau1_fs"] = fmt17(c.raman_tau1_fs);
  r["raman.tau2_fs"] = fmt17(c.raman_tau2_fs);
  r["raman.temperature_k"] = fmt17(c.raman.temperature_k);
  if (!c.raman_lines_thz.empty()) r["raman.lines"] = confdetail::join_triples(c.raman_lines_thz);
  r["gawbs.correlation"] =
      c.gawbs.correlation == GawbsCorrelation::white_in_z ? "white_in_z" : "per_fibre_constant";
  r["gawbs.inter_arm"] =
      c.gawbs.inter_arm == GawbsInterArm::independent ? "independent" : "common";
  r["gawbs.phase_density"] = fmt17(c.gawbs.phase_density);
  r["toggles.loss"] = c.toggles.loss ? "true" : "false";
  r["toggles.overlap"] = c.toggles.overlap ? "true" : "false";
  r["toggles.gawbs"] = c.toggles.gawbs ? "true" : "false";
  r["toggles.raman_noise"] = c.toggles.raman_noise ? "true" : "false";
  r["toggles.third_order"] = c.toggles.third_order ? "true" : "false";
  r["toggles.self_steepening"] = c.toggles.self_steepening ? "true" : "false";
  r["measurement.empirical_shot"] = c.empirical_shot ? "true" : "false";
  r["measurement.dump_stokes"] = c.dump_stokes ? "true" : "false";
  r["sweep.energies_pj"] = confdetail::join_doubles(c.energies_pj);
  r["sweep.length_m"] = fmt17(c.sweep_length_m);
  r["length.lmax_m"] = fmt17(c.lmax_m);
  if (!c.b3_values.empty()) r["b3.values"] = confdetail::join_doubles(c.b3_values);

  return c;
}

/// Manifest loading: the `config` map of an emitted manifest feeds the same
/// resolution pipeline, so a manifest alone reproduces its run.
inline confdetail::EntryMap manifest_entries(const std::string& json_text) {
  using namespace confdetail;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("manifest: invalid JSON: ") + e.what());
  }
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != kManifestSchemaVersion)
    throw ConfigError("manifest: missing or unsupported schema_version");
  if (!j.contains("config") || !j["config"].is_object())
    throw ConfigError("manifest: missing config object");
  EntryMap entries;
  for (const auto& [k, v] : j["config"].items()) {
    if (!known_keys().count(k)) throw ConfigError("manifest: unknown key '" + k + "'");
    if (!v.is_string()) throw ConfigError("manifest: key '" + k + "' is not a string");
    entries.emplace(k, Entry{v.get<std::string>(), 0, Source::manifest});
  }
  return entries;
}

inline RunConfig load_config(const std::string& path,
                             const std::map<std::string, std::string>& cli_overrides = {},
                             const std::string& env_out_dir = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const bool is_manifest =
      path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  const auto entries =
      is_manifest ? manifest_entries(buf.str()) : confdetail::parse_config_text(buf.str());
  return resolve_config(entries, cli_overrides, env_out_dir);
}

inline void print_resolved(const RunConfig& c, std::ostream& out) {
  for (const auto& [k, v] : c.resolved) out << k << " = " << v << "\n";
}

inline ExperimentContext make_context(const RunConfig& c) {
  ExperimentContext ctx;
  ctx.grid = make_grid(c.n_points, c.t_window);
  ctx.fibre = c.fibre;
  ctx.pulse = c.pulse;
  ctx.scales = derive_scales(c.fibre, c.pulse);
  ctx.raman = c.raman;
  ctx.gawbs = c.gawbs;
  ctx.dz = c.dz;
  ctx.seed = c.seed;
  ctx.paths = c.paths;
  ctx.workers = c.workers;
  return ctx;
}

}  // namespace pcfsq
