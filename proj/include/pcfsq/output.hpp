#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcfsq/experiments.hpp"
#include "pcfsq/version.hpp"

namespace pcfsq {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Writes via a temp file + rename so an interrupted run never leaves a
/// partial file at the final path.
inline void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " -> " + path);
}

inline constexpr const char* kCsvHeader =
    "energy_pJ,length_m,loss,overlap,gawbs,raman_noise,b3,s,"
    "M_min_dB,M_max_dB,theta_min_rad,sem_dB,paths,wall_s";

inline std::vector<std::string> record_fields(const RunRecord& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> f;
  f.push_back(format_double(r.energy_pj));
  f.push_back(format_double(r.length_m));
  f.push_back(r.toggles.loss ? "1" : "0");
  f.push_back(r.toggles.overlap ? "1" : "0");
  f.push_back(r.toggles.gawbs ? "1" : "0");
  f.push_back(r.toggles.raman_noise ? "1" : "0");
  f.push_back(format_double(r.b3));
  f.push_back(format_double(r.s));
  f.push_back(format_double(r.failed ? nan : r.result.m_min_db));
  f.push_back(format_double(r.failed ? nan : r.result.m_max_db));
  f.push_back(format_double(r.failed ? nan : r.result.theta_min));
  f.push_back(format_double(r.failed ? nan : r.result.sem_db));
  f.push_back(std::to_string(r.paths));
  f.push_back(format_double(r.wall_s));
  return f;
}

inline std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::string s = kCsvHeader;
  s += '\n';
  for (const auto& r : records) {
    const auto f = record_fields(r);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) s += ',';
      s += f[i];
    }
    s += '\n';
  }
  return s;
}

/// Same table whitespace-separated with a '#' header, for gnuplot.
inline std::string records_to_dat(const std::vector<RunRecord>& records) {
  std::string header = kCsvHeader;
  for (auto& c : header)
    if (c == ',') c = ' ';
  std::string s = "# " + header + '\n';
  for (const auto& r : records) {
    const auto f = record_fields(r);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) s += ' ';
      s += f[i];
    }
    s += '\n';
  }
  return s;
}

inline std::string gnuplot_script(const std::string& dat_name, const std::string& xlabel,
                                  int xcol) {
  std::string s;
  s += "set xlabel \"" + xlabel + "\"\n";
  s += "set ylabel \"squeezing [dB]\"\n";
  s += "set grid\n";
  s += "plot \"" + dat_name + "\" using " + std::to_string(xcol) +
       ":9:12 with yerrorlines title \"M_min\", \\\n";
  s += "     \"" + dat_name + "\" using " + std::to_string(xcol) +
       ":10 with lines title \"M_max\"\n";
  return s;
}

inline std::string manifest_json(const std::map<std::string, std::string>& resolved_config) {
  nlohmann::ordered_json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["program"] = kProgramName;
  j["version"] = kVersion;
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : resolved_config) cfg[k] = v;  // std::map: sorted keys
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

struct StudyOutputs {
  std::string csv_path, dat_path, gp_path, manifest_path;
};

/// Emits <stem>.csv/.dat/.gp plus <stem>.manifest.json, each atomically.
inline StudyOutputs write_study(const std::string& out_dir, const std::string& stem,
                                const std::vector<RunRecord>& records,
                                const std::map<std::string, std::string>& resolved_config,
                                const std::string& xlabel, int xcol) {
  StudyOutputs o;
  const std::string base = out_dir.empty() ? stem : out_dir + "/" + stem;
  o.csv_path = base + ".csv";
  o.dat_path = base + ".dat";
  o.gp_path = base + ".gp";
  o.manifest_path = base + ".manifest.json";
  write_text_atomic(o.csv_path, records_to_csv(records));
  write_text_atomic(o.dat_path, records_to_dat(records));
  write_text_atomic(o.gp_path, gnuplot_script(stem + ".dat", xlabel, xcol));
  write_text_atomic(o.manifest_path, manifest_json(resolved_config));
  return o;
}

/// Per-trajectory dark-plane samples as two-column text.
inline std::string stokes_dat(const StokesEnsemble& e) {
  std::string s = "# S1 S2\n";
  for (const auto& smp : e.samples())
    s += format_double(smp.s1) + " " + format_double(smp.s2) + "\n";
  return s;
}

/// Response spectrum in ascending-frequency order: Omega, Re h, Im h.
inline std::string response_dat(const Grid& grid, const std::vector<cplx>& h) {
  std::string s = "# Omega Re_h Im_h\n";
  const int n = grid.n_points;
  for (int i = 0; i < n; ++i) {
    const int k = (i + n / 2) % n;  // negative frequencies first
    s += format_double(grid.omega[k]) + " " + format_double(h[k].real()) + " " +
         format_double(h[k].imag()) + "\n";
  }
  return s;
}

/// Raman noise spectral density in ascending-frequency order.
inline std::string noise_spec_dat(const Grid& grid, const RamanNoiseSpec& spec) {
  std::string s = "# Omega S_Gamma\n";
  const int n = grid.n_points;
  for (int i = 0; i < n; ++i) {
    const int k = (i + n / 2) % n;
    s += format_double(grid.omega[k]) + " " + format_double(spec.spectral_density[k]) + "\n";
  }
  return s;
}

inline constexpr std::uint32_t kSnapshotMagic = 0x31515350u;  // "PSQ1" little-endian

/// Binary field snapshots: per record a 16-byte header
/// {magic u32, n_points u32, z f64} followed by n_points (re, im) f64 pairs,
/// all little-endian.
class SnapshotWriter {
 public:
  SnapshotWriter(const std::string& path, std::uint32_t n_points)
      : out_(path, std::ios::binary | std::ios::trunc), n_(n_points) {
    static_assert(std::endian::native == std::endian::little,
                  "snapshot format is little-endian");
    if (!out_) throw std::runtime_error("cannot open snapshot file: " + path);
  }

  void write(const TrajectoryField& field) {
    if (field.values.size() != n_) throw std::invalid_argument("snapshot: grid size changed");
    out_.write(reinterpret_cast<const char*>(&kSnapshotMagic), 4);
    out_.write(reinterpret_cast<const char*>(&n_), 4);
    out_.write(reinterpret_cast<const char*>(&field.z), 8);
    out_.write(reinterpret_cast<const char*>(field.values.data()),
               static_cast<std::streamsize>(n_ * sizeof(cplx)));
    if (!out_) throw std::runtime_error("snapshot write failed");
  }

 private:
  std::ofstream out_;
  std::uint32_t n_;
};

inline std::vector<std::pair<double, std::vector<cplx>>> read_snapshots(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot file: " + path);
  std::vector<std::pair<double, std::vector<cplx>>> records;
  while (true) {
    std::uint32_t magic = 0, n = 0;
    double z = 0.0;
    in.read(reinterpret_cast<char*>(&magic), 4);
    if (in.eof()) break;
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&z), 8);
    if (!in || magic != kSnapshotMagic) throw std::runtime_error("bad snapshot header");
    std::vector<cplx> values(n);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(n * sizeof(cplx)));
    if (!in) throw std::runtime_error("truncated snapshot record");
    records.emplace_back(z, std::move(values));
  }
  return records;
}

}  // namespace pcfsq
