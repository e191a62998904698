#pragma once

// Line-oriented CSV and JSON documents for envelopes, mode sets, combs, masks and reports.
// Every writer is deterministic: fixed 17-digit number formatting and no timestamps.

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tmqfc/comb.hpp"
#include "tmqfc/counting.hpp"
#include "tmqfc/error.hpp"
#include "tmqfc/field.hpp"
#include "tmqfc/propagation.hpp"
#include "tmqfc/spdc.hpp"
#include "tmqfc/spsa.hpp"

namespace tmqfc::io {

using json = nlohmann::ordered_json;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + p.string());
  out << text;
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + p.string());
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, p.string() + ": " + e.what());
  }
}

inline json grid_to_json(const TimeFrequencyGrid& g) {
  return {{"n_samples", g.n_samples}, {"dt_ps", g.dt}, {"f_center_thz", g.f_center}};
}

inline TimeFrequencyGrid grid_from_json(const json& j) {
  return TimeFrequencyGrid::make(j.at("n_samples").get<std::size_t>(), j.at("dt_ps").get<double>(),
                                 j.value("f_center_thz", 0.0));
}

inline const char* units_name(EnvelopeUnits u) { return u == EnvelopeUnits::SqrtWatt ? "sqrt_W" : "sqrt_photons_per_ps"; }

inline EnvelopeUnits units_from(const std::string& s) {
  if (s == "sqrt_W") return EnvelopeUnits::SqrtWatt;
  require(s == "sqrt_photons_per_ps", ErrorKind::Io, "unknown envelope units '" + s + "'");
  return EnvelopeUnits::SqrtPhotonRate;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    require(used == s.size() || s.find_first_not_of(" \r\t", used) == std::string::npos, ErrorKind::Io,
            where + ": malformed number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::Io, where + ": malformed number '" + s + "'");
  }
}

struct Table {
  json header;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Reads "# {json}" + column line + numeric rows.
inline Table read_table(const std::filesystem::path& p, bool needs_header) {
  std::istringstream in(read_text(p));
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = p.string() + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '#') {
      try {
        t.header = json::parse(line.substr(1));
      } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, where + ": bad header: " + e.what());
      }
      continue;
    }
    if (t.columns.empty()) {
      t.columns = split(line);
      continue;
    }
    const auto cells = split(line);
    require(cells.size() == t.columns.size(), ErrorKind::Io,
            where + ": expected " + std::to_string(t.columns.size()) + " columns, found " + std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(to_double(c, where));
    t.rows.push_back(std::move(row));
  }
  require(!t.columns.empty(), ErrorKind::Io, p.string() + ": no column header");
  require(!needs_header || t.header.is_object(), ErrorKind::Io, p.string() + ": missing '# {...}' grid header");
  return t;
}

}  // namespace detail

inline void write_envelope_csv(const std::filesystem::path& p, const ComplexEnvelope& e) {
  json h = grid_to_json(e.grid());
  h["wavelength_nm"] = e.wavelength_nm();
  h["units"] = units_name(e.units());
  std::string s = "# " + h.dump() + "\nt_ps,re,im\n";
  for (std::size_t i = 0; i < e.size(); ++i)
    s += num(e.grid().time(i)) + "," + num(e[i].real()) + "," + num(e[i].imag()) + "\n";
  write_text(p, s);
}

inline ComplexEnvelope read_envelope_csv(const std::filesystem::path& p) {
  const auto t = detail::read_table(p, true);
  require(t.columns == std::vector<std::string>{"t_ps", "re", "im"}, ErrorKind::Io,
          p.string() + ": expected columns t_ps,re,im");
  const auto g = grid_from_json(t.header);
  require(t.rows.size() == g.n_samples, ErrorKind::Io, p.string() + ": row count does not match n_samples");
  std::vector<cplx> s;
  for (const auto& r : t.rows) s.emplace_back(r[1], r[2]);
  return {g, std::move(s), t.header.value("wavelength_nm", 1550.0), units_from(t.header.value("units", "sqrt_photons_per_ps"))};
}

/// Multi-column CSV (t_ps, re_X, im_X, ...) sharing one grid header.
inline void write_mode_set_csv(const std::filesystem::path& p, const TemporalModeSet& set) {
  require(set.size() > 0, ErrorKind::Domain, "empty mode set");
  const auto& g = set[0].grid();
  json h = grid_to_json(g);
  h["wavelength_nm"] = set[0].wavelength_nm();
  h["units"] = units_name(set[0].units());
  h["labels"] = set.labels;
  std::string s = "# " + h.dump() + "\nt_ps";
  for (const auto& l : set.labels) s += ",re_" + l + ",im_" + l;
  s += "\n";
  for (std::size_t i = 0; i < g.n_samples; ++i) {
    s += num(g.time(i));
    for (const auto& m : set.modes) s += "," + num(m[i].real()) + "," + num(m[i].imag());
    s += "\n";
  }
  write_text(p, s);
}

inline TemporalModeSet read_mode_set_csv(const std::filesystem::path& p) {
  const auto t = detail::read_table(p, true);
  const auto g = grid_from_json(t.header);
  require(t.rows.size() == g.n_samples, ErrorKind::Io, p.string() + ": row count does not match n_samples");
  require(t.columns.size() % 2 == 1 && t.columns.size() >= 3 && t.columns[0] == "t_ps", ErrorKind::Io,
          p.string() + ": expected t_ps then re/im column pairs");
  TemporalModeSet set;
  const double lambda = t.header.value("wavelength_nm", 1532.1);
  const auto units = units_from(t.header.value("units", "sqrt_photons_per_ps"));
  for (std::size_t c = 1; c < t.columns.size(); c += 2) {
    const std::string label = t.columns[c].rfind("re_", 0) == 0 ? t.columns[c].substr(3) : t.columns[c];
    std::vector<cplx> s;
    for (const auto& r : t.rows) s.emplace_back(r[c], r[c + 1]);
    set.modes.emplace_back(g, std::move(s), lambda, units);
    set.labels.push_back(label);
  }
  return set;
}

inline json comb_to_json(const CombSpec& c) {
  json lines = json::array();
  for (std::size_t i = 0; i < c.size(); ++i)
    lines.push_back({{"index", c.offset(i)}, {"amplitude", c.lines[i].amplitude}, {"phase", c.lines[i].phase}});
  return {{"center_wavelength_nm", c.center_wavelength_nm}, {"spacing_ghz", c.spacing_ghz}, {"lines", lines}};
}

inline CombSpec comb_from_json(const json& j) {
  try {
    CombSpec c;
    c.center_wavelength_nm = j.at("center_wavelength_nm").get<double>();
    c.spacing_ghz = j.at("spacing_ghz").get<double>();
    for (const auto& l : j.at("lines")) c.lines.push_back({l.at("amplitude").get<double>(), l.at("phase").get<double>()});
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("bad comb document: ") + e.what());
  }
}

inline json mask_to_json(const WaveshaperMask& m) {
  return {{"start_thz", m.start_thz}, {"resolution_ghz", m.resolution_ghz}, {"attenuation_db", m.attenuation_db},
          {"phase", m.phase}};
}

inline WaveshaperMask mask_from_json(const json& j) {
  try {
    WaveshaperMask m;
    m.start_thz = j.at("start_thz").get<double>();
    m.resolution_ghz = j.at("resolution_ghz").get<double>();
    m.attenuation_db = j.at("attenuation_db").get<std::vector<double>>();
    m.phase = j.at("phase").get<std::vector<double>>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("bad mask document: ") + e.what());
  }
}

/// Mask from CSV rows (freq_GHz, att_dB, phase_rad) on a uniform frequency lattice.
inline WaveshaperMask read_mask_csv(const std::filesystem::path& p) {
  const auto t = detail::read_table(p, false);
  require(t.columns == std::vector<std::string>{"freq_GHz", "att_dB", "phase_rad"}, ErrorKind::Io,
          p.string() + ": expected columns freq_GHz,att_dB,phase_rad");
  require(t.rows.size() >= 2, ErrorKind::Io, p.string() + ": mask needs at least two rows");
  WaveshaperMask m;
  m.start_thz = t.rows[0][0] * 1e-3;
  m.resolution_ghz = t.rows[1][0] - t.rows[0][0];
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double expect = t.rows[0][0] + static_cast<double>(i) * m.resolution_ghz;
    require(std::abs(t.rows[i][0] - expect) < 1e-6 * std::max(1.0, m.resolution_ghz), ErrorKind::Io,
            p.string() + ": row " + std::to_string(i + 1) + " breaks the uniform frequency lattice");
    m.attenuation_db.push_back(t.rows[i][1]);
    m.phase.push_back(t.rows[i][2]);
  }
  m.validate();
  return m;
}

inline void write_mask_csv(const std::filesystem::path& p, const WaveshaperMask& m) {
  std::string s = "freq_GHz,att_dB,phase_rad\n";
  for (std::size_t b = 0; b < m.size(); ++b)
    s += num(m.bin_thz(b) * 1e3) + "," + num(m.attenuation_db[b]) + "," + num(m.phase[b]) + "\n";
  write_text(p, s);
}

inline json report_to_json(const ConversionReport& r) {
  return {{"pumps", r.pump_labels},         {"signals", r.signal_labels},
          {"eta", r.eta},                   {"separability", r.separabilities},
          {"selectivity", r.selectivities}, {"optimal_delay_ps", r.optimal_delay},
          {"optimal_power_mw", r.optimal_power}, {"accuracy_warning", r.accuracy_warning}};
}

inline ConversionReport report_from_json(const json& j) {
  try {
    ConversionReport r;
    r.pump_labels = j.at("pumps").get<std::vector<std::string>>();
    r.signal_labels = j.at("signals").get<std::vector<std::string>>();
    r.eta = j.at("eta").get<std::vector<std::vector<double>>>();
    r.optimal_delay = j.value("optimal_delay_ps", std::vector<double>{});
    r.optimal_power = j.value("optimal_power_mw", std::vector<double>{});
    r.accuracy_warning = j.value("accuracy_warning", false);
    r.update_figures();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("bad report document: ") + e.what());
  }
}

inline void write_eta_csv(const std::filesystem::path& p, const ConversionReport& r) {
  std::string s = "pump";
  for (const auto& l : r.signal_labels) s += "," + l;
  s += "\n";
  for (std::size_t k = 0; k < r.eta.size(); ++k) {
    s += r.pump_labels[k];
    for (double v : r.eta[k]) s += "," + num(v);
    s += "\n";
  }
  write_text(p, s);
}

inline void write_spsa_trace_csv(const std::filesystem::path& p, const SpsaResult& r) {
  std::string s = "iter,objective";
  const std::size_t n = r.thetas.empty() ? 0 : r.thetas[0].size();
  for (std::size_t i = 0; i < n; ++i) s += ",theta" + std::to_string(i);
  s += "\n";
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    s += std::to_string(k + 1) + "," + num(r.trace[k]);
    for (double t : r.thetas[k]) s += "," + num(t);
    s += "\n";
  }
  write_text(p, s);
}

inline void write_scan_csv(const std::filesystem::path& p, const std::vector<double>& taus,
                           const std::vector<std::string>& labels, const std::vector<std::vector<double>>& scans) {
  std::string s = "tau_ps";
  for (const auto& l : labels) s += ",V_" + l;
  s += "\n";
  for (std::size_t i = 0; i < taus.size(); ++i) {
    s += num(taus[i]);
    for (const auto& v : scans) s += "," + num(v[i]);
    s += "\n";
  }
  write_text(p, s);
}

inline void write_counts_csv(const std::filesystem::path& p, const std::vector<std::string>& pumps,
                             const std::vector<std::string>& signals,
                             const std::vector<std::vector<CountRecord>>& records) {
  std::string s = "pump,signal,signal_counts,noise_counts,duration_s\n";
  for (std::size_t k = 0; k < records.size(); ++k)
    for (std::size_t j = 0; j < records[k].size(); ++j)
      s += pumps[k] + "," + signals[j] + "," + std::to_string(records[k][j].signal_counts) + "," +
           std::to_string(records[k][j].noise_counts) + "," + num(records[k][j].duration) + "\n";
  write_text(p, s);
}

}  // namespace tmqfc::io
