#pragma once

// Pipeline configuration loaded from YAML. Every key is optional and falls back to the
// built-in defaults; unknown keys are rejected with their file position.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tmqfc/comb.hpp"
#include "tmqfc/counting.hpp"
#include "tmqfc/error.hpp"
#include "tmqfc/interferometry.hpp"
#include "tmqfc/io.hpp"
#include "tmqfc/propagation.hpp"
#include "tmqfc/pump_design.hpp"
#include "tmqfc/spdc.hpp"
#include "tmqfc/spsa.hpp"

namespace tmqfc::config {

inline constexpr int kSchemaVersion = 1;

struct GridConfig {
  std::size_t n_samples = 4096;
  double dt_ps = 200.0 / 4096.0;
};

struct ModesConfig {
  SpdcParams spdc;
  std::size_t n_modes = 4;
  bool superpositions = true;
};

struct DesignTarget {
  std::string label;                 // written pump name
  std::string target;                // mode the pump selects
  std::vector<std::string> alphabet;  // modes it is designed against
  double budget_mw = 125.0;
};

struct DesignConfig {
  std::vector<DesignTarget> targets = {
      {"P1", "S1", {"S1", "S2", "S3", "S4"}, 125.0}, {"P2", "S2", {"S1", "S2", "S3", "S4"}, 125.0},
      {"P3", "S3", {"S1", "S2", "S3", "S4"}, 125.0}, {"P4", "S4", {"S1", "S2", "S3", "S4"}, 125.0},
      {"P5", "S5", {"S3", "S4", "S5", "S6"}, 125.0}, {"P6", "S6", {"S3", "S4", "S5", "S6"}, 125.0}};
  PumpDesignOptions options;
};

struct Alphabet {
  std::string name;
  std::vector<std::string> pumps;
  std::vector<std::string> signals;
};

struct QkdBasis {
  std::vector<std::string> pumps;
  std::vector<std::string> signals;
};

struct MatrixConfig {
  std::string pumps_file = "out/design/pumps.json";
  std::vector<Alphabet> alphabets = {{"A", {"P1", "P2", "P3", "P4"}, {"S1", "S2", "S3", "S4"}},
                                     {"B", {"P3", "P4", "P5", "P6"}, {"S3", "S4", "S5", "S6"}}};
  double delay_step_ps = 0.2;
  double delay_half_span_ps = 0.4;
  double power_step_mw = 5.0;
  double power_half_span_mw = 10.0;
  std::size_t sweep_steps = 100;
  std::size_t final_steps = 200;
  QkdBasis key = {{"P5", "P6"}, {"S5", "S6"}};
  QkdBasis check = {{"P1", "P2"}, {"S1", "S2"}};
};

struct SpsaCmdConfig {
  std::string pumps_file = "out/design/pumps.json";
  std::string pump = "P3";
  std::string signal = "S3";
  std::vector<std::string> alphabet = {"S1", "S2", "S3", "S4"};
  SPSAConfig spsa = [] {
    SPSAConfig c;
    c.calibrate_gain = true;
    return c;
  }();
  double meter_noise = 0.01;
  double phase_perturbation_rad = 0.4;
  FeedbackOptions feedback;
};

struct CountsCmdConfig {
  CountingConfig counting;
  std::string report_file;  // ConversionReport JSON; empty uses `eta`
  std::vector<std::string> pumps = {"P1", "P2", "P3", "P4"};
  std::vector<std::string> signals = {"S1", "S2", "S3", "S4"};
  std::vector<std::vector<double>> eta = {{0.918, 0.0785, 0.039, 0.016},
                                          {0.062, 0.914, 0.060, 0.030},
                                          {0.035, 0.058, 0.910, 0.034},
                                          {0.012, 0.028, 0.046, 0.905}};
  /// Scale factors applied to eta and to the pump power for a second, reduced-power run.
  double reduced_signal_factor = 0.92;
  double reduced_noise_factor = 0.60;
};

struct AlignCmdConfig {
  std::vector<std::string> modes = {"S3", "S4", "S5", "S6"};
  std::string reference = "S4";
  std::map<std::string, double> shifts = {{"S3", 1.3}, {"S6", 1.8}};
  double tau_half_span_ps = 5.0;
  double tau_step_ps = 0.1;
  double similar_threshold = 0.9;
  ShapingImperfection imperfection;
};

struct ChirpCmdConfig {
  std::size_t n_lines = 17;
  double spacing_ghz = 20.0;
  double center_wavelength_nm = 1556.6;
  std::vector<double> coefficients = {0.3, -0.1, 0.02};  // rad per m^2, m^3, m^4
  std::size_t reference_pair = 0;
  bool remove_ramp = true;
};

struct Config {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  GridConfig grid;
  WaveguideSpec waveguide;
  ModesConfig modes;
  std::string modes_file;  // empty: rebuild from `modes`
  DesignConfig design;
  MatrixConfig matrix;
  SpsaCmdConfig spsa;
  CountsCmdConfig counts;
  AlignCmdConfig align;
  ChirpCmdConfig chirp;
  std::string source;       // path or "<string>"
  std::string source_text;  // raw text, hashed into manifests

  TimeFrequencyGrid time_grid() const { return TimeFrequencyGrid::make(grid.n_samples, grid.dt_ps); }
};

namespace detail {

inline std::string where(const std::string& src, const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return src;
  return src + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

class Section {
 public:
  Section(YAML::Node node, std::string src, std::string path) : node_(node), src_(std::move(src)), path_(std::move(path)) {
    if (node_ && !node_.IsNull())
      require(node_.IsMap(), ErrorKind::Config, where(src_, node_) + ": '" + path_ + "' must be a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    const YAML::Node v = node_[key];
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw Error(ErrorKind::Config, where(src_, v) + ": bad value for '" + qualified(key) + "'");
    }
  }

  /// Like get() with a predicate on the parsed value.
  template <class T, class Pred>
  void get(const std::string& key, T& out, Pred ok, const std::string& expectation) {
    get(key, out);
    if (has(key)) require(ok(out), ErrorKind::Config, where(src_, node_[key]) + ": '" + qualified(key) + "' " + expectation);
  }

  template <class E>
  void get_enum(const std::string& key, E& out, const std::map<std::string, E>& names) {
    std::string s;
    get(key, s);
    if (!has(key)) return;
    const auto it = names.find(s);
    std::string allowed;
    for (const auto& [n, _] : names) allowed += (allowed.empty() ? "" : ", ") + n;
    require(it != names.end(), ErrorKind::Config,
            where(src_, node_[key]) + ": '" + qualified(key) + "' must be one of " + allowed);
    out = it->second;
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return {has(key) ? node_[key] : YAML::Node(), src_, qualified(key)};
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  const std::string& source() const { return src_; }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void done() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      require(seen_.count(k) > 0, ErrorKind::Config, where(src_, kv.first) + ": unknown key '" + qualified(k) + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string src_, path_;
  std::set<std::string> seen_;
};

inline auto positive = [](double v) { return v > 0.0; };
inline auto nonneg = [](double v) { return v >= 0.0; };

inline void read_spdc(Section s, SpdcParams& p) {
  s.get("pump_width_ps", p.pump_width_ps, positive, "must be > 0");
  s.get("pump_sg_order", p.pump_sg_order, [](int v) { return v >= 1; }, "must be >= 1");
  s.get("filter_bw_nm", p.filter_bw_nm, positive, "must be > 0");
  s.get("phasematch_bw_thz", p.phasematch_bw_thz, positive, "must be > 0");
  s.get("signal_wavelength_nm", p.signal_wavelength_nm, positive, "must be > 0");
  s.done();
}

inline void read_waveguide(Section s, WaveguideSpec& w) {
  s.get("length_mm", w.length_mm, positive, "must be > 0");
  s.get("shg_efficiency", w.shg_efficiency, nonneg, "must be >= 0");
  s.get("kappa", w.kappa, nonneg, "must be >= 0");
  s.get("gvm_pump", w.gvm_pump);
  s.get("gvm_sf", w.gvm_sf);
  s.get("gvd_signal", w.gvd_signal);
  s.get("gvd_pump", w.gvd_pump);
  s.get("gvd_sf", w.gvd_sf);
  s.get("delta_k0", w.delta_k0);
  s.get("ripple_amplitude", w.ripple_amplitude);
  s.get("ripple_period_mm", w.ripple_period_mm, positive, "must be > 0");
  s.get("signal_wavelength_nm", w.signal_wavelength_nm, positive, "must be > 0");
  s.get("pump_wavelength_nm", w.pump_wavelength_nm, positive, "must be > 0");
  s.done();
}

inline void read_design(Section s, DesignConfig& d) {
  if (s.has("targets")) {
    const auto t = s.raw("targets");
    require(t.IsSequence() && t.size() > 0, ErrorKind::Config, where(s.source(), t) + ": 'design.targets' must be a non-empty list");
    d.targets.clear();
    for (std::size_t i = 0; i < t.size(); ++i) {
      Section e(t[i], s.source(), "design.targets[" + std::to_string(i) + "]");
      DesignTarget dt;
      dt.alphabet = {"S1", "S2", "S3", "S4"};
      e.get("label", dt.label);
      e.get("target", dt.target);
      e.get("alphabet", dt.alphabet);
      e.get("budget_mw", dt.budget_mw, positive, "must be > 0");
      e.done();
      require(!dt.target.empty(), ErrorKind::Config, where(s.source(), t[i]) + ": design target needs 'target'");
      if (dt.label.empty()) dt.label = "P" + dt.target.substr(1);
      d.targets.push_back(dt);
    }
  }
  auto& o = d.options;
  s.get("spacing_ghz", o.spacing_ghz, positive, "must be > 0");
  s.get("n_lines", o.n_lines, [](std::size_t n) { return n % 2 == 1; }, "must be odd");
  s.get("design_samples", o.design_samples, [](std::size_t n) { return is_power_of_two(n); }, "must be a power of two");
  s.get("n_steps", o.n_steps, [](std::size_t n) { return n > 0; }, "must be > 0");
  s.get("final_steps", o.final_steps, [](std::size_t n) { return n > 0; }, "must be > 0");
  s.get_enum("warm_start", o.warm_start,
             std::map<std::string, WarmStart>{{"alternating_projection", WarmStart::AlternatingProjection},
                                              {"conjugate_mode", WarmStart::ConjugateMode}});
  s.get("projection_iters", o.projection_iters);
  s.get_enum("refiner", o.refiner,
             std::map<std::string, Refiner>{{"bfgs", Refiner::Bfgs}, {"nelder_mead", Refiner::NelderMead},
                                            {"none", Refiner::None}});
  s.get("max_iters", o.max_iters, [](int n) { return n > 0; }, "must be > 0");
  s.get("restarts", o.restarts, [](int n) { return n >= 1; }, "must be >= 1");
  s.get("restart_jitter", o.restart_jitter, nonneg, "must be >= 0");
  s.done();
}

inline void read_qkd(Section s, QkdBasis& b) {
  s.get("pumps", b.pumps, [](const auto& v) { return v.size() == 2; }, "must list two pumps");
  s.get("signals", b.signals, [](const auto& v) { return v.size() == 2; }, "must list two signals");
  s.done();
}

inline void read_matrix(Section s, MatrixConfig& m) {
  s.get("pumps_file", m.pumps_file);
  if (s.has("alphabets")) {
    const auto a = s.raw("alphabets");
    require(a.IsSequence() && a.size() > 0, ErrorKind::Config, where(s.source(), a) + ": 'matrix.alphabets' must be a non-empty list");
    m.alphabets.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      Section e(a[i], s.source(), "matrix.alphabets[" + std::to_string(i) + "]");
      Alphabet al;
      e.get("name", al.name);
      e.get("pumps", al.pumps);
      e.get("signals", al.signals);
      e.done();
      require(!al.pumps.empty() && al.pumps.size() <= al.signals.size(), ErrorKind::Config,
              where(s.source(), a[i]) + ": alphabet needs pumps and at least as many signals");
      if (al.name.empty()) al.name = std::string(1, static_cast<char>('A' + i));
      m.alphabets.push_back(al);
    }
  }
  s.get("delay_step_ps", m.delay_step_ps, positive, "must be > 0");
  s.get("delay_half_span_ps", m.delay_half_span_ps, nonneg, "must be >= 0");
  s.get("power_step_mw", m.power_step_mw, positive, "must be > 0");
  s.get("power_half_span_mw", m.power_half_span_mw, nonneg, "must be >= 0");
  s.get("sweep_steps", m.sweep_steps, [](std::size_t n) { return n > 0; }, "must be > 0");
  s.get("final_steps", m.final_steps, [](std::size_t n) { return n > 0; }, "must be > 0");
  read_qkd(s.sub("qkd_key"), m.key);
  read_qkd(s.sub("qkd_check"), m.check);
  s.done();
}

inline void read_spsa(Section s, SpsaCmdConfig& c) {
  s.get("pumps_file", c.pumps_file);
  s.get("pump", c.pump);
  s.get("signal", c.signal);
  s.get("alphabet", c.alphabet);
  s.get("a0", c.spsa.a0, positive, "must be > 0");
  s.get("c0", c.spsa.c0, positive, "must be > 0");
  s.get("alpha", c.spsa.alpha, [](double v) { return v > 0.5 && v <= 1.0; }, "must lie in (0.5, 1]");
  s.get("gamma", c.spsa.gamma, [](double v) { return v > 0.0 && v <= 0.5; }, "must lie in (0, 0.5]");
  s.get("max_iters", c.spsa.max_iters, [](int n) { return n >= 0; }, "must be >= 0");
  s.get_enum("direction", c.spsa.direction,
             std::map<std::string, Direction>{{"maximize", Direction::Maximize}, {"minimize", Direction::Minimize}});
  s.get("calibrate_gain", c.spsa.calibrate_gain);
  s.get("plateau_window", c.spsa.plateau_window, [](int n) { return n >= 1; }, "must be >= 1");
  s.get("plateau_tol", c.spsa.plateau_tol, nonneg, "must be >= 0");
  s.get("meter_noise", c.meter_noise, nonneg, "must be >= 0");
  s.get("phase_perturbation_rad", c.phase_perturbation_rad, nonneg, "must be >= 0");
  s.get("power_mw", c.feedback.power_mw, positive, "must be > 0");
  s.get("n_steps", c.feedback.n_steps, [](std::size_t n) { return n > 0; }, "must be > 0");
  s.get("design_samples", c.feedback.design_samples, [](std::size_t n) { return is_power_of_two(n); },
        "must be a power of two");
  s.done();
}

inline void read_counts(Section s, CountsCmdConfig& c) {
  auto& k = c.counting;
  s.get("mu", k.mu, positive, "must be > 0");
  s.get("rep_rate_ghz", k.rep_rate_ghz, positive, "must be > 0");
  s.get("extra_attenuation_db", k.extra_attenuation_db, nonneg, "must be >= 0");
  s.get("detector_efficiency", k.detector_efficiency, [](double v) { return v >= 0.0 && v <= 1.0; }, "must lie in [0, 1]");
  s.get("noise_per_mw", k.noise_per_mw, nonneg, "must be >= 0");
  s.get("pump_power_mw", k.pump_power_mw, nonneg, "must be >= 0");
  s.get("max_count_rate", k.max_count_rate, positive, "must be > 0");
  s.get("integration_time_s", k.integration_time_s, positive, "must be > 0");
  s.get("report_file", c.report_file);
  s.get("pumps", c.pumps);
  s.get("signals", c.signals);
  s.get("eta", c.eta);
  s.get("reduced_signal_factor", c.reduced_signal_factor, nonneg, "must be >= 0");
  s.get("reduced_noise_factor", c.reduced_noise_factor, nonneg, "must be >= 0");
  s.done();
}

inline void read_align(Section s, AlignCmdConfig& a) {
  s.get("modes", a.modes);
  s.get("reference", a.reference);
  s.get("shifts", a.shifts);
  s.get("tau_half_span_ps", a.tau_half_span_ps, positive, "must be > 0");
  s.get("tau_step_ps", a.tau_step_ps, positive, "must be > 0");
  s.get("similar_threshold", a.similar_threshold, [](double v) { return v > 0.0 && v <= 1.0; }, "must lie in (0, 1]");
  s.get("imperfection_amplitude", a.imperfection.amplitude_rel, nonneg, "must be >= 0");
  s.get("imperfection_phase_rad", a.imperfection.phase_rad, nonneg, "must be >= 0");
  s.done();
}

inline void read_chirp(Section s, ChirpCmdConfig& c) {
  s.get("n_lines", c.n_lines, [](std::size_t n) { return n % 2 == 1 && n >= 3; }, "must be odd and >= 3");
  s.get("spacing_ghz", c.spacing_ghz, positive, "must be > 0");
  s.get("center_wavelength_nm", c.center_wavelength_nm, positive, "must be > 0");
  s.get("coefficients", c.coefficients);
  s.get("reference_pair", c.reference_pair);
  s.get("remove_ramp", c.remove_ramp);
  s.done();
}

}  // namespace detail

inline Config parse(const std::string& text, const std::string& source = "<string>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::Config, source + ":" + std::to_string(e.mark.line + 1) + ":" +
                                       std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  Config c;
  c.source = source;
  c.source_text = text;
  detail::Section top(root, source, "");
  top.get("schema_version", c.schema_version);
  require(top.has("schema_version"), ErrorKind::Config, source + ": missing 'schema_version'");
  require(c.schema_version == kSchemaVersion, ErrorKind::Config,
          detail::where(source, root["schema_version"]) + ": unsupported schema_version " +
              std::to_string(c.schema_version) + " (expected " + std::to_string(kSchemaVersion) + ")");
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.get("modes_file", c.modes_file);
  {
    auto g = top.sub("grid");
    g.get("n_samples", c.grid.n_samples, [](std::size_t n) { return is_power_of_two(n); }, "must be a power of two");
    g.get("dt_ps", c.grid.dt_ps, detail::positive, "must be > 0");
    g.done();
  }
  {
    auto m = top.sub("modes");
    m.get("n_modes", c.modes.n_modes, [](std::size_t n) { return n >= 1; }, "must be >= 1");
    m.get("superpositions", c.modes.superpositions);
    detail::read_spdc(m.sub("spdc"), c.modes.spdc);
    m.done();
  }
  detail::read_waveguide(top.sub("waveguide"), c.waveguide);
  detail::read_design(top.sub("design"), c.design);
  detail::read_matrix(top.sub("matrix"), c.matrix);
  detail::read_spsa(top.sub("spsa"), c.spsa);
  detail::read_counts(top.sub("counts"), c.counts);
  detail::read_align(top.sub("align"), c.align);
  detail::read_chirp(top.sub("chirp"), c.chirp);
  top.done();

  c.design.options.seed = c.seed;
  c.spsa.spsa.seed = c.seed;
  c.counts.counting.seed = c.seed;
  c.align.imperfection.seed = c.seed;
  try {
    c.waveguide.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, source + ": waveguide: " + e.what());
  }
  return c;
}

inline Config load(const std::filesystem::path& p) {
  std::string text;
  try {
    text = io::read_text(p);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return parse(text, p.string());
}

}  // namespace tmqfc::config
