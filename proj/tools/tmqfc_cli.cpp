// tmqfc-cli: batch pipelines over the simulation modules.
//
//   tmqfc-cli <modes|design|matrix|spsa|counts|align|chirp> -c config.yaml [-o out_dir]
//
// Exit codes: 0 ok, 1 I/O, 2 config, 3 convergence, 4 physics violation.

#include <CLI11.hpp>
#include <Eigen/Core>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tmqfc/comb.hpp"
#include "tmqfc/config.hpp"
#include "tmqfc/counting.hpp"
#include "tmqfc/interferometry.hpp"
#include "tmqfc/io.hpp"
#include "tmqfc/metrics.hpp"
#include "tmqfc/propagation.hpp"
#include "tmqfc/pump_design.hpp"
#include "tmqfc/spdc.hpp"
#include "tmqfc/spsa.hpp"
#include "tmqfc/svg.hpp"

namespace fs = std::filesystem;
using namespace tmqfc;
using io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io:
      return 1;
    case ErrorKind::Config:
    case ErrorKind::Domain:
    case ErrorKind::Range:
    case ErrorKind::Coverage:
      return 2;
    case ErrorKind::Convergence:
      return 3;
    default:
      return 4;
  }
}

struct Run {
  config::Config cfg;
  std::string command;
  fs::path out;
  std::vector<std::string> outputs;

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }

  void manifest(json extra = json::object()) {
    json m = {{"command", command},
              {"config", cfg.source},
              {"config_hash", io::hex64(io::fnv1a(cfg.source_text))},
              {"schema_version", cfg.schema_version},
              {"seed", cfg.seed},
              {"versions",
               {{"tmqfc", kVersion},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"fftw", std::string(fftw_version)}}}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    outputs.push_back("manifest.json");
    m["outputs"] = outputs;
    io::write_json(out / "manifest.json", m);
  }
};

TemporalModeSet build_modes(const config::Config& c) {
  if (!c.modes_file.empty()) return io::read_mode_set_csv(c.modes_file);
  auto set = schmidt_decompose(build_jsa(c.modes.spdc, c.time_grid()), c.modes.n_modes);
  if (c.modes.superpositions && set.size() >= 2) set = with_superpositions(set);
  return set;
}

TemporalModeSet select_modes(const TemporalModeSet& all, const std::vector<std::string>& names) {
  for (const auto& n : names)
    require(std::find(all.labels.begin(), all.labels.end(), n) != all.labels.end(), ErrorKind::Config,
            "mode '" + n + "' is not in the mode set");
  return all.select(names);
}

struct StoredPump {
  std::string label, target;
  std::vector<std::string> alphabet;
  double power_mw = 0.0;
  CombSpec comb;
};

std::map<std::string, StoredPump> load_pumps(const fs::path& p) {
  require(fs::exists(p), ErrorKind::Io, "pump file " + p.string() + " not found; run 'tmqfc-cli design' first");
  const auto j = io::read_json(p);
  std::map<std::string, StoredPump> out;
  try {
    for (const auto& e : j.at("pumps")) {
      StoredPump s;
      s.label = e.at("label").get<std::string>();
      s.target = e.at("target").get<std::string>();
      s.alphabet = e.at("alphabet").get<std::vector<std::string>>();
      s.power_mw = e.at("power_mw").get<double>();
      s.comb = io::comb_from_json(e.at("comb"));
      out[s.label] = s;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, p.string() + ": " + e.what());
  }
  return out;
}

const StoredPump& find_pump(const std::map<std::string, StoredPump>& pumps, const std::string& label) {
  const auto it = pumps.find(label);
  require(it != pumps.end(), ErrorKind::Io, "pump '" + label + "' missing from the pump file");
  return it->second;
}

int cmd_modes(Run& r) {
  const auto set = build_modes(r.cfg);
  json modes = json::array();
  for (std::size_t j = 0; j < set.size(); ++j) {
    io::write_envelope_csv(r.file(set.labels[j] + ".csv"), set[j]);
    modes.push_back({{"label", set.labels[j]}, {"lobes", count_lobes(set[j])}, {"rms_width_ps", rms_width(set[j])}});
  }
  io::write_mode_set_csv(r.file("mode_set.csv"), set);
  std::vector<double> ratios;
  for (double s : set.schmidt_coefficients) ratios.push_back(s / set.schmidt_coefficients.front());
  // S5/S6 overlap S1/S2 by construction, so orthonormality is reported per alphabet.
  std::vector<std::string> schmidt(set.labels.begin(), set.labels.begin() + set.schmidt_coefficients.size());
  json gram = {{"schmidt", set.select(schmidt).max_offdiagonal()}};
  if (set.size() == 6) gram["superposition_alphabet"] = set.select({"S3", "S4", "S5", "S6"}).max_offdiagonal();
  const auto& p = r.cfg.modes.spdc;
  r.manifest({{"modes", modes},
              {"schmidt_coefficients", set.schmidt_coefficients},
              {"coefficient_ratios", ratios},
              {"max_gram_offdiagonal", gram},
              {"build",
               {{"pump_width_ps", p.pump_width_ps},
                {"pump_sg_order", p.pump_sg_order},
                {"filter_bw_nm", p.filter_bw_nm},
                {"phasematch_bw_thz", p.phasematch_bw_thz},
                {"signal_wavelength_nm", p.signal_wavelength_nm},
                {"grid", io::grid_to_json(set[0].grid())}}}});
  std::cout << "modes: " << set.size() << " written, max Gram off-diagonal " << gram.dump() << "\n";
  for (std::size_t j = 0; j < ratios.size(); ++j) std::cout << "  " << set.labels[j] << " ratio " << ratios[j] << "\n";
  return 0;
}

int cmd_design(Run& r) {
  const auto all = build_modes(r.cfg);
  const auto& targets = r.cfg.design.targets;
  std::vector<PumpDesign> designs(targets.size());
  std::vector<TemporalModeSet> sets;
  for (const auto& t : targets) sets.push_back(select_modes(all, t.alphabet));
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& l = sets[i].labels;
    const auto it = std::find(l.begin(), l.end(), targets[i].target);
    require(it != l.end(), ErrorKind::Config, "target " + targets[i].target + " is not in its design alphabet");
    idx.push_back(static_cast<std::size_t>(it - l.begin()));
  }
  parallel_for(targets.size(), [&](std::size_t i) {
    designs[i] = design_pump(idx[i], sets[i], r.cfg.waveguide, targets[i].budget_mw, std::nullopt, r.cfg.design.options);
  });
  json pumps = json::array();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto& d = designs[i];
    d.label = targets[i].label;
    io::write_envelope_csv(r.file(d.label + ".csv"), d.pump);
    pumps.push_back({{"label", d.label},
                     {"target", targets[i].target},
                     {"alphabet", targets[i].alphabet},
                     {"power_mw", d.power_mw},
                     {"eta_row", d.eta_row},
                     {"separability", d.separability},
                     {"selectivity", d.selectivity},
                     {"warm_selectivity", d.warm_selectivity},
                     {"evaluations", d.evaluations},
                     {"comb", io::comb_to_json(d.comb)}});
    std::cout << d.label << ": eta_kk " << d.eta_row[idx[i]] << " sigma " << d.separability << " (selectivity "
              << d.selectivity << ")\n";
  }
  io::write_json(r.file("pumps.json"), {{"grid", io::grid_to_json(all[0].grid())}, {"pumps", pumps}});
  r.manifest();
  return 0;
}

int cmd_matrix(Run& r) {
  const auto all = build_modes(r.cfg);
  const auto& m = r.cfg.matrix;
  const auto stored = load_pumps(m.pumps_file);
  const auto& g = all[0].grid();
  json alphabets = json::array();
  std::map<std::pair<std::string, std::string>, double> lookup;
  std::vector<svg::Panel> panels;
  for (const auto& a : m.alphabets) {
    const auto signals = select_modes(all, a.signals);
    std::vector<ComplexEnvelope> envs;
    std::vector<double> delays, powers;
    json sweeps = json::array();
    for (std::size_t k = 0; k < a.pumps.size(); ++k) {
      const auto& sp = find_pump(stored, a.pumps[k]);
      envs.push_back(detail::comb_pump(sp.comb, g, sp.power_mw));
      const auto it = std::find(a.signals.begin(), a.signals.end(), sp.target);
      const std::size_t target = it != a.signals.end() ? static_cast<std::size_t>(it - a.signals.begin()) : k;
      const auto sw = delay_power_sweep(envs.back(), signals, target, r.cfg.waveguide,
                                        centred_range(0.0, m.delay_half_span_ps, m.delay_step_ps),
                                        centred_range(sp.power_mw, m.power_half_span_mw, m.power_step_mw),
                                        m.sweep_steps);
      delays.push_back(sw.final_delay);
      powers.push_back(sw.final_power);
      sweeps.push_back({{"pump", sp.label},
                        {"delays_ps", sw.delays_ps},
                        {"powers_mw", sw.powers_mw},
                        {"eta_kk", sw.eta_kk},
                        {"sigma", sw.sigma},
                        {"opt_delay_ps", sw.opt_delay},
                        {"opt_power_mw", sw.opt_power},
                        {"final_delay_ps", sw.final_delay},
                        {"final_power_mw", sw.final_power}});
    }
    const auto rep = eta_matrix(envs, signals, r.cfg.waveguide, delays, powers, m.final_steps, a.pumps);
    for (std::size_t k = 0; k < rep.eta.size(); ++k)
      for (std::size_t j = 0; j < rep.eta[k].size(); ++j) lookup[{a.pumps[k], a.signals[j]}] = rep.eta[k][j];
    io::write_eta_csv(r.file("eta_" + a.name + ".csv"), rep);
    json doc = io::report_to_json(rep);
    doc["name"] = a.name;
    doc["sweeps"] = sweeps;
    alphabets.push_back(doc);
    panels.push_back({"Alphabet " + a.name, a.pumps, a.signals, rep.eta});
    std::cout << "alphabet " << a.name << ":\n";
    for (std::size_t k = 0; k < rep.eta.size(); ++k) {
      std::cout << "  " << a.pumps[k];
      for (double v : rep.eta[k]) std::cout << " " << v;
      if (k < rep.separabilities.size()) std::cout << "  sigma " << rep.separabilities[k];
      std::cout << "\n";
    }
  }
  json report = {{"alphabets", alphabets}};
  auto basis = [&](const config::QkdBasis& b, Matrix2& out) {
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        const auto it = lookup.find({b.pumps[i], b.signals[j]});
        if (it == lookup.end()) return false;
        out[i][j] = it->second;
      }
    return true;
  };
  Matrix2 key{}, check{};
  if (basis(m.key, key) && basis(m.check, check)) {
    const auto q = qkd_figures(key, check);
    report["qkd"] = {{"sigma2_key", q.sigma2_key}, {"sigma2_check", q.sigma2_check}, {"eta_ov", q.eta_ov}, {"qber", q.qber}};
    std::cout << "qkd: eta_ov " << q.eta_ov << " qber " << q.qber << "\n";
  }
  io::write_json(r.file("report.json"), report);
  io::write_text(r.file("heatmap.svg"), svg::heatmap(panels));
  r.manifest();
  return 0;
}

int cmd_spsa(Run& r) {
  const auto& c = r.cfg.spsa;
  const auto all = build_modes(r.cfg);
  const auto stored = load_pumps(c.pumps_file);
  const auto& sp = find_pump(stored, c.pump);
  const auto signal = select_modes(all, {c.signal})[0];
  std::mt19937_64 rng(r.cfg.seed ^ 0x243f6a8885a308d3ULL);
  std::normal_distribution<double> n(0.0, c.phase_perturbation_rad);
  CombSpec perturbed = sp.comb;
  for (auto& l : perturbed.lines) l.phase = wrap_phase(l.phase + n(rng));
  auto fo = c.feedback;
  fo.power_mw = sp.power_mw;
  const auto fb = pump_phase_feedback(perturbed, signal, r.cfg.waveguide, c.spsa, c.meter_noise, fo);
  const auto g = TimeFrequencyGrid::make(fo.design_samples, signal.grid().window() / fo.design_samples,
                                         signal.grid().f_center);
  const double baseline = comb_efficiency(sp.comb, resample(signal, g, 1e-10), r.cfg.waveguide, fo.power_mw, fo.n_steps);

  // Separability of the pump against its alphabet before and after feedback.
  const auto alphabet = select_modes(all, c.alphabet);
  const auto& l = alphabet.labels;
  const auto it = std::find(l.begin(), l.end(), sp.target);
  json sigma = nullptr;
  if (it != l.end()) {
    const auto k = static_cast<std::size_t>(it - l.begin());
    auto row_of = [&](const CombSpec& comb) {
      return detail::eta_row(detail::comb_pump(comb, alphabet[0].grid(), sp.power_mw), alphabet.modes,
                             r.cfg.waveguide, r.cfg.design.options.final_steps);
    };
    const auto before = row_of(perturbed), after = row_of(fb.pump);
    sigma = {{"before", separability(before, k)}, {"after", separability(after, k)}, {"eta_before", before},
             {"eta_after", after}};
  }

  io::write_spsa_trace_csv(r.file("trace.csv"), fb.spsa);
  std::vector<double> iters;
  for (std::size_t k = 0; k < fb.spsa.trace.size(); ++k) iters.push_back(static_cast<double>(k + 1));
  auto norm = [&](std::vector<double> v) {
    for (auto& x : v) x /= baseline;
    return v;
  };
  io::write_text(r.file("trace.svg"),
                 svg::line_plot("SPSA " + sp.label + " on " + c.signal, "iteration", "SF power / unperturbed",
                                {{"reading", iters, norm(fb.spsa.trace)}, {"best so far", iters, norm(fb.spsa.best_trace)}}));
  json summary = {{"pump", sp.label},
                  {"signal", c.signal},
                  {"direction", c.spsa.direction == Direction::Maximize ? "maximize" : "minimize"},
                  {"eta_unperturbed", baseline},
                  {"eta_start", fb.eta_start},
                  {"eta_final", fb.eta_final},
                  {"recovery", fb.eta_final / baseline},
                  {"improvement", fb.eta_final / fb.eta_start - 1.0},
                  {"plateau_iteration", fb.spsa.plateau_iteration},
                  {"evaluations", fb.spsa.evaluations},
                  {"aborted", fb.spsa.aborted},
                  {"sigma", sigma},
                  {"pump_comb", io::comb_to_json(fb.pump)}};
  io::write_json(r.file("summary.json"), summary);
  r.manifest();
  std::cout << "spsa: eta " << fb.eta_start << " -> " << fb.eta_final << " (" << fb.eta_final / baseline
            << " of unperturbed), plateau at iteration " << fb.spsa.plateau_iteration << "\n";
  if (fb.spsa.aborted) {
    std::cerr << "spsa aborted: " << fb.spsa.abort_reason << "\n";
    return 4;
  }
  return 0;
}

int cmd_counts(Run& r) {
  auto c = r.cfg.counts;
  ConversionReport rep;
  if (!c.report_file.empty()) {
    const auto j = io::read_json(c.report_file);
    rep = io::report_from_json(j.contains("alphabets") ? j.at("alphabets").at(0) : j);
  } else {
    rep.pump_labels = c.pumps;
    rep.signal_labels = c.signals;
    rep.eta = c.eta;
    require(rep.eta.size() == rep.pump_labels.size(), ErrorKind::Config, "counts.eta needs one row per pump");
    for (const auto& row : rep.eta)
      require(row.size() == rep.signal_labels.size(), ErrorKind::Config, "counts.eta needs one column per signal");
    rep.update_figures();
  }
  const auto records = simulate_count_matrix(rep.eta, c.counting);
  const auto corrected = noise_corrected_sigma(records);

  auto reduced_eta = rep.eta;
  for (auto& row : reduced_eta)
    for (auto& v : row) v *= c.reduced_signal_factor;
  auto reduced_cfg = c.counting;
  reduced_cfg.pump_power_mw *= c.reduced_noise_factor;
  const auto reduced = noise_corrected_sigma(simulate_count_matrix(reduced_eta, reduced_cfg));

  io::write_counts_csv(r.file("counts.csv"), rep.pump_labels, rep.signal_labels, records);
  double snr = std::numeric_limits<double>::infinity();
  json rows = json::array();
  std::vector<std::string> warnings;
  for (std::size_t k = 0; k < corrected.size(); ++k) {
    const auto& d = records[k][k];
    const double s = static_cast<double>(d.signal_counts) - static_cast<double>(d.noise_counts);
    snr = std::min(snr, d.noise_counts > 0 ? s / static_cast<double>(d.noise_counts) : std::numeric_limits<double>::infinity());
    rows.push_back({{"pump", rep.pump_labels[k]},
                    {"sigma_classical", rep.separabilities[k]},
                    {"sigma_counting", corrected[k].sigma},
                    {"std_error", corrected[k].std_error},
                    {"sigma_reduced_power", reduced[k].sigma}});
    for (const auto& w : corrected[k].warnings) warnings.push_back(w);
  }
  json summary = {{"snr_min", std::isfinite(snr) ? json(snr) : json(nullptr)},
                  {"signal_rate_max_cps", c.counting.signal_rate(1.0)},
                  {"noise_rate_cps", c.counting.noise_count_rate()},
                  {"rows", rows},
                  {"warnings", warnings}};
  io::write_json(r.file("summary.json"), summary);
  r.manifest();
  std::cout << "counts: SNR " << snr << "\n";
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  for (std::size_t k = 0; k < corrected.size(); ++k)
    std::cout << "  " << rep.pump_labels[k] << " sigma " << corrected[k].sigma << " +- " << corrected[k].std_error
              << " (classical " << rep.separabilities[k] << ")\n";
  return 0;
}

int cmd_align(Run& r) {
  const auto& a = r.cfg.align;
  const auto all = build_modes(r.cfg);
  auto set = select_modes(all, a.modes);
  const auto ref = select_modes(all, {a.reference})[0];
  for (std::size_t j = 0; j < set.size(); ++j) {
    const auto it = a.shifts.find(set.labels[j]);
    if (it != a.shifts.end()) set.modes[j] = apply_delay(set.modes[j], it->second);
    if (a.imperfection.amplitude_rel > 0.0 || a.imperfection.phase_rad > 0.0) {
      auto imp = a.imperfection;
      imp.seed = task_seed(imp.seed, j, 0);
      set.modes[j] = apply_imperfection(set.modes[j], imp);
    }
  }
  const auto taus = default_tau_grid(a.tau_half_span_ps, a.tau_step_ps);
  const auto al = align_set(set, ref, taus, a.similar_threshold);
  json out = json::array();
  for (std::size_t j = 0; j < set.size(); ++j) {
    const auto aligned = apply_delay(set.modes[j], -al.shifts[j]);
    const auto it = a.shifts.find(set.labels[j]);
    out.push_back({{"mode", set.labels[j]},
                   {"injected_shift_ps", it != a.shifts.end() ? it->second : 0.0},
                   {"recovered_shift_ps", al.shifts[j]},
                   {"used_maximum", static_cast<bool>(al.used_maximum[j])},
                   {"visibility_after", visibility(ref, aligned, 0.0)}});
    std::cout << set.labels[j] << ": recovered shift " << al.shifts[j] << " ps\n";
  }
  io::write_scan_csv(r.file("scans.csv"), taus, set.labels, al.scans);
  std::vector<svg::Series> series;
  for (std::size_t j = 0; j < set.size(); ++j) series.push_back({set.labels[j], taus, al.scans[j]});
  io::write_text(r.file("scans.svg"), svg::line_plot("Visibility against " + a.reference, "delay (ps)", "V", series));
  io::write_json(r.file("alignment.json"), {{"reference", a.reference}, {"modes", out}});
  r.manifest();
  return 0;
}

int cmd_chirp(Run& r) {
  const auto& c = r.cfg.chirp;
  const auto comb = generate_chirped_comb(c.center_wavelength_nm, c.n_lines, c.spacing_ghz, c.coefficients);
  const auto fix = chirp_correct(comb, c.reference_pair, c.remove_ramp);
  const double before = nonlinear_phase_residual(comb), after = nonlinear_phase_residual(fix.corrected);
  std::vector<double> m;
  for (std::size_t i = 0; i < comb.size(); ++i) m.push_back(comb.offset(i));
  io::write_text(r.file("phases.svg"), svg::line_plot("Comb line phases", "line index", "phase (rad)",
                                                      {{"chirped", m, comb.phases()}, {"corrected", m, fix.corrected.phases()}}));
  io::write_json(r.file("chirp.json"), {{"input", io::comb_to_json(comb)},
                                        {"corrections", fix.corrections},
                                        {"corrected", io::comb_to_json(fix.corrected)},
                                        {"reference_delay_ps", fix.reference_delay_ps},
                                        {"residual_before_rad", before},
                                        {"residual_after_rad", after}});
  r.manifest();
  std::cout << "chirp: residual " << before << " -> " << after << " rad\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal-mode frequency conversion pipelines"};
  app.require_subcommand(1);
  std::string config_path, out_override;
  const std::map<std::string, std::string> help = {
      {"modes", "Schmidt modes of the SPDC source"},   {"design", "design selective comb pumps"},
      {"matrix", "delay/power sweeps and eta matrices"}, {"spsa", "SPSA pump-phase feedback"},
      {"counts", "photon-counting emulation"},         {"align", "interferometric delay alignment"},
      {"chirp", "comb chirp correction"}};
  for (const auto& [name, text] : help) {
    auto* sub = app.add_subcommand(name, text);
    sub->add_option("-c,--config", config_path, "YAML configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output-dir", out_override, "override output_dir");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    Run r{config::load(config_path), cmd, {}, {}};
    r.out = out_override.empty() ? fs::path(r.cfg.output_dir) : fs::path(out_override);
    fs::create_directories(r.out);
    if (cmd == "modes") return cmd_modes(r);
    if (cmd == "design") return cmd_design(r);
    if (cmd == "matrix") return cmd_matrix(r);
    if (cmd == "spsa") return cmd_spsa(r);
    if (cmd == "counts") return cmd_counts(r);
    if (cmd == "align") return cmd_align(r);
    return cmd_chirp(r);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
