#pragma once

// Frequency-comb line representation, waveshaper masks and the pairwise-beat
// chirp measurement.
//
// A comb line m (m = -K/2..K/2) contributes a_m exp(i phi_m) exp(i 2 pi m spacing t) to the
// field; the train repeats every 1/spacing.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "tmqfc/error.hpp"
#include "tmqfc/field.hpp"

namespace tmqfc {

struct CombLine {
  double amplitude = 1.0;  // nonnegative
  double phase = 0.0;      // radians in (-pi, pi]
};

struct CombSpec {
  double center_wavelength_nm = 1556.6;
  double spacing_ghz = 20.0;
  std::vector<CombLine> lines;

  std::size_t size() const { return lines.size(); }
  /// Signed line number of storage index i.
  int offset(std::size_t i) const { return static_cast<int>(i) - static_cast<int>(lines.size() / 2); }
  double period_ps() const { return 1000.0 / spacing_ghz; }
  double spacing_thz() const { return spacing_ghz * 1e-3; }
  double center_thz() const { return wavelength_to_thz(center_wavelength_nm); }
  double line_thz(std::size_t i) const { return center_thz() + offset(i) * spacing_thz(); }

  void validate() const {
    require(lines.size() % 2 == 1, ErrorKind::Domain, "comb must have an odd number of lines");
    require(spacing_ghz > 0.0 && center_wavelength_nm > 0.0, ErrorKind::Domain,
            "comb spacing and wavelength must be positive");
    for (const auto& l : lines)
      require(l.amplitude >= 0.0 && std::isfinite(l.amplitude) && std::isfinite(l.phase), ErrorKind::Domain,
              "comb amplitudes must be finite and nonnegative");
  }

  /// Complex line value a_m exp(i phi_m).
  cplx line(std::size_t i) const { return std::polar(lines[i].amplitude, lines[i].phase); }

  cplx field_at(double t_ps) const {
    cplx s = 0.0;
    for (std::size_t i = 0; i < lines.size(); ++i)
      s += line(i) * std::polar(1.0, kTwoPi * offset(i) * spacing_thz() * t_ps);
    return s;
  }

  /// Mean power of the periodic train, sum of a_m^2.
  double average_power() const {
    double p = 0.0;
    for (const auto& l : lines) p += l.amplitude * l.amplitude;
    return p;
  }

  /// Grid bins per comb spacing. The grid window must hold an integer number of periods.
  std::size_t bin_step(const TimeFrequencyGrid& g) const {
    const double r = spacing_thz() / g.df();
    const double step = std::round(r);
    require(step >= 1.0 && std::abs(r - step) <= 1e-9 * r, ErrorKind::GridMismatch,
            "grid window is not a whole number of comb periods");
    require(step * static_cast<double>(lines.size() / 2) < static_cast<double>(g.n_samples / 2),
            ErrorKind::GridMismatch, "comb is wider than the grid bandwidth");
    return static_cast<std::size_t>(step);
  }

  /// Periodic pulse train sampled on the grid.
  ComplexEnvelope to_envelope(const TimeFrequencyGrid& g,
                              EnvelopeUnits units = EnvelopeUnits::SqrtWatt) const {
    validate();
    const auto step = static_cast<std::ptrdiff_t>(bin_step(g));
    std::vector<cplx> spec(g.n_samples);
    const double window = g.window();
    for (std::size_t i = 0; i < lines.size(); ++i) spec[g.bin_index(offset(i) * step)] = line(i) * window;
    return ComplexEnvelope::from_spectrum(g, std::move(spec), center_wavelength_nm, units);
  }

  std::vector<double> phases() const {
    std::vector<double> p;
    for (const auto& l : lines) p.push_back(l.phase);
    return p;
  }
  std::vector<double> amplitudes() const {
    std::vector<double> a;
    for (const auto& l : lines) a.push_back(l.amplitude);
    return a;
  }
};

/// Comb whose line m carries phase sum_p chirp_coeffs[p] m^(p+2); flat amplitudes unless given.
inline CombSpec generate_chirped_comb(double center_nm, std::size_t n_lines, double spacing_ghz,
                                      const std::vector<double>& chirp_coeffs,
                                      const std::vector<double>& amplitudes = {}) {
  require(n_lines % 2 == 1, ErrorKind::Domain, "comb must have an odd number of lines");
  require(amplitudes.empty() || amplitudes.size() == n_lines, ErrorKind::Domain,
          "amplitude envelope length does not match the line count");
  CombSpec c{center_nm, spacing_ghz, std::vector<CombLine>(n_lines)};
  for (std::size_t i = 0; i < n_lines; ++i) {
    const double m = c.offset(i);
    double phi = 0.0;
    for (std::size_t p = 0; p < chirp_coeffs.size(); ++p) phi += chirp_coeffs[p] * std::pow(m, double(p + 2));
    c.lines[i] = {amplitudes.empty() ? 1.0 : amplitudes[i], wrap_phase(phi)};
  }
  c.validate();
  return c;
}

/// Adds per-line phases (radians), as a waveshaper would.
inline CombSpec apply_phases(const CombSpec& comb, const std::vector<double>& phases) {
  require(phases.size() == comb.size(), ErrorKind::Domain, "one phase per comb line required");
  CombSpec out = comb;
  for (std::size_t i = 0; i < out.size(); ++i) out.lines[i].phase = wrap_phase(out.lines[i].phase + phases[i]);
  return out;
}

/// Beat-signal shift of lines i and j, (phi_j - phi_i) / (2 pi spacing (j - i)), measured
/// by sampling the two-line intensity over one beat period and reading the phase of its
/// fundamental. The result is relative to reference_delay_ps and wrapped into one beat
/// period, (-P/2, P/2].
inline double beat_delay(const CombSpec& comb, std::size_t i, std::size_t j, double reference_delay_ps = 0.0) {
  require(i != j, ErrorKind::Domain, "beat needs two distinct lines");
  require(i < comb.size() && j < comb.size(), ErrorKind::Domain, "beat line index outside the comb");
  const int dm = comb.offset(j) - comb.offset(i);
  const double beat_thz = dm * comb.spacing_thz();
  const double period = 1.0 / std::abs(beat_thz);
  constexpr int kSamples = 64;
  cplx fundamental = 0.0;
  for (int n = 0; n < kSamples; ++n) {
    const double t = period * n / kSamples;
    const cplx e = comb.line(i) * std::polar(1.0, kTwoPi * comb.offset(i) * comb.spacing_thz() * t) +
                   comb.line(j) * std::polar(1.0, kTwoPi * comb.offset(j) * comb.spacing_thz() * t);
    fundamental += std::norm(e) * std::polar(1.0, -kTwoPi * n / kSamples * (beat_thz > 0 ? 1.0 : -1.0));
  }
  require(std::abs(fundamental) > 0.0, ErrorKind::Domain, "beat has no modulation (zero-amplitude line)");
  const double shift = std::arg(fundamental) / (kTwoPi * beat_thz);
  double rel = std::remainder(shift - reference_delay_ps, period);
  if (rel <= -period / 2.0) rel += period;
  return rel;
}

struct ChirpCorrection {
  std::vector<double> corrections;  // per-line phases the waveshaper applies
  CombSpec corrected;
  /// Beat shift of the reference pair, i.e. the linear phase ramp left in the corrected comb.
  double reference_delay_ps = 0.0;
};

/// Pairwise-beat correction: every adjacent pair is brought to the reference pair's beat
/// delay, working outward from the reference. With remove_ramp the remaining linear ramp is
/// also cancelled, leaving a flat phase profile.
inline ChirpCorrection chirp_correct(const CombSpec& comb, std::size_t reference_pair = 0,
                                     bool remove_ramp = false) {
  comb.validate();
  require(comb.size() >= 2, ErrorKind::Domain, "chirp correction needs at least two lines");
  require(reference_pair + 1 < comb.size(), ErrorKind::Domain, "reference pair outside the comb");
  const double w = kTwoPi * comb.spacing_thz();
  ChirpCorrection out;
  out.reference_delay_ps = beat_delay(comb, reference_pair, reference_pair + 1, 0.0);
  std::vector<double> corr(comb.size(), 0.0);
  for (std::size_t i = reference_pair + 1; i + 1 < comb.size(); ++i)
    corr[i + 1] = corr[i] - w * beat_delay(comb, i, i + 1, out.reference_delay_ps);
  for (std::size_t i = reference_pair; i-- > 0;)
    corr[i] = corr[i + 1] + w * beat_delay(comb, i, i + 1, out.reference_delay_ps);
  if (remove_ramp) {
    const int m0 = comb.offset(reference_pair);
    for (std::size_t i = 0; i < comb.size(); ++i)
      corr[i] -= w * out.reference_delay_ps * (comb.offset(i) - m0);
  }
  for (auto& c : corr) c = wrap_phase(c);
  out.corrections = corr;
  out.corrected = apply_phases(comb, corr);
  return out;
}

/// Spectral attenuation and phase on a uniform frequency lattice.
/// Largest deviation of the line phases from their least-squares linear ramp, after
/// unwrapping along the comb. Zero for a transform-limited (possibly delayed) comb.
inline double nonlinear_phase_residual(const CombSpec& comb) {
  require(comb.size() >= 2, ErrorKind::Domain, "residual needs at least two lines");
  std::vector<double> phi(comb.size());
  phi[0] = comb.lines[0].phase;
  for (std::size_t i = 1; i < phi.size(); ++i)
    phi[i] = phi[i - 1] + wrap_phase(comb.lines[i].phase - comb.lines[i - 1].phase);
  double sm = 0, sp = 0, smm = 0, smp = 0;
  const double n = static_cast<double>(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double m = comb.offset(i);
    sm += m, sp += phi[i], smm += m * m, smp += m * phi[i];
  }
  const double slope = (n * smp - sm * sp) / (n * smm - sm * sm);
  const double icpt = (sp - slope * sm) / n;
  double worst = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i)
    worst = std::max(worst, std::abs(wrap_phase(phi[i] - icpt - slope * comb.offset(i))));
  return worst;
}

struct WaveshaperMask {
  double start_thz = 191.250;
  double resolution_ghz = 1.0;
  std::vector<double> attenuation_db;
  std::vector<double> phase;

  /// C-band mask with every bin transparent.
  static WaveshaperMask c_band(double start_thz = 191.250, double stop_thz = 196.275, double resolution_ghz = 1.0) {
    require(stop_thz > start_thz && resolution_ghz > 0.0, ErrorKind::Domain, "invalid mask range");
    const auto n = static_cast<std::size_t>(std::llround((stop_thz - start_thz) * 1000.0 / resolution_ghz)) + 1;
    return {start_thz, resolution_ghz, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  }

  std::size_t size() const { return attenuation_db.size(); }
  double bin_thz(std::size_t b) const { return start_thz + static_cast<double>(b) * resolution_ghz * 1e-3; }

  /// Nearest bin to an absolute frequency; coverage error outside the mask.
  std::size_t bin_of(double f_thz) const {
    const double x = (f_thz - start_thz) * 1000.0 / resolution_ghz;
    const auto b = std::llround(x);
    require(b >= 0 && static_cast<std::size_t>(b) < size(), ErrorKind::Coverage,
            "comb line at " + std::to_string(f_thz) + " THz is outside the mask range");
    return static_cast<std::size_t>(b);
  }

  void validate() const {
    require(attenuation_db.size() == phase.size() && !phase.empty(), ErrorKind::Domain,
            "mask attenuation and phase tables differ in length");
    for (std::size_t b = 0; b < size(); ++b)
      require(attenuation_db[b] >= 0.0 && std::isfinite(phase[b]), ErrorKind::Domain,
              "mask attenuation must be >= 0 dB");
  }
};

/// Line-by-line shaping: amplitude x 10^(-att/20), phase + mask phase at the nearest bin.
inline CombSpec apply_mask(const CombSpec& comb, const WaveshaperMask& mask) {
  comb.validate();
  mask.validate();
  CombSpec out = comb;
  for (std::size_t i = 0; i < comb.size(); ++i) {
    const auto b = mask.bin_of(comb.line_thz(i));
    out.lines[i].amplitude *= std::pow(10.0, -mask.attenuation_db[b] / 20.0);
    out.lines[i].phase = wrap_phase(out.lines[i].phase + mask.phase[b]);
  }
  return out;
}

/// Bin-wise sum of two masks on the same lattice (dB and radians add).
inline WaveshaperMask compose(const WaveshaperMask& a, const WaveshaperMask& b) {
  require(a.size() == b.size() && a.start_thz == b.start_thz && a.resolution_ghz == b.resolution_ghz,
          ErrorKind::Domain, "masks live on different lattices");
  WaveshaperMask m = a;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.attenuation_db[i] += b.attenuation_db[i];
    m.phase[i] = wrap_phase(m.phase[i] + b.phase[i]);
  }
  return m;
}

/// Mask that turns `source` into `target` line by line (same line frequencies). The
/// strongest target/source ratio is mapped to 0 dB; zero lines get max_attenuation_db.
inline WaveshaperMask mask_for_target(const CombSpec& source, const CombSpec& target,
                                      WaveshaperMask base = WaveshaperMask::c_band(),
                                      double max_attenuation_db = 60.0) {
  require(source.size() == target.size() && source.spacing_ghz == target.spacing_ghz, ErrorKind::Domain,
          "source and target combs differ in layout");
  double best = 0.0;
  std::vector<double> ratio(source.size(), 0.0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source.lines[i].amplitude > 0.0) ratio[i] = target.lines[i].amplitude / source.lines[i].amplitude;
    best = std::max(best, ratio[i]);
  }
  require(best > 0.0, ErrorKind::Domain, "target comb is empty");
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto b = base.bin_of(source.line_thz(i));
    const double r = ratio[i] / best;
    base.attenuation_db[b] = r > 0.0 ? std::min(-20.0 * std::log10(r), max_attenuation_db) : max_attenuation_db;
    base.phase[b] = wrap_phase(target.lines[i].phase - source.lines[i].phase);
  }
  return base;
}

struct CombProjection {
  CombSpec comb;
  /// Fraction of the comb-bin spectral energy that lies outside the retained lines.
  double discarded_fraction = 0.0;
};

/// Projects an envelope onto comb lines. Line values are the window Fourier-series
/// coefficients X(m spacing)/T, so projecting a comb reconstruction returns the same comb.
inline CombProjection project_to_comb(const ComplexEnvelope& e, double spacing_ghz, std::size_t n_lines,
                                      double max_discarded = 0.10) {
  require(n_lines % 2 == 1, ErrorKind::Domain, "comb must have an odd number of lines");
  CombProjection out;
  out.comb.center_wavelength_nm = e.wavelength_nm();
  out.comb.spacing_ghz = spacing_ghz;
  out.comb.lines.resize(n_lines);
  const auto& g = e.grid();
  const auto step = static_cast<std::ptrdiff_t>(out.comb.bin_step(g));
  const auto spec = e.spectrum();
  double kept = 0.0, total = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k)
    if (g.signed_bin(k) % step == 0) total += std::norm(spec[k]);
  for (std::size_t i = 0; i < n_lines; ++i) {
    const cplx v = spec[g.bin_index(out.comb.offset(i) * step)];
    kept += std::norm(v);
    const cplx c = v / g.window();
    out.comb.lines[i] = {std::abs(c), std::abs(c) > 0.0 ? wrap_phase(std::arg(c)) : 0.0};
  }
  out.discarded_fraction = total > 0.0 ? std::max(0.0, 1.0 - kept / total) : 0.0;
  require(out.discarded_fraction <= max_discarded, ErrorKind::ProjectionLoss,
          "comb projection discards " + std::to_string(100.0 * out.discarded_fraction) + "% of the spectrum");
  return out;
}

/// One period of the comb train centred at t0, normalized.
inline ComplexEnvelope comb_pulse(const CombSpec& comb, const TimeFrequencyGrid& g, double t0 = 0.0,
                                  EnvelopeUnits units = EnvelopeUnits::SqrtPhotonRate) {
  return gate(comb.to_envelope(g, units), t0, comb.period_ps() / 2.0).normalized();
}

/// |<target|built>|^2 between a unit-norm mode and one period of the comb train.
inline double comb_fidelity(const CombSpec& comb, const ComplexEnvelope& target) {
  const auto built = comb_pulse(comb, target.grid(), 0.0, target.units());
  return std::norm(inner_product(target.normalized(), built));
}

}  // namespace tmqfc
