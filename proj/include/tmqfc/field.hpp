#pragma once

// Sampling lattice and complex envelopes shared by every simulation stage.
//
// Conventions (used everywhere in the library):
//   * time samples are centred: sample i sits at t_i = (i - n/2) * dt
//   * spectra are stored in FFT order: bin k sits at f_k = k*df for k < n/2,
//     (k - n)*df otherwise
//   * forward transform  X(f) = sum_i x(t_i) exp(-i 2 pi f t_i) dt
//     inverse transform  x(t) = sum_k X(f_k) exp(+i 2 pi f_k t) df
//   * a delay by tau is the spectral phase exp(-i 2 pi f tau)

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "tmqfc/error.hpp"
#include "tmqfc/fft.hpp"

namespace tmqfc {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Speed of light in nm*THz.
inline constexpr double kSpeedOfLight = 299792.458;
/// Planck constant in J*s.
inline constexpr double kPlanck = 6.62607015e-34;

inline double wavelength_to_thz(double wavelength_nm) { return kSpeedOfLight / wavelength_nm; }
inline double thz_to_wavelength(double f_thz) { return kSpeedOfLight / f_thz; }
/// Bandwidth in THz of a spectral window of `width_nm` centred at `center_nm`.
inline double nm_to_thz_width(double width_nm, double center_nm) {
  return kSpeedOfLight * width_nm / (center_nm * center_nm);
}
inline double thz_to_nm_width(double width_thz, double center_nm) {
  return width_thz * center_nm * center_nm / kSpeedOfLight;
}
/// Sum-frequency wavelength of two carriers.
inline double sum_frequency_wavelength(double nm_a, double nm_b) {
  return 1.0 / (1.0 / nm_a + 1.0 / nm_b);
}

inline double wrap_phase(double phi) {
  double w = std::remainder(phi, kTwoPi);  // [-pi, pi]
  if (w <= -kPi) w += kTwoPi;
  return w;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

struct TimeFrequencyGrid {
  std::size_t n_samples = 4096;
  double dt = 200.0 / 4096.0;  // ps
  double f_center = 0.0;       // THz, absolute reference of the zero offset

  static TimeFrequencyGrid make(std::size_t n, double dt_ps, double f_center_thz = 0.0) {
    require(is_power_of_two(n), ErrorKind::Domain, "grid size must be a power of two");
    require(dt_ps > 0.0 && std::isfinite(dt_ps), ErrorKind::Domain, "grid step must be positive");
    return {n, dt_ps, f_center_thz};
  }

  /// 4096 samples over a 200 ps window (df = 5 GHz).
  static TimeFrequencyGrid standard(double f_center_thz = 0.0) {
    return make(4096, 200.0 / 4096.0, f_center_thz);
  }

  double window() const { return static_cast<double>(n_samples) * dt; }
  double df() const { return 1.0 / window(); }
  double time(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(n_samples / 2)) * dt;
  }
  double freq(std::size_t k) const {
    const auto n = static_cast<std::ptrdiff_t>(n_samples);
    auto kk = static_cast<std::ptrdiff_t>(k);
    if (kk >= n / 2) kk -= n;
    return static_cast<double>(kk) * df();
  }
  /// Signed offset index of bin k (FFT order).
  std::ptrdiff_t signed_bin(std::size_t k) const {
    const auto n = static_cast<std::ptrdiff_t>(n_samples);
    auto kk = static_cast<std::ptrdiff_t>(k);
    return kk >= n / 2 ? kk - n : kk;
  }
  /// FFT-order storage index of a signed offset bin.
  std::size_t bin_index(std::ptrdiff_t signed_k) const {
    const auto n = static_cast<std::ptrdiff_t>(n_samples);
    return static_cast<std::size_t>(((signed_k % n) + n) % n);
  }
  double nyquist() const { return 0.5 / dt; }

  /// Same sampling lattice (carrier may differ).
  bool compatible(const TimeFrequencyGrid& o) const {
    return n_samples == o.n_samples && std::abs(dt - o.dt) <= 1e-15 * dt;
  }
  TimeFrequencyGrid with_center(double f_center_thz) const {
    return {n_samples, dt, f_center_thz};
  }
};

enum class EnvelopeUnits {
  SqrtWatt,        // |A|^2 is optical power in W
  SqrtPhotonRate,  // |A|^2 is photon flux in photons/ps
};

class ComplexEnvelope {
 public:
  ComplexEnvelope() = default;

  ComplexEnvelope(TimeFrequencyGrid grid, std::vector<cplx> samples, double wavelength_nm,
                  EnvelopeUnits units = EnvelopeUnits::SqrtPhotonRate)
      : grid_(grid), samples_(std::move(samples)), wavelength_nm_(wavelength_nm), units_(units) {
    require(samples_.size() == grid_.n_samples, ErrorKind::Domain,
            "envelope sample count does not match grid");
    require(wavelength_nm_ > 0.0, ErrorKind::Domain, "carrier wavelength must be positive");
  }

  static ComplexEnvelope zeros(const TimeFrequencyGrid& grid, double wavelength_nm,
                               EnvelopeUnits units = EnvelopeUnits::SqrtPhotonRate) {
    return {grid, std::vector<cplx>(grid.n_samples), wavelength_nm, units};
  }

  static ComplexEnvelope from_function(const TimeFrequencyGrid& grid, double wavelength_nm,
                                       const std::function<cplx(double)>& f,
                                       EnvelopeUnits units = EnvelopeUnits::SqrtPhotonRate) {
    std::vector<cplx> s(grid.n_samples);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = f(grid.time(i));
    return {grid, std::move(s), wavelength_nm, units};
  }

  /// Inverse of spectrum(): builds the time-domain envelope from FFT-ordered spectral samples.
  static ComplexEnvelope from_spectrum(const TimeFrequencyGrid& grid, std::vector<cplx> spec,
                                       double wavelength_nm,
                                       EnvelopeUnits units = EnvelopeUnits::SqrtPhotonRate) {
    require(spec.size() == grid.n_samples, ErrorKind::Domain, "spectrum size does not match grid");
    for (std::size_t k = 1; k < spec.size(); k += 2) spec[k] = -spec[k];
    fft::inverse_inplace(spec);
    const double df = grid.df();
    for (auto& v : spec) v *= df;
    return {grid, std::move(spec), wavelength_nm, units};
  }

  const TimeFrequencyGrid& grid() const { return grid_; }
  std::span<const cplx> samples() const { return samples_; }
  const std::vector<cplx>& data() const { return samples_; }
  cplx operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  double wavelength_nm() const { return wavelength_nm_; }
  EnvelopeUnits units() const { return units_; }

  /// FFT-ordered spectrum, scaled so that sum |X|^2 df equals norm2().
  std::vector<cplx> spectrum() const {
    std::vector<cplx> out(samples_.size());
    fft::forward(samples_, out);
    const double dt = grid_.dt;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= (k % 2 ? -dt : dt);
    return out;
  }

  /// Energy-like norm: sum |a|^2 dt.
  double norm2() const {
    double s = 0.0;
    for (const auto& v : samples_) s += std::norm(v);
    return s * grid_.dt;
  }
  double norm() const { return std::sqrt(norm2()); }

  /// Mean of |a|^2 over the window (average power for periodic pulse trains).
  double average_power() const { return norm2() / grid_.window(); }

  ComplexEnvelope scaled(cplx factor) const {
    auto s = samples_;
    for (auto& v : s) v *= factor;
    return {grid_, std::move(s), wavelength_nm_, units_};
  }

  /// Unit-norm copy. Throws for a vacuum envelope.
  ComplexEnvelope normalized() const {
    const double n = norm();
    require(n > 0.0 && std::isfinite(n), ErrorKind::Domain, "cannot normalize a zero envelope");
    return scaled(1.0 / n);
  }

  ComplexEnvelope with_wavelength(double wavelength_nm) const {
    return {grid_, samples_, wavelength_nm, units_};
  }
  ComplexEnvelope with_units(EnvelopeUnits u) const { return {grid_, samples_, wavelength_nm_, u}; }

  bool is_finite() const {
    return std::all_of(samples_.begin(), samples_.end(),
                       [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
  }

 private:
  TimeFrequencyGrid grid_{};
  std::vector<cplx> samples_;
  double wavelength_nm_ = 1550.0;
  EnvelopeUnits units_ = EnvelopeUnits::SqrtPhotonRate;
};

inline void require_same_grid(const ComplexEnvelope& a, const ComplexEnvelope& b) {
  require(a.grid().compatible(b.grid()), ErrorKind::GridMismatch,
          "envelopes live on different sampling grids");
}

/// <a, b> = sum conj(a) b dt.
inline cplx inner_product(const ComplexEnvelope& a, const ComplexEnvelope& b) {
  require_same_grid(a, b);
  cplx s = 0.0;
  const auto sa = a.samples();
  const auto sb = b.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) s += std::conj(sa[i]) * sb[i];
  return s * a.grid().dt;
}

inline ComplexEnvelope operator+(const ComplexEnvelope& a, const ComplexEnvelope& b) {
  require_same_grid(a, b);
  auto s = a.data();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += b[i];
  return {a.grid(), std::move(s), a.wavelength_nm(), a.units()};
}

inline ComplexEnvelope operator-(const ComplexEnvelope& a, const ComplexEnvelope& b) {
  return a + b.scaled(-1.0);
}

/// Multiplies the spectrum by exp(i phase(f)), f the offset frequency in THz.
inline ComplexEnvelope apply_spectral_phase(const ComplexEnvelope& e,
                                            const std::function<double(double)>& phase) {
  auto spec = e.spectrum();
  const auto& g = e.grid();
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= std::polar(1.0, phase(g.freq(k)));
  return ComplexEnvelope::from_spectrum(g, std::move(spec), e.wavelength_nm(), e.units());
}

/// Shifts the envelope later in time by tau (ps) through a linear spectral phase.
inline ComplexEnvelope apply_delay(const ComplexEnvelope& e, double tau) {
  require(std::abs(tau) < e.grid().window() / 4.0, ErrorKind::Domain,
          "delay exceeds a quarter of the window (circular wrap-around)");
  if (tau == 0.0) return e;
  return apply_spectral_phase(e, [tau](double f) { return -kTwoPi * f * tau; });
}

/// Location of the intensity maximum, refined by a parabola through the three top samples.
inline double peak_time(const ComplexEnvelope& e) {
  const auto s = e.samples();
  const std::size_t n = s.size();
  std::size_t imax = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::norm(s[i]) > std::norm(s[imax])) imax = i;
  const double ym = std::norm(s[(imax + n - 1) % n]);
  const double y0 = std::norm(s[imax]);
  const double yp = std::norm(s[(imax + 1) % n]);
  const double denom = ym - 2.0 * y0 + yp;
  const double offset = denom != 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
  return e.grid().time(imax) + offset * e.grid().dt;
}

/// Intensity-weighted mean time.
inline double centroid(const ComplexEnvelope& e) {
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double w = std::norm(e[i]);
    m0 += w;
    m1 += w * e.grid().time(i);
  }
  return m1 / m0;
}

/// RMS duration of |a(t)|^2 about its centroid.
inline double rms_width(const ComplexEnvelope& e) {
  const double c = centroid(e);
  double m0 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double w = std::norm(e[i]);
    const double d = e.grid().time(i) - c;
    m0 += w;
    m2 += w * d * d;
  }
  return std::sqrt(m2 / m0);
}

/// Zeroes all samples outside [t0 - half_width, t0 + half_width).
inline ComplexEnvelope gate(const ComplexEnvelope& e, double t0, double half_width) {
  auto s = e.data();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = e.grid().time(i) - t0;
    if (t < -half_width || t >= half_width) s[i] = 0.0;
  }
  return {e.grid(), std::move(s), e.wavelength_nm(), e.units()};
}

/// Moves an envelope onto another lattice spanning the same time window by truncating
/// or zero-padding its spectrum. Fails if more than `max_loss` of the energy is discarded.
inline ComplexEnvelope resample(const ComplexEnvelope& e, const TimeFrequencyGrid& target,
                                double max_loss = 1e-12) {
  const auto& g = e.grid();
  require(std::abs(g.window() - target.window()) <= 1e-12 * g.window(), ErrorKind::GridMismatch,
          "resampling requires identical time windows");
  if (g.compatible(target)) return {target, e.data(), e.wavelength_nm(), e.units()};
  const auto spec = e.spectrum();
  std::vector<cplx> out(target.n_samples);
  double kept = 0.0, total = 0.0;
  const auto half = static_cast<std::ptrdiff_t>(target.n_samples / 2);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    total += std::norm(spec[k]);
    const auto sk = g.signed_bin(k);
    if (sk >= -half && sk < half) {
      out[target.bin_index(sk)] = spec[k];
      kept += std::norm(spec[k]);
    }
  }
  require(total == 0.0 || (total - kept) <= max_loss * total, ErrorKind::Domain,
          "resampling would discard spectral content");
  return ComplexEnvelope::from_spectrum(target.with_center(g.f_center), std::move(out),
                                        e.wavelength_nm(), e.units());
}

/// Photon energy at the carrier in J.
inline double photon_energy(double wavelength_nm) {
  return kPlanck * wavelength_to_thz(wavelength_nm) * 1e12;
}

/// Converts between power-like and photon-flux-like amplitudes. The only place a unit
/// conversion happens: |A|^2 [W] = |A|^2 [photons/ps] * h nu * 1e12.
inline ComplexEnvelope convert_units(const ComplexEnvelope& e, EnvelopeUnits target) {
  if (e.units() == target) return e;
  const double watt_per_rate = photon_energy(e.wavelength_nm()) * 1e12;
  const double factor = target == EnvelopeUnits::SqrtWatt ? std::sqrt(watt_per_rate)
                                                          : 1.0 / std::sqrt(watt_per_rate);
  return e.scaled(factor).with_units(target);
}

}  // namespace tmqfc
