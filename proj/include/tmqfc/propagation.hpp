#pragma once

// Undepleted-pump sum-frequency generation in a chi(2) waveguide.
//
// Frame co-moving with the signal. Photon-flux normalized amplitudes obey
//   dA_s/dz = i D_s A_s + i kappa conj(A_p) A_f
//   dA_f/dz = i D_f A_f + i kappa A_p A_s
// where D_s, D_f are the linear (dispersion, walk-off, phase mismatch) operators.
// Integration is symmetric Strang splitting: half linear step in the frequency domain,
// exact 2x2 coupling rotation in the time domain with the pump taken at the step midpoint,
// half linear step.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tmqfc/error.hpp"
#include "tmqfc/fft.hpp"
#include "tmqfc/field.hpp"
#include "tmqfc/linalg.hpp"
#include "tmqfc/metrics.hpp"
#include "tmqfc/parallel.hpp"
#include "tmqfc/spdc.hpp"

namespace tmqfc {

/// kappa in 1/(mm sqrt(W)) from a small-signal SHG efficiency in %/W:
/// P_SH = eta_SHG P^2 with eta_SHG = (kappa L / 2)^2.
inline double kappa_from_shg(double shg_efficiency_pct_per_w, double length_mm) {
  require(shg_efficiency_pct_per_w > 0.0 && length_mm > 0.0, ErrorKind::Domain,
          "SHG efficiency and length must be positive");
  return 2.0 * std::sqrt(shg_efficiency_pct_per_w / 100.0) / length_mm;
}

struct WaveguideSpec {
  double length_mm = 52.0;
  double shg_efficiency = 1600.0;  // %/W
  /// Coupling in 1/(mm sqrt W). Zero means "derive from shg_efficiency".
  double kappa = 0.0821;
  /// Inverse group-velocity differences relative to the signal, ps/mm. Positive values
  /// mean the wave lags behind the signal.
  double gvm_pump = 0.0;
  double gvm_sf = 0.8;
  /// Group-velocity dispersion beta2 per wave, ps^2/mm.
  double gvd_signal = 1.0e-4;
  double gvd_pump = 1.0e-4;
  double gvd_sf = 3.5e-4;
  /// Phase mismatch at the carriers, 1/mm, plus an optional sinusoidal poling ripple
  /// delta_k(z) = delta_k0 + ripple_amplitude sin(2 pi z / ripple_period_mm).
  double delta_k0 = 0.0;
  double ripple_amplitude = 0.0;
  double ripple_period_mm = 5.0;
  double signal_wavelength_nm = 1532.1;
  double pump_wavelength_nm = 1556.6;

  double coupling() const {
    return kappa > 0.0 ? kappa : kappa_from_shg(shg_efficiency, length_mm);
  }
  double sf_wavelength_nm() const {
    return sum_frequency_wavelength(signal_wavelength_nm, pump_wavelength_nm);
  }

  void validate() const {
    require(length_mm > 0.0 && std::isfinite(length_mm), ErrorKind::Domain,
            "waveguide length must be positive");
    require(shg_efficiency > 0.0, ErrorKind::Domain, "SHG efficiency must be positive");
    require(kappa >= 0.0 && std::isfinite(kappa), ErrorKind::Domain, "kappa must be >= 0");
    require(ripple_period_mm > 0.0, ErrorKind::Domain, "ripple period must be positive");
    for (double v : {gvm_pump, gvm_sf, gvd_signal, gvd_pump, gvd_sf, delta_k0, ripple_amplitude})
      require(std::isfinite(v), ErrorKind::Domain, "waveguide parameters must be finite");
  }

  /// Integral of delta_k over [z0, z1].
  double integrated_mismatch(double z0, double z1) const {
    double phi = delta_k0 * (z1 - z0);
    if (ripple_amplitude != 0.0) {
      const double q = kTwoPi / ripple_period_mm;
      phi += ripple_amplitude / q * (std::cos(q * z0) - std::cos(q * z1));
    }
    return phi;
  }
};

struct SfgResult {
  ComplexEnvelope signal_out;
  ComplexEnvelope sf_out;
  /// Set when n_steps is below the documented accuracy floor of 100 steps.
  bool accuracy_warning = false;
};

/// Propagator bound to one pump and waveguide. The per-step coupling is computed once
/// and applied to any number of signals, which is how eta matrices are evaluated.
class SfgPropagator {
 public:
  static constexpr std::size_t kMinAccurateSteps = 100;

  SfgPropagator(const ComplexEnvelope& pump, const WaveguideSpec& wg, std::size_t n_steps)
      : wg_(wg), n_steps_(n_steps) {
    wg_.validate();
    require(n_steps >= 1, ErrorKind::Domain, "n_steps must be >= 1");
    require(pump.is_finite(), ErrorKind::Numeric, "pump contains non-finite samples");
    pump_ = convert_units(pump, EnvelopeUnits::SqrtWatt);
    grid_ = pump_.grid();
    const std::size_t n = grid_.n_samples;
    const double h = wg_.length_mm / static_cast<double>(n_steps_);
    const double inv_n = 1.0 / static_cast<double>(n);

    // Linear propagators in raw FFT order with the 1/n normalization folded in.
    sig_half_.assign(n, inv_n);
    sf_half_.resize(n);
    sf_full_.resize(n);
    pump_phase_rate_.resize(n);
    signal_dispersive_ = wg_.gvd_signal != 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = kTwoPi * grid_.freq(k);
      if (signal_dispersive_) sig_half_[k] = std::polar(inv_n, 0.5 * wg_.gvd_signal * w * w * h / 2.0);
      const double sf_rate = -w * wg_.gvm_sf + 0.5 * wg_.gvd_sf * w * w;
      sf_half_[k] = std::polar(inv_n, sf_rate * h / 2.0);
      sf_full_[k] = std::polar(inv_n, sf_rate * h);
      pump_phase_rate_[k] = -w * wg_.gvm_pump + 0.5 * wg_.gvd_pump * w * w;
    }
    pump_static_ = wg_.gvm_pump == 0.0 && wg_.gvd_pump == 0.0;
    pump_spec_.resize(n);
    fft::forward(pump_.samples(), pump_spec_);
  }

  std::size_t n_steps() const { return n_steps_; }
  const WaveguideSpec& waveguide() const { return wg_; }

  std::vector<SfgResult> run(std::span<const ComplexEnvelope> signals) const {
    const std::size_t n = grid_.n_samples;
    const double h = wg_.length_mm / static_cast<double>(n_steps_);
    const double kappa = wg_.coupling();
    const std::size_t m = signals.size();
    std::vector<std::vector<cplx>> as(m), af(m, std::vector<cplx>(n));
    for (std::size_t j = 0; j < m; ++j) {
      require(signals[j].grid().compatible(grid_), ErrorKind::GridMismatch,
              "signal and pump live on different sampling grids");
      require(signals[j].is_finite(), ErrorKind::Numeric, "signal contains non-finite samples");
      as[j] = signals[j].data();
    }

    std::vector<cplx> c(n), s_to_f(n), f_to_s(n), ap(n);
    auto coupling_at = [&](std::size_t step, double z) {
      if (pump_static_) {
        if (step > 0) return;  // a static pump couples identically on every step
        for (std::size_t k = 0; k < n; ++k) ap[k] = pump_spec_[k] / static_cast<double>(n);
      } else {
        for (std::size_t k = 0; k < n; ++k)
          ap[k] = pump_spec_[k] * std::polar(1.0 / static_cast<double>(n), pump_phase_rate_[k] * z);
      }
      fft::inverse_inplace(ap);
      for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::abs(ap[i]);
        const double g = kappa * mag * h;
        const cplx ph = mag > 0.0 ? ap[i] / mag : cplx(1.0);
        c[i] = std::cos(g);
        const cplx is = cplx(0.0, std::sin(g));
        s_to_f[i] = is * ph;
        f_to_s[i] = is * std::conj(ph);
      }
    };
    auto linear = [&](std::vector<cplx>& a, const std::vector<cplx>& phase, cplx scalar) {
      fft::forward_inplace(a);
      for (std::size_t k = 0; k < n; ++k) a[k] *= phase[k] * scalar;
      fft::inverse_inplace(a);
    };
    auto mismatch = [&](double z0, double z1) {
      return std::polar(1.0, -wg_.integrated_mismatch(z0, z1));
    };

    for (std::size_t s = 0; s < n_steps_; ++s) {
      const double z0 = static_cast<double>(s) * h;
      const double zm = z0 + 0.5 * h;
      coupling_at(s, zm);
      for (std::size_t j = 0; j < m; ++j) {
        auto& a = as[j];
        auto& f = af[j];
        if (s == 0) {
          if (signal_dispersive_) linear(a, sig_half_, 1.0);
          linear(f, sf_half_, mismatch(0.0, zm));
        }
        for (std::size_t i = 0; i < n; ++i) {
          const cplx na = c[i] * a[i] + f_to_s[i] * f[i];
          const cplx nf = c[i] * f[i] + s_to_f[i] * a[i];
          a[i] = na;
          f[i] = nf;
        }
        const bool last = s + 1 == n_steps_;
        const double z_next = last ? wg_.length_mm : zm + h;
        if (signal_dispersive_) {
          if (last) {
            linear(a, sig_half_, 1.0);
          } else {
            fft::forward_inplace(a);
            for (std::size_t k = 0; k < n; ++k) a[k] *= sig_half_[k] * sig_half_[k] * static_cast<double>(n);
            fft::inverse_inplace(a);
          }
        }
        linear(f, last ? sf_half_ : sf_full_, mismatch(zm, z_next));
      }
    }

    std::vector<SfgResult> out;
    out.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
      const auto& in = signals[j];
      const double lam_f = sum_frequency_wavelength(in.wavelength_nm(), pump_.wavelength_nm());
      // Power-normalized inputs: the SF photon carries lambda_s/lambda_f times more energy.
      if (in.units() == EnvelopeUnits::SqrtWatt) {
        const double scale = std::sqrt(in.wavelength_nm() / lam_f);
        for (auto& v : af[j]) v *= scale;
      }
      SfgResult r{ComplexEnvelope(grid_, std::move(as[j]), in.wavelength_nm(), in.units()),
                  ComplexEnvelope(grid_, std::move(af[j]), lam_f, in.units()),
                  n_steps_ < kMinAccurateSteps};
      require(r.signal_out.is_finite() && r.sf_out.is_finite(), ErrorKind::Numeric,
              "propagation produced non-finite fields");
      out.push_back(std::move(r));
    }
    return out;
  }

  SfgResult run(const ComplexEnvelope& signal) const {
    return std::move(run(std::span<const ComplexEnvelope>(&signal, 1)).front());
  }

 private:
  WaveguideSpec wg_;
  std::size_t n_steps_;
  ComplexEnvelope pump_;
  TimeFrequencyGrid grid_;
  bool signal_dispersive_ = false;
  bool pump_static_ = true;
  std::vector<cplx> sig_half_, sf_half_, sf_full_, pump_spec_;
  std::vector<double> pump_phase_rate_;
};

inline SfgResult propagate_sfg(const ComplexEnvelope& signal, const ComplexEnvelope& pump,
                               const WaveguideSpec& wg, std::size_t n_steps) {
  return SfgPropagator(pump, wg, n_steps).run(signal);
}

/// eta = rho_sum lambda_sum / (rho_sig lambda_sig), from average powers and wavelengths.
inline double efficiency_from_powers(double rho_sig, double rho_sum, double lambda_sig_nm,
                                     double lambda_sum_nm) {
  require(rho_sig > 0.0, ErrorKind::Domain, "efficiency undefined for zero signal power");
  return rho_sum * lambda_sum_nm / (rho_sig * lambda_sig_nm);
}

/// Photon-number conversion efficiency N_sf / N_sig.
inline double efficiency(const ComplexEnvelope& signal_in, const ComplexEnvelope& sf_out) {
  require_same_grid(signal_in, sf_out);
  require(signal_in.units() == sf_out.units(), ErrorKind::Domain,
          "signal and SF envelopes carry different units");
  const double n_sig = signal_in.norm2();
  require(n_sig > 0.0, ErrorKind::Domain, "efficiency undefined for a zero input signal");
  const double n_sf = sf_out.norm2();
  double eta = n_sf / n_sig;
  if (signal_in.units() == EnvelopeUnits::SqrtWatt)
    eta = efficiency_from_powers(signal_in.average_power(), sf_out.average_power(),
                                 signal_in.wavelength_nm(), sf_out.wavelength_nm());
  require(eta <= 1.0 + 1e-6, ErrorKind::Conservation,
          "conversion efficiency exceeds one (" + std::to_string(eta) + ")");
  return eta;
}

/// Linear input-output map of the converter restricted to a signal basis.
struct TransferMatrix {
  /// <b_m | signal_out(b_j)>.
  Eigen::MatrixXcd signal_block;
  /// Signal output outside span(basis), on an orthonormal leakage basis.
  Eigen::MatrixXcd leakage_block;
  /// SF output on the SF-side singular basis of the map.
  Eigen::MatrixXcd sf_block;
  Eigen::VectorXd sf_singular_values;
  std::vector<ComplexEnvelope> sf_basis;

  /// Rows (signal; leakage; SF) stacked, columns are input basis modes.
  Eigen::MatrixXcd stacked() const {
    Eigen::MatrixXcd u(signal_block.rows() + leakage_block.rows() + sf_block.rows(), signal_block.cols());
    u << signal_block, leakage_block, sf_block;
    return u;
  }
  double unitarity_error() const {
    const auto u = stacked();
    return (u.adjoint() * u - Eigen::MatrixXcd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
  }
  /// Column norms squared of the SF block, i.e. eta_j for each input mode.
  std::vector<double> efficiencies() const {
    std::vector<double> e;
    for (Eigen::Index j = 0; j < sf_block.cols(); ++j) e.push_back(sf_block.col(j).squaredNorm());
    return e;
  }
};

namespace detail {

/// Columns are envelopes scaled by sqrt(dt) so Euclidean products equal inner products.
inline Eigen::MatrixXcd as_columns(const std::vector<ComplexEnvelope>& v) {
  const auto n = static_cast<Eigen::Index>(v.front().size());
  Eigen::MatrixXcd m(n, static_cast<Eigen::Index>(v.size()));
  const double s = std::sqrt(v.front().grid().dt);
  for (std::size_t j = 0; j < v.size(); ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, static_cast<Eigen::Index>(j)) = v[j][static_cast<std::size_t>(i)] * s;
  return m;
}

/// Rows of U^dagger M for the left singular vectors of M above the rank tolerance.
inline Eigen::MatrixXcd project_on_range(const Eigen::MatrixXcd& m, Eigen::MatrixXcd* basis,
                                         Eigen::VectorXd* singular) {
  const auto svd = linalg::thin_svd(m);
  const auto& sv = svd.s;
  Eigen::Index r = 0;
  const double tol = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  while (r < sv.size() && sv(r) > tol) ++r;
  Eigen::MatrixXcd u = svd.u.leftCols(r);
  if (basis) *basis = u;
  if (singular) *singular = sv.head(r);
  return u.adjoint() * m;
}

}  // namespace detail

inline TransferMatrix transfer_matrix(const ComplexEnvelope& pump, const WaveguideSpec& wg,
                                      const TemporalModeSet& basis, std::size_t n_steps = 400) {
  require(basis.size() >= 1, ErrorKind::Basis, "empty signal basis");
  require(basis.orthonormality_error() <= 1e-8, ErrorKind::Basis, "signal basis is not orthonormal");
  // The map is linear; photon normalization keeps signal and SF blocks jointly unitary.
  std::vector<ComplexEnvelope> in;
  for (const auto& b : basis.modes) in.push_back(b.with_units(EnvelopeUnits::SqrtPhotonRate));
  const auto results = SfgPropagator(pump, wg, n_steps).run(in);
  std::vector<ComplexEnvelope> sig, sf;
  for (const auto& r : results) {
    sig.push_back(r.signal_out);
    sf.push_back(r.sf_out);
  }
  const Eigen::MatrixXcd b = detail::as_columns(in);
  const Eigen::MatrixXcd s = detail::as_columns(sig);
  const Eigen::MatrixXcd f = detail::as_columns(sf);

  TransferMatrix t;
  t.signal_block = b.adjoint() * s;
  const Eigen::MatrixXcd residual = s - b * t.signal_block;
  t.leakage_block = detail::project_on_range(residual, nullptr, nullptr);
  Eigen::MatrixXcd u_sf;
  t.sf_block = detail::project_on_range(f, &u_sf, &t.sf_singular_values);
  const auto& g = pump.grid();
  const double inv = 1.0 / std::sqrt(g.dt);
  const double lam_f = sf.front().wavelength_nm();
  for (Eigen::Index c = 0; c < u_sf.cols(); ++c) {
    std::vector<cplx> v(g.n_samples);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = u_sf(static_cast<Eigen::Index>(i), c) * inv;
    t.sf_basis.emplace_back(g, std::move(v), lam_f, EnvelopeUnits::SqrtPhotonRate);
  }
  return t;
}

struct ConversionReport {
  std::vector<std::string> pump_labels;
  std::vector<std::string> signal_labels;
  std::vector<std::vector<double>> eta;  // eta[k][j]
  std::vector<double> separabilities;
  std::vector<double> selectivities;
  std::vector<double> optimal_delay;  // ps
  std::vector<double> optimal_power;  // mW
  bool accuracy_warning = false;

  /// Recomputes sigma_k and varsigma_k from eta, pairing pump k with signal k.
  void update_figures() {
    separabilities.clear();
    selectivities.clear();
    for (std::size_t k = 0; k < eta.size(); ++k) {
      require(k < eta[k].size(), ErrorKind::Domain, "pump k has no matching signal column");
      separabilities.push_back(separability(eta[k], k));
      selectivities.push_back(eta[k][k] * separabilities.back());
    }
  }
};

/// Average power of a pump envelope in mW.
inline double average_power_mw(const ComplexEnvelope& pump) {
  return convert_units(pump, EnvelopeUnits::SqrtWatt).average_power() * 1e3;
}

/// Pump delayed by delay_ps and rescaled to the average power power_mw.
inline ComplexEnvelope place_pump(const ComplexEnvelope& pump, double delay_ps, double power_mw) {
  require(power_mw >= 0.0 && std::isfinite(power_mw), ErrorKind::Domain, "pump power must be >= 0");
  auto p = apply_delay(convert_units(pump, EnvelopeUnits::SqrtWatt), delay_ps);
  const double now = p.average_power() * 1e3;
  if (power_mw == 0.0) return p.scaled(0.0);
  require(now > 0.0, ErrorKind::Domain, "cannot rescale a zero pump");
  return p.scaled(std::sqrt(power_mw / now));
}

/// eta_kj for every pump k and signal j. Pumps are delayed and scaled to the given
/// average powers; rows are evaluated concurrently with results independent of scheduling.
inline ConversionReport eta_matrix(const std::vector<ComplexEnvelope>& pumps, const TemporalModeSet& signals,
                                   const WaveguideSpec& wg, const std::vector<double>& delays_ps,
                                   const std::vector<double>& powers_mw, std::size_t n_steps = 200,
                                   std::vector<std::string> pump_labels = {}) {
  require(!pumps.empty() && signals.size() >= 1, ErrorKind::Domain, "eta matrix needs pumps and signals");
  require(delays_ps.size() == pumps.size() && powers_mw.size() == pumps.size(), ErrorKind::Domain,
          "one delay and one power per pump required");
  ConversionReport rep;
  if (pump_labels.empty())
    for (std::size_t k = 0; k < pumps.size(); ++k) pump_labels.push_back("P" + std::to_string(k + 1));
  rep.pump_labels = std::move(pump_labels);
  rep.signal_labels = signals.labels;
  rep.optimal_delay = delays_ps;
  rep.optimal_power = powers_mw;
  rep.eta.assign(pumps.size(), std::vector<double>(signals.size()));
  parallel_for(pumps.size(), [&](std::size_t k) {
    const auto pump = place_pump(pumps[k], delays_ps[k], powers_mw[k]);
    const auto res = SfgPropagator(pump, wg, n_steps).run(signals.modes);
    for (std::size_t j = 0; j < res.size(); ++j) rep.eta[k][j] = efficiency(signals[j], res[j].sf_out);
  });
  rep.accuracy_warning = n_steps < SfgPropagator::kMinAccurateSteps;
  if (pumps.size() <= signals.size()) rep.update_figures();
  return rep;
}

/// Result of scanning one pump over delay and average power.
struct SweepResult {
  std::vector<double> delays_ps;
  std::vector<double> powers_mw;
  /// [i_delay][i_power] grids.
  std::vector<std::vector<double>> eta_kk;
  std::vector<std::vector<double>> sigma;
  double opt_delay = 0.0, opt_power = 0.0;      // argmax eta_kk
  double final_delay = 0.0, final_power = 0.0;  // argmax sigma next to the eta optimum
  std::vector<double> final_row;
};

/// Delay/power scan following the experimental procedure: locate the eta_kk maximum,
/// then pick the best-separability point among its immediate grid neighbours.
inline SweepResult delay_power_sweep(const ComplexEnvelope& pump, const TemporalModeSet& signals,
                                     std::size_t target, const WaveguideSpec& wg,
                                     std::vector<double> delays_ps, std::vector<double> powers_mw,
                                     std::size_t n_steps = 100) {
  require(target < signals.size(), ErrorKind::Domain, "sweep target outside the signal set");
  require(!delays_ps.empty() && !powers_mw.empty(), ErrorKind::Domain, "empty sweep grid");
  SweepResult r;
  r.delays_ps = std::move(delays_ps);
  r.powers_mw = std::move(powers_mw);
  const std::size_t nd = r.delays_ps.size(), np = r.powers_mw.size();
  std::vector<std::vector<std::vector<double>>> rows(nd, std::vector<std::vector<double>>(np));
  parallel_for(nd * np, [&](std::size_t idx) {
    const std::size_t i = idx / np, j = idx % np;
    const auto p = place_pump(pump, r.delays_ps[i], r.powers_mw[j]);
    const auto res = SfgPropagator(p, wg, n_steps).run(signals.modes);
    for (std::size_t m = 0; m < res.size(); ++m) rows[i][j].push_back(efficiency(signals[m], res[m].sf_out));
  });
  r.eta_kk.assign(nd, std::vector<double>(np));
  r.sigma.assign(nd, std::vector<double>(np));
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < nd; ++i)
    for (std::size_t j = 0; j < np; ++j) {
      r.eta_kk[i][j] = rows[i][j][target];
      r.sigma[i][j] = rows[i][j][target] > 0.0 ? separability(rows[i][j], target) : 0.0;
      if (r.eta_kk[i][j] > r.eta_kk[bi][bj]) bi = i, bj = j;
    }
  r.opt_delay = r.delays_ps[bi];
  r.opt_power = r.powers_mw[bj];
  std::size_t fi = bi, fj = bj;
  for (std::size_t i = bi ? bi - 1 : 0; i <= std::min(bi + 1, nd - 1); ++i)
    for (std::size_t j = bj ? bj - 1 : 0; j <= std::min(bj + 1, np - 1); ++j)
      if (r.sigma[i][j] > r.sigma[fi][fj]) fi = i, fj = j;
  r.final_delay = r.delays_ps[fi];
  r.final_power = r.powers_mw[fj];
  r.final_row = rows[fi][fj];
  return r;
}

/// Grid helper: centre +/- span in equal steps (inclusive).
inline std::vector<double> centred_range(double centre, double half_span, double step) {
  require(step > 0.0 && half_span >= 0.0, ErrorKind::Domain, "invalid sweep range");
  const auto n = static_cast<int>(std::floor(half_span / step + 1e-9));
  std::vector<double> v;
  for (int i = -n; i <= n; ++i) v.push_back(centre + i * step);
  return v;
}

struct KappaCalibration {
  double target_eta = 0.936;
  double peak_power_mw = 94.0;
  double pump_fwhm_ps = 160.0;  // Gaussian intensity FWHM
  std::size_t n_samples = 8192;
  double dt_ps = 0.1;
  std::size_t n_steps = 200;
  int iterations = 50;
};

struct KappaFit {
  double kappa = 0.0;
  double peak_eta = 0.0;
  double shg_estimate = 0.0;  // starting value from the SHG figure
};

/// Peak local conversion of a CW signal by a long Gaussian pump pulse.
inline double cw_peak_efficiency(const WaveguideSpec& wg, const KappaCalibration& c) {
  const auto grid = TimeFrequencyGrid::make(c.n_samples, c.dt_ps);
  const double amp = std::sqrt(c.peak_power_mw * 1e-3);
  const double t0 = c.pump_fwhm_ps / (2.0 * std::sqrt(std::log(2.0)));
  const auto pump = ComplexEnvelope::from_function(
      grid, wg.pump_wavelength_nm,
      [&](double t) { return cplx(amp * std::exp(-0.5 * t * t / (t0 * t0)), 0.0); }, EnvelopeUnits::SqrtWatt);
  const auto signal = ComplexEnvelope::from_function(grid, wg.signal_wavelength_nm,
                                                     [](double) { return cplx(1.0, 0.0); });
  const auto r = propagate_sfg(signal, pump, wg, c.n_steps);
  double peak = 0.0;
  for (std::size_t i = 0; i < r.sf_out.size(); ++i) peak = std::max(peak, std::norm(r.sf_out[i]));
  return peak;
}

/// Bisects kappa on the lower Rabi branch so the CW benchmark reaches target_eta.
inline KappaFit calibrate_kappa(WaveguideSpec wg, const KappaCalibration& c = {}) {
  require(c.target_eta > 0.0 && c.target_eta < 1.0, ErrorKind::Domain, "target efficiency must lie in (0,1)");
  require(c.peak_power_mw > 0.0, ErrorKind::Domain, "calibration power must be positive");
  KappaFit fit;
  fit.shg_estimate = kappa_from_shg(wg.shg_efficiency, wg.length_mm);
  double lo = 0.0;
  double hi = 0.5 * kPi / (std::sqrt(c.peak_power_mw * 1e-3) * wg.length_mm);
  wg.kappa = hi;
  require(cw_peak_efficiency(wg, c) >= c.target_eta, ErrorKind::Convergence,
          "target efficiency unreachable on the lower Rabi branch");
  for (int it = 0; it < c.iterations; ++it) {
    wg.kappa = 0.5 * (lo + hi);
    (cw_peak_efficiency(wg, c) < c.target_eta ? lo : hi) = wg.kappa;
  }
  wg.kappa = 0.5 * (lo + hi);
  fit.kappa = wg.kappa;
  fit.peak_eta = cw_peak_efficiency(wg, c);
  return fit;
}

}  // namespace tmqfc
