#pragma once

// Simultaneous-perturbation stochastic approximation and the pump-phase feedback loop.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tmqfc/comb.hpp"
#include "tmqfc/error.hpp"
#include "tmqfc/field.hpp"
#include "tmqfc/propagation.hpp"

namespace tmqfc {

enum class Direction { Maximize, Minimize };

struct SPSAConfig {
  double a0 = 0.2;
  double c0 = 0.15;  // rad
  double alpha = 0.602;
  double gamma = 0.101;
  int max_iters = 40;
  std::uint64_t seed = 1;
  Direction direction = Direction::Maximize;
  /// Express a0 as the initial per-coordinate step (rad): the gain is divided by the mean
  /// gradient magnitude from `calibration_samples` perturbation pairs at theta0.
  bool calibrate_gain = false;
  int calibration_samples = 8;
  int plateau_window = 10;
  double plateau_tol = 0.005;

  void validate() const {
    require(a0 > 0.0 && c0 > 0.0, ErrorKind::Domain, "SPSA gains must be positive");
    require(alpha > 0.5 && alpha <= 1.0, ErrorKind::Domain, "SPSA alpha must lie in (0.5, 1]");
    require(gamma > 0.0 && gamma <= 0.5, ErrorKind::Domain, "SPSA gamma must lie in (0, 0.5]");
    require(max_iters >= 0 && plateau_window >= 1, ErrorKind::Domain, "invalid SPSA iteration settings");
  }
};

struct SpsaResult {
  std::vector<double> theta_best;
  double best_value = 0.0;
  double initial_value = 0.0;
  /// Objective reading at theta after each update.
  std::vector<double> trace;
  /// Best-so-far reading after each iteration.
  std::vector<double> best_trace;
  std::vector<std::vector<double>> thetas;
  /// First iteration (1-based) at which the best-so-far changed by less than plateau_tol
  /// over plateau_window iterations; 0 when no plateau was seen.
  int plateau_iteration = 0;
  int evaluations = 0;
  double gain_scale = 1.0;
  bool aborted = false;
  std::string abort_reason;
};

using SpsaObjective = std::function<double(const std::vector<double>&)>;

/// Two-sided SPSA on phases. Each iteration spends two evaluations on the gradient estimate
/// and one on reading the objective at the updated point.
inline SpsaResult spsa_optimize(const SpsaObjective& f, std::vector<double> theta, const SPSAConfig& cfg) {
  cfg.validate();
  const double sense = cfg.direction == Direction::Maximize ? 1.0 : -1.0;
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution coin(0.5);
  const std::size_t n = theta.size();
  SpsaResult r;
  for (auto& t : theta) t = wrap_phase(t);
  auto eval = [&](const std::vector<double>& th) {
    ++r.evaluations;
    return f(th);
  };
  auto perturbation = [&] {
    std::vector<double> d(n);
    for (auto& v : d) v = coin(rng) ? 1.0 : -1.0;
    return d;
  };
  auto shifted = [&](const std::vector<double>& d, double c) {
    std::vector<double> th = theta;
    for (std::size_t i = 0; i < n; ++i) th[i] = wrap_phase(th[i] + c * d[i]);
    return th;
  };

  r.initial_value = eval(theta);
  r.theta_best = theta;
  r.best_value = r.initial_value;
  if (std::isnan(r.initial_value)) {
    r.aborted = true;
    r.abort_reason = "objective returned NaN at theta0";
    return r;
  }
  if (cfg.calibrate_gain && cfg.max_iters > 0) {
    double mean = 0.0;
    for (int s = 0; s < cfg.calibration_samples; ++s) {
      const auto d = perturbation();
      const double g = std::abs(eval(shifted(d, cfg.c0)) - eval(shifted(d, -cfg.c0))) / (2.0 * cfg.c0);
      mean += g / cfg.calibration_samples;
    }
    if (mean > 0.0 && std::isfinite(mean)) r.gain_scale = 1.0 / mean;
  }

  for (int k = 0; k < cfg.max_iters; ++k) {
    const double ak = r.gain_scale * cfg.a0 / std::pow(k + 1.0, cfg.alpha);
    const double ck = cfg.c0 / std::pow(k + 1.0, cfg.gamma);
    const auto d = perturbation();
    const double yp = eval(shifted(d, ck));
    const double ym = eval(shifted(d, -ck));
    if (std::isnan(yp) || std::isnan(ym)) {
      r.aborted = true;
      r.abort_reason = "objective returned NaN at iteration " + std::to_string(k + 1);
      break;
    }
    for (std::size_t i = 0; i < n; ++i) theta[i] = wrap_phase(theta[i] + sense * ak * (yp - ym) / (2.0 * ck * d[i]));
    const double y = eval(theta);
    if (std::isnan(y)) {
      r.aborted = true;
      r.abort_reason = "objective returned NaN at iteration " + std::to_string(k + 1);
      break;
    }
    r.trace.push_back(y);
    r.thetas.push_back(theta);
    if (sense * y > sense * r.best_value) {
      r.best_value = y;
      r.theta_best = theta;
    }
    r.best_trace.push_back(r.best_value);
    const auto w = static_cast<std::size_t>(cfg.plateau_window);
    if (r.plateau_iteration == 0 && r.best_trace.size() > w) {
      const double then = r.best_trace[r.best_trace.size() - 1 - w];
      if (std::abs(r.best_value - then) <= cfg.plateau_tol * std::abs(then)) r.plateau_iteration = k + 1;
    }
  }
  return r;
}

struct FeedbackResult {
  CombSpec pump;  // optimized phases, original amplitudes
  SpsaResult spsa;
  double eta_start = 0.0;  // noiseless efficiency before and after
  double eta_final = 0.0;
};

struct FeedbackOptions {
  double power_mw = 125.0;
  std::size_t n_steps = 60;
  std::size_t design_samples = 256;
};

/// Noiseless eta of `signal` for a comb pump at the given average power.
inline double comb_efficiency(const CombSpec& pump, const ComplexEnvelope& signal, const WaveguideSpec& wg,
                              double power_mw, std::size_t n_steps) {
  const double p = pump.average_power();
  require(p > 0.0, ErrorKind::Domain, "pump comb has zero power");
  const auto e = pump.to_envelope(signal.grid(), EnvelopeUnits::SqrtWatt).scaled(std::sqrt(power_mw * 1e-3 / p));
  return efficiency(signal, propagate_sfg(signal, e, wg, n_steps).sf_out);
}

/// SPSA on the 17 pump phases against a power meter with multiplicative Gaussian noise.
/// The reading is the SF power normalized to an efficiency, so it is proportional to eta_kj.
inline FeedbackResult pump_phase_feedback(const CombSpec& pump, const ComplexEnvelope& signal, const WaveguideSpec& wg,
                                          const SPSAConfig& cfg, double meter_noise_frac,
                                          const FeedbackOptions& o = {}) {
  require(meter_noise_frac >= 0.0, ErrorKind::Domain, "meter noise must be >= 0");
  const auto& g0 = signal.grid();
  const auto g = TimeFrequencyGrid::make(o.design_samples, g0.window() / static_cast<double>(o.design_samples),
                                         g0.f_center);
  const auto sig = resample(signal, g, 1e-10);
  std::mt19937_64 meter_rng(cfg.seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> meter(0.0, 1.0);
  auto with_phases = [&](const std::vector<double>& th) {
    CombSpec c = pump;
    for (std::size_t i = 0; i < c.size(); ++i) c.lines[i].phase = wrap_phase(th[i]);
    return c;
  };
  auto objective = [&](const std::vector<double>& th) {
    const double eta = comb_efficiency(with_phases(th), sig, wg, o.power_mw, o.n_steps);
    return eta * (1.0 + meter_noise_frac * meter(meter_rng));
  };
  FeedbackResult out;
  out.spsa = spsa_optimize(objective, pump.phases(), cfg);
  out.pump = with_phases(out.spsa.theta_best);
  out.eta_start = comb_efficiency(pump, sig, wg, o.power_mw, o.n_steps);
  out.eta_final = comb_efficiency(out.pump, sig, wg, o.power_mw, o.n_steps);
  return out;
}

}  // namespace tmqfc
