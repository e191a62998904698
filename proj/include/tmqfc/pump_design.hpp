#pragma once

// Mode-selective pump synthesis on the comb-line representation.
//
// The pump is parametrized by the complex values of its comb lines and rescaled to the power
// budget on every evaluation, so the optimizer only ever sees pulse shape. A warm start comes
// from the conjugate target mode, alternately projected onto the comb band and gated into a
// single period; a local refiner then maximizes eta_kk * sigma_k.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tmqfc/comb.hpp"
#include "tmqfc/error.hpp"
#include "tmqfc/field.hpp"
#include "tmqfc/metrics.hpp"
#include "tmqfc/optimize.hpp"
#include "tmqfc/parallel.hpp"
#include "tmqfc/propagation.hpp"
#include "tmqfc/spdc.hpp"

namespace tmqfc {

enum class WarmStart { AlternatingProjection, ConjugateMode };
enum class Refiner { Bfgs, NelderMead, None };

struct PumpDesignOptions {
  double spacing_ghz = 20.0;
  std::size_t n_lines = 17;
  /// Design runs on a coarse lattice covering the same window; steps per evaluation.
  std::size_t design_samples = 256;
  std::size_t n_steps = 60;
  /// Steps for the final eta row on the signals' own grid.
  std::size_t final_steps = 200;
  WarmStart warm_start = WarmStart::AlternatingProjection;
  int projection_iters = 20;
  Refiner refiner = Refiner::Bfgs;
  int max_iters = 200;
  int restarts = 5;
  double restart_jitter = 0.05;  // relative size of the random restart perturbation
  std::uint64_t seed = 1;
};

struct PumpDesign {
  std::string label;
  std::size_t target = 0;
  CombSpec comb;
  ComplexEnvelope pump;  // on the signals' grid, sqrt(W), scaled to the budget
  double power_mw = 0.0;
  std::vector<double> eta_row;
  double separability = 0.0;
  double selectivity = 0.0;
  double warm_selectivity = 0.0;
  /// Best selectivity after each refiner iteration (non-decreasing).
  std::vector<double> trace;
  int evaluations = 0;
  int attempts = 0;
};

namespace detail {

inline Eigen::VectorXd comb_to_vector(const CombSpec& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::VectorXd x(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx v = c.line(static_cast<std::size_t>(i));
    x(i) = v.real();
    x(n + i) = v.imag();
  }
  const double nrm = x.norm();
  require(nrm > 0.0, ErrorKind::Domain, "pump comb is empty");
  return x / nrm;
}

inline CombSpec vector_to_comb(const Eigen::VectorXd& x, const CombSpec& layout) {
  CombSpec c = layout;
  const auto n = static_cast<Eigen::Index>(c.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx v(x(i), x(n + i));
    c.lines[static_cast<std::size_t>(i)] = {std::abs(v), std::abs(v) > 0.0 ? wrap_phase(std::arg(v)) : 0.0};
  }
  return c;
}

/// Pump train with average power power_mw.
inline ComplexEnvelope comb_pump(const CombSpec& c, const TimeFrequencyGrid& g, double power_mw) {
  const double p = c.average_power();
  require(p > 0.0, ErrorKind::Domain, "pump comb has zero power");
  return c.to_envelope(g, EnvelopeUnits::SqrtWatt).scaled(std::sqrt(power_mw * 1e-3 / p));
}

inline std::vector<double> eta_row(const ComplexEnvelope& pump, const std::vector<ComplexEnvelope>& signals,
                                   const WaveguideSpec& wg, std::size_t n_steps) {
  const auto res = SfgPropagator(pump, wg, n_steps).run(signals);
  std::vector<double> row;
  for (std::size_t j = 0; j < res.size(); ++j) row.push_back(efficiency(signals[j], res[j].sf_out));
  return row;
}

inline double selectivity_or_zero(const std::vector<double>& row, std::size_t k) {
  return row[k] > 0.0 ? selectivity(row, k) : 0.0;
}

}  // namespace detail

/// Warm-start comb for target mode k.
inline CombSpec warm_start_comb(const ComplexEnvelope& target, const WaveguideSpec& wg,
                                const PumpDesignOptions& o) {
  std::vector<cplx> conj(target.size());
  for (std::size_t i = 0; i < conj.size(); ++i) conj[i] = std::conj(target[i]);
  auto e = ComplexEnvelope(target.grid(), std::move(conj), wg.pump_wavelength_nm, EnvelopeUnits::SqrtWatt);
  auto comb = project_to_comb(e, o.spacing_ghz, o.n_lines, 1.0).comb;
  if (o.warm_start == WarmStart::AlternatingProjection) {
    for (int it = 0; it < o.projection_iters; ++it) {
      e = gate(comb.to_envelope(target.grid(), EnvelopeUnits::SqrtWatt), 0.0, comb.period_ps() / 2.0);
      comb = project_to_comb(e, o.spacing_ghz, o.n_lines, 1.0).comb;
    }
  }
  return comb;
}

/// Designs a pump that maximizes varsigma_k = eta_kk sigma_k over `signals` at a fixed
/// average power. Throws a convergence error if no attempt improves on its starting point.
inline PumpDesign design_pump(std::size_t target, const TemporalModeSet& signals, const WaveguideSpec& wg,
                              double power_budget_mw, const std::optional<ComplexEnvelope>& init = std::nullopt,
                              const PumpDesignOptions& o = {}) {
  require(target < signals.size(), ErrorKind::Domain, "design target outside the signal set");
  require(power_budget_mw > 0.0 && std::isfinite(power_budget_mw), ErrorKind::Domain,
          "power budget must be positive");
  const auto& full = signals[0].grid();
  const auto g = TimeFrequencyGrid::make(o.design_samples, full.window() / static_cast<double>(o.design_samples),
                                         full.f_center);
  std::vector<ComplexEnvelope> sig;
  for (const auto& m : signals.modes) sig.push_back(resample(m, g, 1e-10));

  CombSpec layout = init ? project_to_comb(resample(*init, g, 1e-6).with_wavelength(wg.pump_wavelength_nm),
                                           o.spacing_ghz, o.n_lines, 1.0)
                               .comb
                         : warm_start_comb(sig[target], wg, o);
  layout.center_wavelength_nm = wg.pump_wavelength_nm;

  PumpDesign d;
  d.target = target;
  d.label = signals.labels.empty() ? "P" + std::to_string(target + 1) : "P" + signals.labels[target].substr(1);
  d.power_mw = power_budget_mw;
  int evaluations = 0;
  auto objective = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    const auto row = detail::eta_row(detail::comb_pump(detail::vector_to_comb(x, layout), g, power_budget_mw),
                                     sig, wg, o.n_steps);
    return -detail::selectivity_or_zero(row, target);
  };

  const Eigen::VectorXd x0 = detail::comb_to_vector(layout);
  const double start = -objective(x0);
  d.warm_selectivity = start;
  Eigen::VectorXd best_x = x0;
  double best = start;
  d.trace.push_back(best);
  std::mt19937_64 rng(o.seed + 0x9e3779b97f4a7c15ULL * (target + 1));
  std::normal_distribution<double> jitter(0.0, 1.0);

  if (o.refiner != Refiner::None) {
    bool improved = false;
    for (int attempt = 0; attempt < std::max(1, o.restarts) && !improved; ++attempt) {
      ++d.attempts;
      Eigen::VectorXd xa = best_x;
      if (attempt > 0) {
        for (Eigen::Index i = 0; i < xa.size(); ++i)
          xa(i) += o.restart_jitter * jitter(rng) / std::sqrt(static_cast<double>(xa.size()));
        xa.normalize();
      }
      const double from = -objective(xa);
      opt::Result r;
      if (o.refiner == Refiner::Bfgs) {
        opt::BfgsOptions bo;
        bo.max_iters = o.max_iters;
        r = opt::bfgs(objective, xa, bo);
      } else {
        opt::NelderMeadOptions no;
        no.max_iters = o.max_iters * static_cast<int>(xa.size());
        r = opt::nelder_mead(objective, xa, no);
      }
      for (double h : r.history) d.trace.push_back(std::max(d.trace.back(), -h));
      if (-r.value > from + 1e-12) improved = true;
      if (-r.value > best) {
        best = -r.value;
        best_x = r.x.normalized();
      }
    }
    require(improved, ErrorKind::Convergence,
            "pump optimizer made no progress for " + d.label + " after " + std::to_string(d.attempts) + " attempts");
  }
  d.evaluations = evaluations;
  d.comb = detail::vector_to_comb(best_x, layout);
  d.pump = detail::comb_pump(d.comb, full, power_budget_mw);
  d.eta_row = detail::eta_row(d.pump, signals.modes, wg, o.final_steps);
  d.separability = d.eta_row[target] > 0.0 ? separability(d.eta_row, target) : 0.0;
  d.selectivity = d.eta_row[target] * d.separability;
  return d;
}

/// Independent designs for several targets, run concurrently.
inline std::vector<PumpDesign> design_pumps(const std::vector<std::size_t>& targets, const TemporalModeSet& signals,
                                            const WaveguideSpec& wg, const std::vector<double>& budgets_mw,
                                            const PumpDesignOptions& o = {}) {
  require(budgets_mw.size() == targets.size(), ErrorKind::Domain, "one power budget per target required");
  std::vector<PumpDesign> out(targets.size());
  parallel_for(targets.size(), [&](std::size_t i) {
    out[i] = design_pump(targets[i], signals, wg, budgets_mw[i], std::nullopt, o);
  });
  return out;
}

}  // namespace tmqfc
