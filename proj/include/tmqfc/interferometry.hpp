#pragma once

// Balanced Mach-Zehnder visibility between two pulses and delay-scan alignment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "tmqfc/error.hpp"
#include "tmqfc/field.hpp"
#include "tmqfc/spdc.hpp"

namespace tmqfc {

/// V(tau) = 2 |<a, delay(b, tau)>| / (|a|^2 + |b|^2).
inline double visibility(const ComplexEnvelope& a, const ComplexEnvelope& b, double tau) {
  require_same_grid(a, b);
  const double na = a.norm2(), nb = b.norm2();
  require(na > 0.0 && nb > 0.0, ErrorKind::Domain, "visibility undefined for a zero-norm arm");
  return 2.0 * std::abs(inner_product(a, apply_delay(b, tau))) / (na + nb);
}

inline std::vector<double> visibility_scan(const ComplexEnvelope& a, const ComplexEnvelope& b,
                                           const std::vector<double>& taus) {
  std::vector<double> v;
  v.reserve(taus.size());
  for (double t : taus) v.push_back(visibility(a, b, t));
  return v;
}

enum class FringeMethod { MinMax, Fit };

struct FringeOptions {
  int n_phases = 64;  // samples over one 2 pi stretcher sweep
  FringeMethod method = FringeMethod::MinMax;
  /// Additive Gaussian detector noise, relative to the mean output power.
  double noise_sigma = 0.0;
  std::uint64_t seed = 7;
};

/// Visibility read off simulated fringes: the relative phase phi of arm b is swept and the
/// mean output power P(phi) = |a + e^{i phi} b_tau|^2 / 2 is recorded. MinMax refines the
/// sampled extrema by golden-section search when the readings are noiseless.
inline double fringe_visibility(const ComplexEnvelope& a, const ComplexEnvelope& b, double tau,
                                const FringeOptions& o = {}) {
  require_same_grid(a, b);
  require(o.n_phases >= 3, ErrorKind::Domain, "fringe sweep needs at least 3 phase samples");
  const auto bt = apply_delay(b, tau);
  const double na = a.norm2(), nb = bt.norm2();
  require(na > 0.0 && nb > 0.0, ErrorKind::Domain, "visibility undefined for a zero-norm arm");
  const double mean = 0.5 * (na + nb);
  auto power = [&](double phi) {
    const cplx rot = std::polar(1.0, phi);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] + rot * bt[i]);
    return 0.5 * s * a.grid().dt;
  };
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> noise(0.0, o.noise_sigma);
  std::vector<double> phi(static_cast<std::size_t>(o.n_phases)), p(phi.size());
  for (std::size_t n = 0; n < phi.size(); ++n) {
    phi[n] = kTwoPi * static_cast<double>(n) / static_cast<double>(phi.size());
    p[n] = power(phi[n]) + (o.noise_sigma > 0.0 ? mean * noise(rng) : 0.0);
  }
  if (o.method == FringeMethod::Fit) {
    // Least squares P = A + B cos phi + C sin phi on the uniform sweep.
    double a0 = 0.0, b1 = 0.0, c1 = 0.0;
    for (std::size_t n = 0; n < phi.size(); ++n) {
      a0 += p[n];
      b1 += p[n] * std::cos(phi[n]);
      c1 += p[n] * std::sin(phi[n]);
    }
    const double m = static_cast<double>(phi.size());
    return std::hypot(2.0 * b1 / m, 2.0 * c1 / m) / (a0 / m);
  }
  std::size_t imax = 0, imin = 0;
  for (std::size_t n = 1; n < p.size(); ++n) {
    if (p[n] > p[imax]) imax = n;
    if (p[n] < p[imin]) imin = n;
  }
  double pmax = p[imax], pmin = p[imin];
  if (o.noise_sigma == 0.0) {
    const double h = kTwoPi / static_cast<double>(phi.size());
    auto golden = [&](double centre, double sign) {
      const double r = 0.5 * (std::sqrt(5.0) - 1.0);
      double lo = centre - h, hi = centre + h;
      double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
      double f1 = sign * power(x1), f2 = sign * power(x2);
      for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
        if (f1 > f2) {
          lo = x1, x1 = x2, f1 = f2;
          x2 = lo + r * (hi - lo), f2 = sign * power(x2);
        } else {
          hi = x2, x2 = x1, f2 = f1;
          x1 = hi - r * (hi - lo), f1 = sign * power(x1);
        }
      }
      return sign * std::min(f1, f2);
    };
    pmax = std::max(pmax, golden(phi[imax], -1.0));
    pmin = std::min(pmin, golden(phi[imin], 1.0));
  }
  return (pmax - pmin) / (pmax + pmin);
}

/// Random per-bin spectral amplitude and phase errors, standing in for imperfect
/// waveshaping of a designed pulse.
struct ShapingImperfection {
  double amplitude_rel = 0.01;
  double phase_rad = 0.01;
  std::uint64_t seed = 3;
};

inline ComplexEnvelope apply_imperfection(const ComplexEnvelope& e, const ShapingImperfection& imp) {
  std::mt19937_64 rng(imp.seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto spec = e.spectrum();
  for (auto& v : spec) {
    const double da = imp.amplitude_rel * n(rng), dp = imp.phase_rad * n(rng);
    if (v != cplx(0.0)) v *= (1.0 + da) * std::polar(1.0, dp);
  }
  return ComplexEnvelope::from_spectrum(e.grid(), std::move(spec), e.wavelength_nm(), e.units()).normalized();
}

struct Alignment {
  std::vector<double> shifts;      // ps; apply_delay(mode, -shift) aligns the mode
  std::vector<bool> used_maximum;  // true for similar (maximum-seeking) modes
  std::vector<std::vector<double>> scans;
};

inline std::vector<double> default_tau_grid(double half_span = 5.0, double step = 0.1) {
  std::vector<double> g;
  const int n = static_cast<int>(std::round(half_span / step));
  for (int i = -n; i <= n; ++i) g.push_back(i * step);
  return g;
}

/// Delay-scan alignment of each mode against a reference. Modes resembling the reference
/// (peak visibility >= similar_threshold) are aligned on the visibility maximum, dissimilar modes on the
/// visibility null nearest the origin. Extrema are refined by a parabola through V^2.
inline Alignment align_set(const TemporalModeSet& signals, const ComplexEnvelope& reference,
                           const std::vector<double>& tau_grid = default_tau_grid(),
                           double similar_threshold = 0.9) {
  require(tau_grid.size() >= 3, ErrorKind::Domain, "alignment grid needs at least 3 delays");
  for (std::size_t i = 1; i < tau_grid.size(); ++i)
    require(tau_grid[i] > tau_grid[i - 1], ErrorKind::Domain, "alignment grid must be increasing");
  Alignment out;
  for (const auto& mode : signals.modes) {
    const auto v = visibility_scan(reference, mode, tau_grid);
    std::vector<double> v2(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) v2[i] = v[i] * v[i];
    const bool use_max = *std::max_element(v.begin(), v.end()) >= similar_threshold;
    std::size_t idx = 0;
    if (use_max) {
      idx = static_cast<std::size_t>(std::max_element(v2.begin(), v2.end()) - v2.begin());
    } else {
      // Interior local minima; the one nearest zero delay wins.
      double best_dist = std::numeric_limits<double>::infinity();
      bool found = false;
      for (std::size_t i = 0; i < v2.size(); ++i) {
        const bool left = i == 0 || v2[i] <= v2[i - 1];
        const bool right = i + 1 == v2.size() || v2[i] <= v2[i + 1];
        if (left && right && std::abs(tau_grid[i]) < best_dist) {
          best_dist = std::abs(tau_grid[i]);
          idx = i;
          found = true;
        }
      }
      require(found, ErrorKind::Range, "no visibility minimum in the delay scan");
    }
    require(idx > 0 && idx + 1 < v2.size(), ErrorKind::Range,
            "visibility extremum on the scan boundary; widen the delay grid");
    const double x0 = tau_grid[idx - 1], x1 = tau_grid[idx], x2 = tau_grid[idx + 1];
    const double y0 = v2[idx - 1], y1 = v2[idx], y2 = v2[idx + 1];
    // Vertex of the parabola through three (possibly non-uniform) points.
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    const double tau_ext = den != 0.0 ? x1 - 0.5 * num / den : x1;
    out.shifts.push_back(-tau_ext);
    out.used_maximum.push_back(use_max);
    out.scans.push_back(v);
  }
  return out;
}

}  // namespace tmqfc
