#pragma once

// Photon-counting emulation with weak coherent signals and pump-induced noise.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tmqfc/error.hpp"
#include "tmqfc/metrics.hpp"
#include "tmqfc/parallel.hpp"

namespace tmqfc {

struct CountingConfig {
  double mu = 0.15;              // mean photons per pulse
  double rep_rate_ghz = 20.0;
  double extra_attenuation_db = 18.0;
  double detector_efficiency = 0.2;
  /// Noise photons per pulse per mW of average pump power.
  double noise_per_mw = 8.5e-9;
  double pump_power_mw = 125.0;
  double max_count_rate = 1e7;   // counts/s
  double integration_time_s = 0.1;
  std::uint64_t seed = 11;

  /// Noise photons per pulse at the detector, linear in pump power.
  double noise_rate() const { return noise_per_mw * pump_power_mw; }

  void validate() const {
    require(mu > 0.0, ErrorKind::Domain, "mean photon number must be positive");
    require(rep_rate_ghz > 0.0 && integration_time_s > 0.0, ErrorKind::Domain,
            "repetition rate and integration time must be positive");
    require(detector_efficiency >= 0.0 && detector_efficiency <= 1.0, ErrorKind::Domain,
            "detector efficiency must lie in [0, 1]");
    require(noise_per_mw >= 0.0 && pump_power_mw >= 0.0 && max_count_rate > 0.0 && extra_attenuation_db >= 0.0,
            ErrorKind::Domain, "counting rates must be nonnegative");
  }

  double signal_rate(double eta) const {
    return rep_rate_ghz * 1e9 * mu * eta * std::pow(10.0, -extra_attenuation_db / 10.0) * detector_efficiency;
  }
  double noise_count_rate() const { return rep_rate_ghz * 1e9 * noise_rate() * detector_efficiency; }
};

struct CountRecord {
  std::uint64_t signal_counts = 0;  // signal and noise together
  std::uint64_t noise_counts = 0;   // signal blocked
  double duration = 0.0;
  CountingConfig config;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the (k, j) counting task.
inline std::uint64_t task_seed(std::uint64_t master, std::size_t k, std::size_t j) {
  return splitmix64(splitmix64(splitmix64(master) ^ k) ^ j);
}

inline CountRecord simulate_counts(double eta, const CountingConfig& cfg) {
  cfg.validate();
  require(eta >= 0.0 && eta <= 1.0, ErrorKind::Domain, "eta must lie in [0, 1]");
  const double rs = cfg.signal_rate(eta), rn = cfg.noise_count_rate();
  require(rs + rn <= cfg.max_count_rate, ErrorKind::Saturation,
          "expected count rate " + std::to_string(rs + rn) + " cps exceeds the detector limit; add attenuation");
  std::mt19937_64 rng(cfg.seed);
  auto draw = [&](double mean) -> std::uint64_t {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(rng);
  };
  CountRecord r;
  r.duration = cfg.integration_time_s;
  r.config = cfg;
  r.signal_counts = draw((rs + rn) * r.duration);
  r.noise_counts = draw(rn * r.duration);
  return r;
}

/// One record per matrix entry, each drawn from its own (seed, k, j) stream.
inline std::vector<std::vector<CountRecord>> simulate_count_matrix(const std::vector<std::vector<double>>& eta,
                                                                   const CountingConfig& cfg) {
  std::vector<std::vector<CountRecord>> out(eta.size());
  for (std::size_t k = 0; k < eta.size(); ++k) out[k].resize(eta[k].size());
  parallel_for(eta.size(), [&](std::size_t k) {
    for (std::size_t j = 0; j < eta[k].size(); ++j) {
      CountingConfig c = cfg;
      c.seed = task_seed(cfg.seed, k, j);
      out[k][j] = simulate_counts(eta[k][j], c);
    }
  });
  return out;
}

struct CorrectedSeparability {
  double sigma = 0.0;
  double std_error = 0.0;
  std::vector<double> proxies;  // noise-subtracted rates, counts/s
  std::vector<std::string> warnings;
};

/// Noise-subtracted separability per pump row with first-order Poisson error propagation.
inline std::vector<CorrectedSeparability> noise_corrected_sigma(const std::vector<std::vector<CountRecord>>& records) {
  std::vector<CorrectedSeparability> out;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& row = records[k];
    require(k < row.size(), ErrorKind::Domain, "count matrix row shorter than its index");
    CorrectedSeparability c;
    std::vector<double> var;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto& r = row[j];
      require(r.duration > 0.0, ErrorKind::Domain, "count record without a duration");
      const double s = static_cast<double>(r.signal_counts), n = static_cast<double>(r.noise_counts);
      const double diff = s - n, sd = std::sqrt(s + n);
      if (diff < -3.0 * sd)
        c.warnings.push_back("corrected counts for (" + std::to_string(k) + "," + std::to_string(j) +
                             ") are negative beyond 3 sigma");
      c.proxies.push_back(std::max(0.0, diff) / r.duration);
      var.push_back((s + n) / (r.duration * r.duration));
    }
    c.sigma = separability(c.proxies, k);
    double total = 0.0;
    for (double p : c.proxies) total += p;
    double v = 0.0;
    for (std::size_t j = 0; j < c.proxies.size(); ++j) {
      const double d = j == k ? (total - c.proxies[k]) / (total * total) : -c.proxies[k] / (total * total);
      v += d * d * var[j];
    }
    c.std_error = std::sqrt(v);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace tmqfc
