#pragma once

// SPDC joint spectral amplitude and its Schmidt (temporal-mode) decomposition.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tmqfc/error.hpp"
#include "tmqfc/field.hpp"
#include "tmqfc/linalg.hpp"

namespace tmqfc {

/// Ordered set of mode functions, optionally carrying Schmidt weights.
struct TemporalModeSet {
  std::vector<ComplexEnvelope> modes;
  std::vector<std::string> labels;
  /// Weights of the retained modes (empty for hand-assembled sets).
  std::vector<double> schmidt_coefficients;
  /// Full normalized singular-value spectrum of the source, squares summing to one.
  std::vector<double> all_coefficients;

  std::size_t size() const { return modes.size(); }
  const ComplexEnvelope& operator[](std::size_t i) const { return modes[i]; }

  Eigen::MatrixXcd gram() const {
    const auto n = static_cast<Eigen::Index>(modes.size());
    Eigen::MatrixXcd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = inner_product(modes[i], modes[j]);
    return g;
  }

  /// max |G - I| over all entries.
  double orthonormality_error() const {
    const auto g = gram();
    return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  }

  double max_offdiagonal() const {
    const auto g = gram();
    double m = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        if (i != j) m = std::max(m, std::abs(g(i, j)));
    return m;
  }

  /// Sub-alphabet by label, e.g. {"S3","S4","S5","S6"}.
  TemporalModeSet select(const std::vector<std::string>& names) const {
    TemporalModeSet out;
    for (const auto& name : names) {
      auto it = std::find(labels.begin(), labels.end(), name);
      require(it != labels.end(), ErrorKind::Domain, "mode " + name + " not in set");
      out.modes.push_back(modes[static_cast<std::size_t>(it - labels.begin())]);
      out.labels.push_back(name);
    }
    return out;
  }

  std::size_t index_of(const std::string& name) const {
    auto it = std::find(labels.begin(), labels.end(), name);
    require(it != labels.end(), ErrorKind::Domain, "mode " + name + " not in set");
    return static_cast<std::size_t>(it - labels.begin());
  }
};

struct JointSpectralAmplitude {
  TimeFrequencyGrid grid;
  double signal_wavelength_nm = 1532.1;
  /// Signed grid bins of each row (signal) and column (idler).
  std::vector<std::ptrdiff_t> signal_bins;
  std::vector<std::ptrdiff_t> idler_bins;
  std::vector<double> signal_axis;  // THz offsets
  std::vector<double> idler_axis;   // THz offsets
  Eigen::MatrixXcd amplitude;
};

struct SpdcParams {
  double pump_width_ps = 30.0;  // intensity FWHM of the super-Gaussian pump
  int pump_sg_order = 4;
  double filter_bw_nm = 2.4;  // hard square filter on the signal
  /// 1/sqrt(e) half-width of the Gaussian phase-matching function along f_s - f_i.
  /// Infinity means phase matching is ignored.
  double phasematch_bw_thz = 2.0;
  double signal_wavelength_nm = 1532.1;
};

namespace detail {

/// Super-Gaussian amplitude whose intensity exp(-ln2 (2t/T)^(2m)) has FWHM T.
inline double super_gaussian(double t, double fwhm, int order) {
  const double x = 2.0 * t / fwhm;
  return std::exp(-0.5 * std::log(2.0) * std::pow(x * x, order));
}

}  // namespace detail

/// Generic JSA builder: amplitude(fs, fi) = pump(fs + fi) * phasematch(fs, fi) for every
/// signal/idler bin pair. The signal filter is expressed by the choice of signal bins.
inline JointSpectralAmplitude build_jsa_from(
    const TimeFrequencyGrid& grid, double signal_wavelength_nm,
    std::vector<std::ptrdiff_t> signal_bins, std::vector<std::ptrdiff_t> idler_bins,
    const std::function<cplx(std::ptrdiff_t)>& pump_at_bin,
    const std::function<double(double, double)>& phasematch) {
  require(!signal_bins.empty() && !idler_bins.empty(), ErrorKind::Domain, "empty JSA axes");
  JointSpectralAmplitude jsa;
  jsa.grid = grid;
  jsa.signal_wavelength_nm = signal_wavelength_nm;
  jsa.signal_bins = std::move(signal_bins);
  jsa.idler_bins = std::move(idler_bins);
  const double df = grid.df();
  for (auto b : jsa.signal_bins) jsa.signal_axis.push_back(static_cast<double>(b) * df);
  for (auto b : jsa.idler_bins) jsa.idler_axis.push_back(static_cast<double>(b) * df);
  const auto rows = static_cast<Eigen::Index>(jsa.signal_bins.size());
  const auto cols = static_cast<Eigen::Index>(jsa.idler_bins.size());
  jsa.amplitude.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      jsa.amplitude(r, c) = pump_at_bin(jsa.signal_bins[r] + jsa.idler_bins[c]) *
                            phasematch(jsa.signal_axis[r], jsa.idler_axis[c]);
  return jsa;
}

/// JSA of a super-Gaussian-pumped source with a square signal filter.
inline JointSpectralAmplitude build_jsa(const SpdcParams& p,
                                        const TimeFrequencyGrid& grid = TimeFrequencyGrid::standard()) {
  require(p.pump_width_ps > 0.0 && p.filter_bw_nm > 0.0 && p.phasematch_bw_thz > 0.0,
          ErrorKind::Domain, "SPDC widths must be positive");
  require(p.pump_sg_order >= 1, ErrorKind::Domain, "super-Gaussian order must be >= 1");
  const double filter_thz = nm_to_thz_width(p.filter_bw_nm, p.signal_wavelength_nm);
  require(filter_thz < static_cast<double>(grid.n_samples) * grid.df() / 2.0, ErrorKind::Domain,
          "signal filter is wider than the grid bandwidth");

  // Pump spectrum on the grid lattice (exact for the discretised problem).
  const auto pump = ComplexEnvelope::from_function(grid, 775.0, [&](double t) {
    return cplx(detail::super_gaussian(t, p.pump_width_ps, p.pump_sg_order), 0.0);
  });
  const auto pump_spec = pump.spectrum();

  const double df = grid.df();
  const auto half_filter = static_cast<std::ptrdiff_t>(std::floor(filter_thz / 2.0 / df + 1e-9));
  require(half_filter >= 0, ErrorKind::Domain, "signal filter narrower than one bin");

  // Idler range: signal range padded by the pump's spectral extent.
  double total = 0.0;
  for (const auto& v : pump_spec) total += std::norm(v);
  const auto half = static_cast<std::ptrdiff_t>(grid.n_samples / 2);
  std::ptrdiff_t pad = 1;
  for (; pad < half / 2; ++pad) {
    double outside = 0.0;
    for (std::size_t k = 0; k < pump_spec.size(); ++k)
      if (std::abs(grid.signed_bin(k)) > pad) outside += std::norm(pump_spec[k]);
    if (outside <= 1e-14 * total) break;
  }

  std::vector<std::ptrdiff_t> sig, idl;
  for (std::ptrdiff_t k = -half_filter; k <= half_filter; ++k) sig.push_back(k);
  for (std::ptrdiff_t k = -half_filter - pad; k <= half_filter + pad; ++k) idl.push_back(k);

  const double bw = p.phasematch_bw_thz;
  auto phasematch = [bw](double fs, double fi) {
    if (std::isinf(bw)) return 1.0;
    const double x = (fs - fi) / bw;
    return std::exp(-0.5 * x * x);
  };
  auto pump_at = [&](std::ptrdiff_t b) -> cplx {
    if (b < -half || b >= half) return 0.0;
    return pump_spec[grid.bin_index(b)];
  };
  return build_jsa_from(grid.with_center(wavelength_to_thz(p.signal_wavelength_nm)),
                        p.signal_wavelength_nm, std::move(sig), std::move(idl), pump_at, phasematch);
}

struct SchmidtDecomposition {
  Eigen::VectorXd coefficients;   // descending, squares sum to one
  Eigen::MatrixXcd signal_vectors;  // columns, one per coefficient
  Eigen::MatrixXcd idler_vectors;
  Eigen::Index rank = 0;
};

/// SVD of the unit-Frobenius-normalized JSA. Each column pair's global phase is fixed so the
/// largest-magnitude signal entry is real and positive.
inline SchmidtDecomposition schmidt_svd(const JointSpectralAmplitude& jsa) {
  const double fro = jsa.amplitude.norm();
  require(std::isfinite(fro) && fro > 0.0, ErrorKind::Domain, "JSA has zero or non-finite norm");
  const Eigen::MatrixXcd a = jsa.amplitude / fro;
  auto svd = linalg::thin_svd(a);
  SchmidtDecomposition out;
  out.coefficients = std::move(svd.s);
  out.signal_vectors = std::move(svd.u);
  out.idler_vectors = std::move(svd.v);
  const double smax = out.coefficients.size() ? out.coefficients(0) : 0.0;
  for (Eigen::Index j = 0; j < out.coefficients.size(); ++j) {
    if (out.coefficients(j) > 1e-12 * smax) ++out.rank;
    Eigen::Index imax = 0;
    out.signal_vectors.col(j).cwiseAbs().maxCoeff(&imax);
    const cplx u = out.signal_vectors(imax, j);
    const cplx phase = std::abs(u) > 0.0 ? std::conj(u) / std::abs(u) : cplx(1.0);
    out.signal_vectors.col(j) *= phase;
    out.idler_vectors.col(j) *= phase;
  }
  return out;
}

/// Signal-side temporal modes of the JSA.
inline TemporalModeSet schmidt_decompose(const JointSpectralAmplitude& jsa, std::size_t n_modes) {
  const auto dec = schmidt_svd(jsa);
  require(n_modes >= 1 && static_cast<Eigen::Index>(n_modes) <= dec.rank, ErrorKind::Rank,
          "requested more Schmidt modes than the JSA rank (" + std::to_string(dec.rank) + ")");
  TemporalModeSet set;
  const auto& g = jsa.grid;
  const double scale = 1.0 / std::sqrt(g.df());
  for (std::size_t j = 0; j < n_modes; ++j) {
    std::vector<cplx> spec(g.n_samples);
    for (std::size_t r = 0; r < jsa.signal_bins.size(); ++r)
      spec[g.bin_index(jsa.signal_bins[r])] =
          dec.signal_vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * scale;
    auto mode = ComplexEnvelope::from_spectrum(g, std::move(spec), jsa.signal_wavelength_nm,
                                               EnvelopeUnits::SqrtPhotonRate);
    set.modes.push_back(mode.normalized());
    set.labels.push_back("S" + std::to_string(j + 1));
    set.schmidt_coefficients.push_back(dec.coefficients(static_cast<Eigen::Index>(j)));
  }
  for (Eigen::Index j = 0; j < dec.coefficients.size(); ++j)
    set.all_coefficients.push_back(dec.coefficients(j));
  return set;
}

/// sum_j c_j * mode_j over the first coeffs.size() modes.
inline ComplexEnvelope superpose(const TemporalModeSet& modes, const std::vector<cplx>& coeffs) {
  require(!coeffs.empty() && coeffs.size() <= modes.size(), ErrorKind::Domain,
          "superposition needs 1..N coefficients");
  double s = 0.0;
  for (const auto& c : coeffs) s += std::norm(c);
  require(std::abs(s - 1.0) <= 1e-12, ErrorKind::Normalization,
          "superposition coefficients are not normalized");
  auto out = modes[0].scaled(coeffs[0]);
  for (std::size_t j = 1; j < coeffs.size(); ++j) out = out + modes[j].scaled(coeffs[j]);
  return out;
}

/// S1..Sn plus the superpositions S5 = (S1+S2)/sqrt2 and S6 = (S1-S2)/sqrt2.
inline TemporalModeSet with_superpositions(const TemporalModeSet& schmidt) {
  TemporalModeSet out = schmidt;
  if (schmidt.size() < 2) return out;
  const double h = 1.0 / std::sqrt(2.0);
  const auto n = schmidt.size();
  out.modes.push_back(superpose(schmidt, {h, h}));
  out.labels.push_back("S" + std::to_string(n + 1));
  out.modes.push_back(superpose(schmidt, {h, -h}));
  out.labels.push_back("S" + std::to_string(n + 2));
  return out;
}

/// Number of intensity lobes: local maxima above `rel_threshold` of the peak, where two
/// maxima separated by a dip shallower than half the smaller one count once.
inline int count_lobes(const ComplexEnvelope& e, double rel_threshold = 0.05) {
  const auto s = e.samples();
  const std::size_t n = s.size();
  std::vector<double> inten(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    inten[i] = std::norm(s[i]);
    peak = std::max(peak, inten[i]);
  }
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (inten[i] > inten[i - 1] && inten[i] >= inten[i + 1] && inten[i] > rel_threshold * peak)
      maxima.push_back(i);
  if (maxima.empty()) return 0;
  int lobes = 1;
  std::size_t last = maxima[0];
  for (std::size_t m = 1; m < maxima.size(); ++m) {
    double dip = std::numeric_limits<double>::infinity();
    for (std::size_t i = last; i <= maxima[m]; ++i) dip = std::min(dip, inten[i]);
    if (dip < 0.5 * std::min(inten[last], inten[maxima[m]])) {
      ++lobes;
      last = maxima[m];
    } else if (inten[maxima[m]] > inten[last]) {
      last = maxima[m];
    }
  }
  return lobes;
}

}  // namespace tmqfc
