#include <gtest/gtest.h>

#include <random>

#include "tmqfc/field.hpp"

using namespace tmqfc;

namespace {

ComplexEnvelope random_envelope(std::mt19937_64& rng, const TimeFrequencyGrid& g) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double t0 = 5.0 + 10.0 * std::uniform_real_distribution<double>(0, 1)(rng);
  return ComplexEnvelope::from_function(g, 1532.1, [&](double t) {
    return cplx(n(rng), n(rng)) * std::exp(-0.5 * t * t / (t0 * t0));
  });
}

ComplexEnvelope gaussian(const TimeFrequencyGrid& g, double t0, double centre = 0.0) {
  return ComplexEnvelope::from_function(g, 1532.1, [=](double t) {
    const double x = (t - centre) / t0;
    return cplx(std::exp(-0.5 * x * x), 0.0);
  });
}

}  // namespace

TEST(Grid, DefaultsAndReciprocity) {
  const auto g = TimeFrequencyGrid::standard();
  EXPECT_EQ(g.n_samples, 4096u);
  EXPECT_DOUBLE_EQ(g.window(), 200.0);
  EXPECT_NEAR(static_cast<double>(g.n_samples) * g.dt * g.df(), 1.0, 1e-15);
  EXPECT_NEAR(g.df(), 0.005, 1e-15);
  EXPECT_THROW(TimeFrequencyGrid::make(1000, 0.1), Error);
  EXPECT_THROW(TimeFrequencyGrid::make(1024, -0.1), Error);
}

TEST(Grid, BinIndexing) {
  const auto g = TimeFrequencyGrid::make(16, 0.5);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(g.bin_index(g.signed_bin(k)), k);
  EXPECT_EQ(g.signed_bin(15), -1);
  EXPECT_DOUBLE_EQ(g.freq(8), -8 * g.df());
}

TEST(Envelope, SpectrumRoundTrip) {
  std::mt19937_64 rng(1);
  const auto g = TimeFrequencyGrid::standard();
  const auto e = random_envelope(rng, g);
  const auto back = ComplexEnvelope::from_spectrum(g, e.spectrum(), e.wavelength_nm());
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    err += std::norm(back[i] - e[i]);
    ref += std::norm(e[i]);
  }
  EXPECT_LE(std::sqrt(err / ref), 1e-12);
}

TEST(Envelope, SpectrumOfGaussianMatchesContinuousTransform) {
  // FT of exp(-t^2/2) is sqrt(2 pi) exp(-2 pi^2 f^2).
  const auto g = TimeFrequencyGrid::standard();
  const auto spec = gaussian(g, 1.0).spectrum();
  for (std::size_t k : {0u, 3u, 40u, 4090u}) {
    const double f = g.freq(k);
    EXPECT_NEAR(spec[k].real(), std::sqrt(kTwoPi) * std::exp(-2.0 * kPi * kPi * f * f), 1e-12);
    EXPECT_NEAR(spec[k].imag(), 0.0, 1e-12);
  }
}

TEST(Envelope, Parseval) {
  std::mt19937_64 rng(2);
  const auto g = TimeFrequencyGrid::standard();
  for (int trial = 0; trial < 5; ++trial) {
    const auto e = random_envelope(rng, g);
    double fsum = 0.0;
    for (const auto& v : e.spectrum()) fsum += std::norm(v);
    fsum *= g.df();
    EXPECT_NEAR(fsum / e.norm2(), 1.0, 1e-12);
  }
}

TEST(InnerProduct, NormalizedSelfOverlapIsOne) {
  std::mt19937_64 rng(3);
  const auto e = random_envelope(rng, TimeFrequencyGrid::standard()).normalized();
  const auto ip = inner_product(e, e);
  EXPECT_NEAR(ip.real(), 1.0, 1e-12);
  EXPECT_NEAR(ip.imag(), 0.0, 1e-12);
}

TEST(InnerProduct, SesquilinearAndConjugateSymmetric) {
  std::mt19937_64 rng(4);
  const auto g = TimeFrequencyGrid::standard();
  const auto a = random_envelope(rng, g), b = random_envelope(rng, g), c = random_envelope(rng, g);
  const cplx alpha(0.3, -1.2), beta(-0.7, 0.4);
  const auto lin = inner_product(a, b.scaled(alpha) + c.scaled(beta));
  const auto expect = alpha * inner_product(a, b) + beta * inner_product(a, c);
  EXPECT_LE(std::abs(lin - expect), 1e-10 * std::abs(expect));
  const auto anti = inner_product(b.scaled(alpha), a);
  EXPECT_LE(std::abs(anti - std::conj(alpha) * inner_product(b, a)), 1e-10 * std::abs(anti));
  EXPECT_LE(std::abs(inner_product(a, b) - std::conj(inner_product(b, a))), 1e-12 * std::abs(inner_product(a, b)));
}

TEST(InnerProduct, GridMismatchThrows) {
  const auto a = ComplexEnvelope::zeros(TimeFrequencyGrid::standard(), 1532.1);
  const auto b = ComplexEnvelope::zeros(TimeFrequencyGrid::make(1024, 0.1), 1532.1);
  try {
    inner_product(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
  }
}

TEST(Delay, ZeroIsIdentity) {
  std::mt19937_64 rng(5);
  const auto e = random_envelope(rng, TimeFrequencyGrid::standard());
  const auto d = apply_delay(e, 0.0);
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_EQ(d[i], e[i]);
}

TEST(Delay, GaussianPeakMoves) {
  const auto g = TimeFrequencyGrid::standard();
  const auto d = apply_delay(gaussian(g, 2.0), 1.3);
  EXPECT_NEAR(peak_time(d), 1.3, g.dt / 10.0);
}

TEST(Delay, NormPreservedAndInvertible) {
  std::mt19937_64 rng(6);
  const auto e = random_envelope(rng, TimeFrequencyGrid::standard());
  const auto d = apply_delay(e, 3.7);
  EXPECT_NEAR(d.norm2() / e.norm2(), 1.0, 1e-12);
  const auto back = apply_delay(d, -3.7);
  double err = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) err = std::max(err, std::abs(back[i] - e[i]));
  EXPECT_LE(err, 1e-12);
}

TEST(Delay, WrapAroundRejected) {
  const auto e = gaussian(TimeFrequencyGrid::standard(), 1.0);
  try {
    apply_delay(e, 50.0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::Domain);
  }
}

TEST(SpectralPhase, ZeroAndPi) {
  std::mt19937_64 rng(7);
  const auto e = random_envelope(rng, TimeFrequencyGrid::standard());
  const auto same = apply_spectral_phase(e, [](double) { return 0.0; });
  const auto neg = apply_spectral_phase(e, [](double) { return kPi; });
  for (std::size_t i = 0; i < e.size(); ++i) {
    EXPECT_LE(std::abs(same[i] - e[i]), 1e-12);
    EXPECT_LE(std::abs(neg[i] + e[i]), 1e-12);
  }
}

TEST(SpectralPhase, ChirpedGaussianWidth) {
  // A Gaussian exp(-t^2/2T0^2) with spectral phase phi2 w^2 / 2 has intensity RMS width
  // (T0/sqrt2) sqrt(1 + (phi2/T0^2)^2).
  const auto g = TimeFrequencyGrid::standard();
  const double t0 = 1.0, phi2 = 10.0;
  const auto e = gaussian(g, t0);
  const auto c = apply_spectral_phase(e, [=](double f) {
    const double w = kTwoPi * f;
    return 0.5 * phi2 * w * w;
  });
  const double expect = t0 / std::sqrt(2.0) * std::sqrt(1.0 + std::pow(phi2 / (t0 * t0), 2));
  EXPECT_NEAR(rms_width(c) / expect, 1.0, 0.01);
  EXPECT_NEAR(c.norm2() / e.norm2(), 1.0, 1e-12);
}

TEST(Resample, RoundTripOnBandlimitedPulse) {
  const auto fine = TimeFrequencyGrid::standard();
  const auto coarse = TimeFrequencyGrid::make(512, 200.0 / 512.0);
  const auto e = gaussian(fine, 4.0);
  const auto c = resample(e, coarse);
  const auto back = resample(c, fine);
  EXPECT_NEAR(c.norm2() / e.norm2(), 1.0, 1e-12);
  double err = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) err = std::max(err, std::abs(back[i] - e[i]));
  EXPECT_LE(err, 1e-12);
  EXPECT_THROW(resample(gaussian(fine, 0.05), coarse), Error);
}

TEST(Units, ConversionIsExplicitScale) {
  const auto g = TimeFrequencyGrid::standard();
  const auto e = gaussian(g, 3.0).with_units(EnvelopeUnits::SqrtWatt);
  const auto p = convert_units(e, EnvelopeUnits::SqrtPhotonRate);
  const double hv = photon_energy(1532.1);
  EXPECT_NEAR(e.norm2() / p.norm2(), hv * 1e12, 1e-12 * hv * 1e12);
  const auto back = convert_units(p, EnvelopeUnits::SqrtWatt);
  EXPECT_NEAR(back.norm2() / e.norm2(), 1.0, 1e-12);
}

TEST(Helpers, PhaseWrapAndWavelengths) {
  EXPECT_DOUBLE_EQ(wrap_phase(kPi), kPi);
  EXPECT_NEAR(wrap_phase(-kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_phase(3.0 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(sum_frequency_wavelength(1532.1, 1556.6), 772.12, 0.01);
  EXPECT_NEAR(nm_to_thz_width(2.4, 1532.1), 0.3065, 1e-3);
}
