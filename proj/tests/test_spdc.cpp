#include <gtest/gtest.h>

#include <random>

#include "tmqfc/spdc.hpp"

using namespace tmqfc;

namespace {

const TemporalModeSet& default_modes() {
  static const TemporalModeSet set = with_superpositions(schmidt_decompose(build_jsa(SpdcParams{}), 4));
  return set;
}

Eigen::MatrixXcd random_unitary(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d;
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
  return qr.householderQ();
}

JointSpectralAmplitude matrix_jsa(const Eigen::MatrixXcd& a) {
  JointSpectralAmplitude jsa;
  jsa.grid = TimeFrequencyGrid::make(64, 200.0 / 64.0);
  for (Eigen::Index r = 0; r < a.rows(); ++r) jsa.signal_bins.push_back(r - a.rows() / 2);
  for (Eigen::Index c = 0; c < a.cols(); ++c) jsa.idler_bins.push_back(c - a.cols() / 2);
  jsa.amplitude = a;
  return jsa;
}

}  // namespace

TEST(Jsa, DefaultHasFourNearlyDegenerateModes) {
  const auto jsa = build_jsa(SpdcParams{});
  EXPECT_NEAR(jsa.amplitude.rows(), 61, 0);
  const auto set = schmidt_decompose(jsa, 4);
  for (int j = 1; j < 4; ++j) EXPECT_GT(set.schmidt_coefficients[j] / set.schmidt_coefficients[0], 0.9);
}

TEST(Jsa, CoefficientsDescendingAndNormalized) {
  const auto set = schmidt_decompose(build_jsa(SpdcParams{}), 4);
  double s = 0.0;
  for (std::size_t j = 0; j < set.all_coefficients.size(); ++j) {
    s += set.all_coefficients[j] * set.all_coefficients[j];
    if (j) { EXPECT_LE(set.all_coefficients[j], set.all_coefficients[j - 1]); }
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Jsa, FilterWiderThanGridRejected) {
  SpdcParams p;
  p.filter_bw_nm = 400.0;
  try {
    build_jsa(p, TimeFrequencyGrid::make(256, 200.0 / 256.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
  p = SpdcParams{};
  p.pump_width_ps = 0.0;
  EXPECT_THROW(build_jsa(p), Error);
}

TEST(Jsa, SpectrallyFlatPumpGivesRankOne) {
  // A pump that is impulsive in time has a flat spectrum; without phase matching the JSA
  // factorizes into filter(fs) x 1(fi).
  const auto g = TimeFrequencyGrid::standard();
  std::vector<std::ptrdiff_t> sig, idl;
  for (int k = -30; k <= 30; ++k) sig.push_back(k);
  for (int k = -60; k <= 60; ++k) idl.push_back(k);
  const auto jsa = build_jsa_from(g, 1532.1, sig, idl, [](std::ptrdiff_t) { return cplx(1.0); },
                                  [](double, double) { return 1.0; });
  const auto dec = schmidt_svd(jsa);
  EXPECT_EQ(dec.rank, 1);
  const auto set = schmidt_decompose(jsa, 1);
  EXPECT_NEAR(set.schmidt_coefficients[0], 1.0, 1e-12);
  try {
    schmidt_decompose(jsa, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Rank);
  }
}

TEST(Jsa, SmallMatrixMatchesKnownSvd) {
  std::mt19937_64 rng(11);
  const auto u = random_unitary(rng, 8), v = random_unitary(rng, 8);
  Eigen::VectorXd s(8);
  s << 0.8, 0.4, 0.3, 0.2, 0.15, 0.1, 0.05, 0.02;
  s /= s.norm();
  const Eigen::MatrixXcd a = u * s.asDiagonal() * v.adjoint();
  const auto dec = schmidt_svd(matrix_jsa(a));
  for (int j = 0; j < 8; ++j) {
    EXPECT_NEAR(dec.coefficients(j), s(j), 1e-12);
    // Singular vectors are unique up to a phase; compare after aligning it.
    const cplx ph = u.col(j).dot(dec.signal_vectors.col(j));
    EXPECT_NEAR(std::abs(ph), 1.0, 1e-12);
    EXPECT_LE((dec.signal_vectors.col(j) - u.col(j) * ph).norm(), 1e-12);
    EXPECT_LE((dec.idler_vectors.col(j) - v.col(j) * ph).norm(), 1e-12);
  }
}

TEST(Jsa, RandomReconstruction) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> d;
  Eigen::MatrixXcd a(16, 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) a(i, j) = cplx(d(rng), d(rng));
  const auto dec = schmidt_svd(matrix_jsa(a));
  const Eigen::MatrixXcd rec =
      dec.signal_vectors * dec.coefficients.asDiagonal() * dec.idler_vectors.adjoint();
  EXPECT_LE((rec - a / a.norm()).norm(), 1e-10);
}

TEST(Modes, OrthonormalAndHermiteLikeLobes) {
  const auto& set = default_modes();
  EXPECT_LE(set.select({"S1", "S2", "S3", "S4"}).orthonormality_error(), 1e-10);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(count_lobes(set[j]), j + 1) << set.labels[j];
}

TEST(Modes, SecondAlphabetOrthonormal) {
  EXPECT_LE(default_modes().select({"S3", "S4", "S5", "S6"}).orthonormality_error(), 1e-10);
}

TEST(Modes, ConfinedToWindow) {
  for (const auto& m : default_modes().modes) {
    double inside = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (std::abs(m.grid().time(i)) <= 25.0) inside += std::norm(m[i]) * m.grid().dt;
    EXPECT_GT(inside, 0.9999);
  }
}

TEST(Modes, SpectralPhaseConvention) {
  for (const auto& m : default_modes().select({"S1", "S2", "S3", "S4"}).modes) {
    const auto spec = m.spectrum();
    std::size_t imax = 0;
    for (std::size_t k = 0; k < spec.size(); ++k)
      if (std::abs(spec[k]) > std::abs(spec[imax])) imax = k;
    EXPECT_GT(spec[imax].real(), 0.0);
    EXPECT_NEAR(spec[imax].imag(), 0.0, 1e-12 * std::abs(spec[imax]));
  }
}

TEST(Superpose, Definitions) {
  const auto& set = default_modes();
  const auto s5 = set.modes[set.index_of("S5")];
  const auto s6 = set.modes[set.index_of("S6")];
  EXPECT_NEAR(inner_product(s5, set[0]).real(), 1.0 / std::sqrt(2.0), 1e-10);
  EXPECT_LE(std::abs(inner_product(s5, s6)), 1e-10);
  EXPECT_LE(std::abs(inner_product(set[0], set[1])), 1e-10);
  for (std::size_t i = 0; i < s5.size(); ++i) EXPECT_NEAR(std::norm(s5[i]), std::norm(s6[i]), 1e-10);
  const auto s1 = superpose(set, {1.0, 0.0});
  for (std::size_t i = 0; i < s1.size(); ++i) EXPECT_EQ(s1[i], set[0][i]);
  EXPECT_NEAR(s5.norm2(), 1.0, 1e-12);
}

TEST(Superpose, NonNormalizedCoefficientsRejected) {
  try {
    superpose(default_modes(), {0.7, 0.7});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Normalization);
  }
}

TEST(Modes, SelectUnknownThrows) { EXPECT_THROW(default_modes().select({"S9"}), Error); }
