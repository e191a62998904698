#include <gtest/gtest.h>

#include "tmqfc/interferometry.hpp"
#include "tmqfc/spdc.hpp"

using namespace tmqfc;

namespace {

const TemporalModeSet& modes() {
  static const auto set = with_superpositions(schmidt_decompose(build_jsa(SpdcParams{}), 4));
  return set;
}

ComplexEnvelope gaussian(double width, double centre = 0.0) {
  return ComplexEnvelope::from_function(TimeFrequencyGrid::standard(), 1532.1, [=](double t) {
           const double x = (t - centre) / width;
           return cplx(std::exp(-0.5 * x * x), 0.0);
         }).normalized();
}

}  // namespace

TEST(Visibility, IdenticalPulsesGiveUnity) {
  const auto& s = modes();
  for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(visibility(s[j], s[j], 0.0), 1.0, 1e-12);
}

TEST(Visibility, OrthogonalModesGiveZero) {
  const auto& s = modes();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) { EXPECT_LE(visibility(s[i], s[j], 0.0), 1e-10); }
  const auto b = s.select({"S3", "S4", "S5", "S6"});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) { EXPECT_LE(visibility(b[i], b[j], 0.0), 1e-10); }
}

TEST(Visibility, GaussianDelayOracle) {
  // |<g, g(t - tau)>| = exp(-tau^2 / (4 w^2)) for unit-norm Gaussians of width w.
  const double w = 2.0;
  const auto a = gaussian(w);
  for (double tau : {0.0, 0.5, 1.3, 3.0}) EXPECT_NEAR(visibility(a, a, tau), std::exp(-tau * tau / (4 * w * w)), 1e-10);
}

TEST(Visibility, UnequalArmPowers) {
  const auto a = gaussian(2.0);
  const auto b = a.scaled(0.5);
  EXPECT_NEAR(visibility(a, b, 0.0), 2.0 * 0.5 / 1.25, 1e-12);
  EXPECT_THROW(visibility(a, a.scaled(0.0), 0.0), Error);
}

TEST(Fringe, MatchesOverlapFormula) {
  const auto& s = modes();
  const ComplexEnvelope pair[][2] = {{s[0], s[0]}, {s[0], s[4]}, {s[2], apply_delay(s[2], 0.7)}};
  for (const auto& p : pair) {
    const double v = visibility(p[0], p[1], 0.3);
    EXPECT_NEAR(fringe_visibility(p[0], p[1], 0.3), v, 1e-9);
    FringeOptions fit;
    fit.method = FringeMethod::Fit;
    EXPECT_NEAR(fringe_visibility(p[0], p[1], 0.3, fit), v, 1e-9);
  }
}

TEST(Fringe, ImperfectDissimilarModesStayBelowFloor) {
  const auto& s = modes();
  FringeOptions o;
  o.noise_sigma = 0.01;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ShapingImperfection imp;
    imp.seed = seed;
    const auto a = apply_imperfection(s[3], imp);
    imp.seed = seed + 100;
    const auto b = apply_imperfection(s[2], imp);
    o.seed = seed;
    EXPECT_LT(fringe_visibility(a, b, 0.0, o), 0.04);
  }
}

TEST(Imperfection, KeepsNormAndSupport) {
  const auto& s = modes();
  const auto e = apply_imperfection(s[1], {});
  EXPECT_NEAR(e.norm2(), 1.0, 1e-12);
  const auto a = s[1].spectrum(), b = e.spectrum();
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] == cplx(0.0)) { EXPECT_EQ(b[k], cplx(0.0)); }
  EXPECT_GT(std::norm(inner_product(s[1], e)), 0.999);
}

TEST(Align, RecoversInjectedShifts) {
  const auto& all = modes();
  auto set = all.select({"S3", "S4", "S5", "S6"});
  set.modes[0] = apply_delay(set.modes[0], 1.3);
  set.modes[3] = apply_delay(set.modes[3], 1.8);
  for (const char* ref : {"S3", "S4", "S5", "S6"}) {
    const auto al = align_set(set, all[all.index_of(ref)]);
    EXPECT_NEAR(al.shifts[0], 1.3, 0.05) << ref;
    EXPECT_NEAR(al.shifts[1], 0.0, 0.05) << ref;
    EXPECT_NEAR(al.shifts[2], 0.0, 0.05) << ref;
    EXPECT_NEAR(al.shifts[3], 1.8, 0.05) << ref;
  }
}

TEST(Align, SimilarModeUsesMaximum) {
  const auto& all = modes();
  TemporalModeSet set;
  set.modes = {apply_delay(all[0], -0.75)};
  set.labels = {"S1"};
  const auto al = align_set(set, all[0]);
  EXPECT_TRUE(al.used_maximum[0]);
  EXPECT_NEAR(al.shifts[0], -0.75, 0.02);
  EXPECT_NEAR(visibility(all[0], apply_delay(set.modes[0], -al.shifts[0]), 0.0), 1.0, 1e-3);
}

TEST(Align, Errors) {
  const auto& all = modes();
  EXPECT_THROW(align_set(all.select({"S1"}), all[0], {0.0, 0.1}), Error);
  EXPECT_THROW(align_set(all.select({"S1"}), all[0], {0.0, 0.2, 0.1}), Error);
  TemporalModeSet far;
  far.modes = {apply_delay(all[0], 1.0)};
  far.labels = {"S1"};
  // Maximum on the last sample of a +-1 ps scan.
  EXPECT_THROW(align_set(far, all[0], default_tau_grid(1.0, 0.1)), Error);
}
