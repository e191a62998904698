#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "tmqfc/metrics.hpp"

using namespace tmqfc;

namespace {
const std::vector<double> kRow = {0.94, 0.075, 0.037, 0.015};
}

TEST(Metrics, SeparabilityOfQuotedRow) {
  const double expect = 0.94 / (0.94 + 0.075 + 0.037 + 0.015);
  EXPECT_NEAR(separability(kRow, 0), expect, 1e-15);
  EXPECT_NEAR(separability(kRow, 0), 0.8809, 1e-4);
}

TEST(Metrics, SeparabilityTrivialRows) {
  EXPECT_DOUBLE_EQ(separability(std::vector<double>{0.3, 0, 0, 0}, 0), 1.0);
  EXPECT_DOUBLE_EQ(separability(std::vector<double>{0.2, 0.2, 0.2, 0.2}, 2), 0.25);
}

TEST(Metrics, Selectivity) {
  EXPECT_NEAR(selectivity(kRow, 0), 0.94 * 0.94 / 1.067, 1e-12);
  EXPECT_NEAR(selectivity(kRow, 0), 0.828, 1e-3);
  EXPECT_DOUBLE_EQ(selectivity(std::vector<double>{1, 0, 0, 0}, 0), 1.0);
  EXPECT_DOUBLE_EQ(selectivity(std::vector<double>{0.5, 0.5}, 0), 0.25);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(separability(std::vector<double>{0, 0, 0}, 0), Error);
  EXPECT_THROW(separability(std::vector<double>{0.0, 0.5}, 0), Error);
  EXPECT_THROW(separability(std::vector<double>{0.5, -0.1}, 0), Error);
  EXPECT_THROW(separability(std::vector<double>{0.5, 0.1}, 2), Error);
}

TEST(Metrics, RowScalingProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> row(4);
    for (auto& v : row) v = u(rng);
    const double c = 0.1 + 2 * u(rng);
    auto scaled = row;
    for (auto& v : scaled) v *= c;
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(separability(scaled, k), separability(row, k), 1e-13);
      EXPECT_NEAR(selectivity(scaled, k), c * selectivity(row, k), 1e-12);
    }
  }
}

TEST(Metrics, MonotonicityProperty) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> row(4);
    for (auto& v : row) v = u(rng);
    const std::size_t k = trial % 4;
    const double base = separability(row, k);
    for (std::size_t j = 0; j < 4; ++j) {
      auto bumped = row;
      bumped[j] += 0.05;
      if (j == k) EXPECT_GT(separability(bumped, k), base);
      else EXPECT_LT(separability(bumped, k), base);
    }
  }
}

TEST(Metrics, QkdFiguresFromQuotedInputs) {
  // Key basis: eta55 back-computed from eta_ov / sigma5, off-diagonal fixed by sigma = 0.890.
  const double eta55 = 0.817 / 0.890;
  const double eta56 = eta55 * (1.0 / 0.890 - 1.0);
  const double eta11 = 0.9;
  const double eta12 = eta11 * (1.0 / 0.903 - 1.0);
  const Matrix2 key = {{{eta55, eta56}, {eta56, eta55}}};
  const Matrix2 check = {{{eta11, eta12}, {eta12, eta11}}};
  const auto q = qkd_figures(key, check);
  EXPECT_NEAR(q.sigma2_key, 0.890, 1e-12);
  EXPECT_NEAR(q.sigma2_check, 0.903, 1e-12);
  EXPECT_NEAR(q.eta_ov, 0.817, 1e-12);
  EXPECT_NEAR(q.qber, 0.097, 1e-12);
}

TEST(Metrics, QkdPerfectMatrices) {
  const Matrix2 key = {{{0.7, 0.0}, {0.0, 0.7}}};
  const Matrix2 check = {{{0.6, 0.0}, {0.0, 0.6}}};
  const auto q = qkd_figures(key, check);
  EXPECT_DOUBLE_EQ(q.eta_ov, 0.7);
  EXPECT_DOUBLE_EQ(q.qber, 0.0);
  EXPECT_THROW(qkd_figures(Matrix2{}, check), Error);
  EXPECT_THROW(qkd_figures({{{1.2, 0.0}, {0.0, 1.0}}}, check), Error);
}

TEST(Metrics, Submatrix) {
  const std::vector<std::vector<double>> eta = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  const auto m = submatrix2(eta, {2, 0}, {1, 2});
  EXPECT_EQ(m[0][0], 8);
  EXPECT_EQ(m[0][1], 9);
  EXPECT_EQ(m[1][0], 2);
  EXPECT_EQ(m[1][1], 3);
  EXPECT_THROW(submatrix2(eta, {0, 3}, {0, 1}), Error);
}
