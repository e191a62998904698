#pragma once

// Figures of merit computed from conversion-efficiency rows and matrices.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tmqfc/error.hpp"

namespace tmqfc {

/// sigma_k = eta_kk / sum_j eta_kj.
inline double separability(std::span<const double> eta_row, std::size_t k) {
  require(k < eta_row.size(), ErrorKind::Domain, "separability index outside the row");
  double sum = 0.0;
  for (double v : eta_row) {
    require(v >= 0.0 && std::isfinite(v), ErrorKind::Domain, "efficiencies must be non-negative");
    sum += v;
  }
  require(sum > 0.0, ErrorKind::Domain, "separability undefined for an all-zero row");
  require(eta_row[k] > 0.0, ErrorKind::Domain, "separability undefined for eta_kk = 0");
  return eta_row[k] / sum;
}

/// varsigma_k = eta_kk * sigma_k.
inline double selectivity(std::span<const double> eta_row, std::size_t k) {
  return eta_row[k] * separability(eta_row, k);
}

using Matrix2 = std::array<std::array<double, 2>, 2>;

struct QkdFigures {
  double sigma2_key = 0.0;    // 2x2 separability of the key-generation pump
  double sigma2_check = 0.0;  // 2x2 separability of the error-monitoring pump
  double eta_ov = 0.0;        // overall receiver efficiency
  double qber = 0.0;          // bit-error contribution from imperfect separability
};

/// Asymmetric-BB84 receiver figures. Row 0 of each matrix is the pump whose mode is
/// measured (e.g. key basis [[eta55, eta56], [eta65, eta66]]).
inline QkdFigures qkd_figures(const Matrix2& eta_key, const Matrix2& eta_check) {
  for (const auto* m : {&eta_key, &eta_check})
    for (const auto& row : *m)
      for (double v : row)
        require(v >= 0.0 && v <= 1.0, ErrorKind::Domain, "QKD efficiencies must lie in [0,1]");
  QkdFigures q;
  q.sigma2_key = separability(eta_key[0], 0);
  q.sigma2_check = separability(eta_check[0], 0);
  q.eta_ov = eta_key[0][0] * q.sigma2_key;
  q.qber = 1.0 - q.sigma2_check;
  return q;
}

/// Explicit sub-matrix extraction: rows/cols index into a larger eta matrix.
inline Matrix2 submatrix2(const std::vector<std::vector<double>>& eta, std::array<std::size_t, 2> rows,
                          std::array<std::size_t, 2> cols) {
  Matrix2 m{};
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      require(rows[r] < eta.size() && cols[c] < eta[rows[r]].size(), ErrorKind::Domain,
              "sub-matrix index outside the eta matrix");
      m[r][c] = eta[rows[r]][cols[c]];
    }
  return m;
}

}  // namespace tmqfc
