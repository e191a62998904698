#pragma once

#include <Eigen/Dense>

namespace tmqfc::linalg {

struct ThinSvd {
  Eigen::MatrixXcd u;
  Eigen::VectorXd s;
  Eigen::MatrixXcd v;
};

/// Thin SVD. BDCSVD can return non-finite vectors for exactly rank-deficient complex input,
/// in which case the Jacobi solver is used instead.
inline ThinSvd thin_svd(const Eigen::MatrixXcd& a) {
  Eigen::BDCSVD<Eigen::MatrixXcd> bdc(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (bdc.matrixU().allFinite() && bdc.matrixV().allFinite() && bdc.singularValues().allFinite())
    return {bdc.matrixU(), bdc.singularValues(), bdc.matrixV()};
  Eigen::JacobiSVD<Eigen::MatrixXcd> jac(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {jac.matrixU(), jac.singularValues(), jac.matrixV()};
}

}  // namespace tmqfc::linalg
