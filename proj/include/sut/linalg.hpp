#pragma once

#include <Eigen/Dense>

namespace sut {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Lower Cholesky factor with an explicit positive-pivot contract:
// pivots <= 1e-12 * max diagonal raise NotPositiveDefinite (no regularization).
MatrixXd cholesky(const MatrixXd& a);

bool is_symmetric(const MatrixXd& a, double rel_tol = 1e-12);

// Split a dispersion matrix into correlation and diagonal scale,
// omega * omega_bar * omega = omega_in.
struct CovCor {
  MatrixXd omega_bar;
  VectorXd omega_diag;
};
CovCor cov_to_cor(const MatrixXd& omega);

MatrixXd kron(const MatrixXd& a, const MatrixXd& b);
VectorXd vec(const MatrixXd& a);
// K_d with K_d * vec(A) = vec(A^T) for d x d A.
MatrixXd commutation(int d);

// Symmetric PSD square root (used by the identifiable sub-model constructors).
MatrixXd sqrtm_spd(const MatrixXd& a);

}  // namespace sut
