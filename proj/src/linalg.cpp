#include "sut/linalg.hpp"

#include <cmath>

#include "sut/errors.hpp"

namespace sut {

bool is_symmetric(const MatrixXd& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

MatrixXd cholesky(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw DimensionMismatch("cholesky: matrix not square");
  if (!a.allFinite()) throw NonFiniteInput("cholesky: non-finite entries");
  if (!is_symmetric(a)) throw NonFiniteInput("cholesky: matrix not symmetric");
  if (n == 0) return MatrixXd(0, 0);
  const double pivot_floor = 1e-12 * std::max(a.diagonal().maxCoeff(), 0.0);
  MatrixXd L = MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double s = a(j, j);
    for (int k = 0; k < j; ++k) s -= L(j, k) * L(j, k);
    if (!(s > pivot_floor))
      throw NotPositiveDefinite(j, "cholesky: pivot " + std::to_string(j) + " not positive");
    L(j, j) = std::sqrt(s);
    for (int i = j + 1; i < n; ++i) {
      double t = a(i, j);
      for (int k = 0; k < j; ++k) t -= L(i, k) * L(j, k);
      L(i, j) = t / L(j, j);
    }
  }
  return L;
}

CovCor cov_to_cor(const MatrixXd& omega) {
  const int n = static_cast<int>(omega.rows());
  if (!is_symmetric(omega)) throw NonFiniteInput("cov_to_cor: matrix not symmetric");
  for (int i = 0; i < n; ++i)
    if (!(omega(i, i) > 0.0))
      throw NotPositiveDefinite(i, "cov_to_cor: nonpositive diagonal entry");
  cholesky(omega);  // full PD check
  CovCor out;
  out.omega_diag = omega.diagonal().cwiseSqrt();
  const VectorXd inv = out.omega_diag.cwiseInverse();
  out.omega_bar = inv.asDiagonal() * omega * inv.asDiagonal();
  out.omega_bar.diagonal().setOnes();
  return out;
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

VectorXd vec(const MatrixXd& a) {
  return Eigen::Map<const VectorXd>(a.data(), a.size());
}

MatrixXd commutation(int d) {
  MatrixXd K = MatrixXd::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) K(i * d + j, j * d + i) = 1.0;
  return K;
}

MatrixXd sqrtm_spd(const MatrixXd& a) {
  if (!is_symmetric(a)) throw NonFiniteInput("sqrtm_spd: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw NotPositiveDefinite(0, "sqrtm_spd: matrix not PSD");
  const VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace sut
