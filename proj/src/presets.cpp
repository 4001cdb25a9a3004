#include "sut/presets.hpp"

#include <cmath>
#include <numbers>

#include "sut/errors.hpp"
#include "sut/rng.hpp"

namespace sut {

namespace {

MatrixXd contour_delta(int m) {
  MatrixXd dirs(2, 3);
  dirs.col(0) << -1.0, 2.0;
  dirs.col(1) << 1.0, 2.0;
  dirs.col(2) << 1.0, -6.0;
  MatrixXd delta(2, m);
  for (int j = 0; j < m; ++j) delta.col(j) = dirs.col(j).normalized();
  // scale so the largest eigenvalue of Delta^T Delta hits 0.8^2
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(delta.transpose() * delta);
  return delta * (0.8 / std::sqrt(es.eigenvalues().maxCoeff()));
}

}  // namespace

SutParams contour_preset(bool sut, int m) {
  if (m < 1 || m > 3) throw DimensionMismatch("contour preset: m must be 1, 2 or 3");
  return make_sut(VectorXd::Zero(2), MatrixXd::Identity(2, 2), contour_delta(m),
                  VectorXd::Zero(m), MatrixXd::Identity(m, m), sut ? 5.0 : kInf);
}

VectorXd contour_skew_direction(int m) {
  const MatrixXd delta = contour_delta(m);
  VectorXd dir = VectorXd::Zero(2);
  for (int j = 0; j < m; ++j) dir += delta.col(j);
  return dir;
}

HPsiParams mardia_sweep_family(int m) {
  if (m < 1) throw DimensionMismatch("mardia sweep family: m must be >= 1");
  HPsiParams hp;
  hp.xi = VectorXd::Zero(2);
  hp.psi = MatrixXd::Identity(2, 2);
  hp.tau = VectorXd::Zero(m);
  hp.gamma_bar = MatrixXd::Identity(m, m);
  hp.nu = 5.0;
  hp.h.resize(2, m);
  const double phi = 30.0 * std::numbers::pi / 180.0;
  const VectorXd base = (VectorXd(2) << 1.0, 1.0).finished().normalized();
  for (int k = 0; k < m; ++k) {
    const int step = (k + 1) / 2;
    const double ang = (k == 0) ? 0.0 : (k % 2 == 1 ? step * phi : -step * phi);
    const double c = std::cos(ang), s = std::sin(ang);
    hp.h(0, k) = c * base[0] - s * base[1];
    hp.h(1, k) = s * base[0] + c * base[1];
  }
  return hp;
}

HPsiParams parallel_loading_family(int m) {
  HPsiParams hp;
  hp.xi = VectorXd::Zero(2);
  hp.psi = MatrixXd::Identity(2, 2);
  hp.tau = VectorXd::Zero(m);
  hp.gamma_bar = MatrixXd::Identity(m, m);
  hp.nu = 5.0;
  const VectorXd dir = (VectorXd(2) << 1.0, 1.0).finished().normalized();
  hp.h.resize(2, m);
  for (int k = 0; k < m; ++k) hp.h.col(k) = dir;
  return hp;
}

HPsiParams spherical_loading_family(int m, std::uint64_t seed) {
  HPsiParams hp;
  hp.xi = VectorXd::Zero(2);
  hp.psi = MatrixXd::Identity(2, 2);
  hp.tau = VectorXd::Zero(m);
  hp.gamma_bar = MatrixXd::Identity(m, m);
  hp.nu = 5.0;
  hp.h.resize(2, m);
  // uniform directions in antithetic pairs: sign-balanced so the shared
  // mixing factor cannot pin the correlation away from zero
  Rng rng(seed);
  VectorXd dir(2);
  for (int k = 0; k < m; ++k) {
    if (k % 2 == 0) {
      do {
        dir[0] = rng.normal();
        dir[1] = rng.normal();
      } while (dir.norm() < 1e-12);
      dir.normalize();
      hp.h.col(k) = dir;
    } else {
      hp.h.col(k) = -dir;
    }
  }
  return hp;
}

}  // namespace sut
