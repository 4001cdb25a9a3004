#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sut/special.hpp"

// Randomized quasi-Monte-Carlo engines: the separation-of-variables
// multivariate t / normal CDF and the truncated-t moment integrator built
// on the same transform. Deterministic for a fixed config (serial
// accumulation, no shared state); error estimates are 3-sigma bounds over
// the random shifts.

namespace sut {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct QmcConfig {
  int points = 1 << 13;
  int randomizations = 8;
  std::uint64_t seed = 0x5eed0057ULL;

  QmcConfig() = default;
  QmcConfig(int pts, int rand, std::uint64_t sd) : points(pts), randomizations(rand), seed(sd) {}
};

struct CdfResult {
  double value = 0.0;
  double error_estimate = 0.0;  // 3-sigma randomized-QMC bound
  long points_used = 0;
};

// P(X <= upper) for X ~ T_d(0, sigma, nu); nu = +inf selects the normal.
// Components with upper = +inf are marginalized out; any -inf gives 0.
// Dimensions 2 and 3 are evaluated by deterministic conditional quadrature
// (TVPACK-style dof recursion, ~1e-10); higher dimensions use the
// randomized Kronecker-lattice rule with a 3-sigma error estimate.
CdfResult mvt_cdf(const VectorXd& upper, const MatrixXd& sigma, double nu, const QmcConfig& cfg);

// The raw lattice engine for any dimension (used by tests to cross-check the
// quadrature reductions).
CdfResult mvt_cdf_qmc(const VectorXd& upper, const MatrixXd& sigma, double nu,
                      const QmcConfig& cfg);

// Multivariate t density t_d(y; xi, omega, nu); nu = +inf gives the normal.
double mvt_pdf(const VectorXd& y, const VectorXd& xi, const MatrixXd& omega, double nu);
double mvt_logpdf(const VectorXd& y, const VectorXd& xi, const MatrixXd& omega, double nu);

// Raw moments of U* = (U0 | U0 + tau > 0), U0 ~ T_m(0, disp, nu), up to
// max_order (1..4), in Kronecker layout (m3 is m^2 x m, m4 is m^2 x m^2).
// Per-randomization estimates are kept so downstream assemblies can
// propagate errors through arbitrary linear maps.
struct TruncRep {
  double prob = 0.0;
  VectorXd m1;
  MatrixXd m2, m3, m4;
};

struct TruncMomentsRaw {
  int m = 0;
  double nu = 0.0;
  double prob = 0.0, prob_se = 0.0;
  VectorXd m1, m1_se;
  MatrixXd m2, m2_se, m3, m3_se, m4, m4_se;
  std::vector<TruncRep> reps;
};

TruncMomentsRaw trunc_raw_moments(const VectorXd& tau, const MatrixXd& disp, double nu,
                                  const QmcConfig& cfg, int max_order);

}  // namespace sut
