#pragma once

#include "sut/params.hpp"

namespace sut {

struct PartitionSpec {
  int d1 = 0;
  int d2 = 0;
};

// Y_A = A Y + b with rank(A) = rows(A) <= d; tau, gamma_bar, nu unchanged.
SutParams linear(const SutParams& p, const MatrixXd& a, const VectorXd& b);

// Marginal of the first (which = 1) or second (which = 2) block.
SutParams marginal(const SutParams& p, const PartitionSpec& spec, int which);

// Sum of the two equal halves of a SUT over R^{2d}; equals linear with (I | I).
SutParams add_marginals(const SutParams& p, const PartitionSpec& spec);

struct ConditionalParams {
  SutParams params;  // law of (Y2 | Y1 = y1): dof nu + d1
  double alpha = 1.0, q_y1 = 0.0;
  VectorXd xi_2_1;
  MatrixXd omega_2_1;   // before the alpha scaling
  MatrixXd delta_2_1;
  VectorXd tau_2_1;     // before the alpha^{-1/2} scaling
  MatrixXd gamma_bar_2_1;
  VectorXd gamma_scale_2_1;
};
ConditionalParams conditional(const SutParams& p, const PartitionSpec& spec,
                              const VectorXd& y1);

// (Y2 | Y1 > 0): latent dimension grows to d1 + m.
SutParams condition_positive(const SutParams& p, const PartitionSpec& spec);

// Collapse redundant leading latent dimensions: requires delta = (0, delta2),
// tau = (0, tau2), gamma_bar block-diagonal, to tolerance 1e-12.
SutParams reduce_latent(const SutParams& p, int m1);

// Canonical transform concentrating all skewness in component 1. C is
// (d - rank(omega2 delta2)) x d with orthonormal annihilating rows; exists
// only when that rank is at most d-2 (or delta2 = 0, giving C = I).
struct CanonicalResult {
  MatrixXd c;
  SutParams params;
};
CanonicalResult canonical(const SutParams& p);

}  // namespace sut
