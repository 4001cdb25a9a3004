#pragma once

#include "sut/params.hpp"
#include "sut/qmc.hpp"

namespace sut {

// Numerical density of Q_Y = (Y-xi)^T Omega^{-1} (Y-xi): radial F law times a
// fixed-seed sphere average of the latent orthant probability.
struct QuadFormEstimate {
  VectorXd grid;
  VectorXd density;
  VectorXd se;          // 3-sigma, sphere MC + latent cdf propagation
  MatrixXd lambda_bar;  // Delta^T Ob^{-1} Ob^{1/2} (Cholesky root)
  MatrixXd upsilon;     // gamma_bar - Delta^T Ob^{-1} Delta
};

// Empty grid selects 200 points across the central F mass [q_{0.001}, q_{0.999}].
QuadFormEstimate quadform_pdf(const SutParams& p, VectorXd grid, const QmcConfig& cfg = {},
                              int sphere_samples = 4096);

struct InvarianceReport {
  bool invariant = false;          // delta = 0 and tau = 0
  MatrixXd cov_witness;            // Cov(U1, U0* - Lambda U1) = -Delta
  bool chi_square_radial = false;  // Delta gamma_bar^{-1} = 0 with tau = 0
  std::string note;
};
InvarianceReport invariance_check(const SutParams& p);

}  // namespace sut
