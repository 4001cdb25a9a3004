#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sut/special.hpp"

namespace sut {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Full SUT parameter tuple. m = 0 encodes the symmetric t/normal case
// (density and cdf skip the latent factor entirely).
struct SutParams {
  VectorXd xi;         // location, R^d
  MatrixXd omega;      // dispersion, d x d
  MatrixXd delta;      // skewness, d x m
  VectorXd tau;        // latent truncation, R^m
  MatrixXd gamma_bar;  // latent correlation, m x m
  double nu = kInf;    // dof, (0, inf]

  int d() const { return static_cast<int>(xi.size()); }
  int m() const { return static_cast<int>(tau.size()); }
  VectorXd omega_scale() const { return omega.diagonal().cwiseSqrt(); }
  MatrixXd omega_bar() const;
  // [[gamma_bar, delta^T], [delta, omega_bar]], the (m+d) correlation matrix.
  MatrixXd extended_corr() const;
};

// Every violated invariant, not just the first; empty means valid.
std::vector<std::string> validate(const SutParams& p);
void require_valid(const SutParams& p);  // throws ValidationFailure

// --- sub-model constructors ------------------------------------------------

SutParams make_sut(VectorXd xi, MatrixXd omega, MatrixXd delta, VectorXd tau,
                   MatrixXd gamma_bar, double nu);
SutParams make_sun(VectorXd xi, MatrixXd omega, MatrixXd delta, VectorXd tau,
                   MatrixXd gamma_bar);
SutParams make_est(VectorXd xi, MatrixXd omega, VectorXd delta_col, double tau, double nu);
SutParams make_esn(VectorXd xi, MatrixXd omega, VectorXd delta_col, double tau);
SutParams make_st(VectorXd xi, MatrixXd omega, VectorXd delta_col, double nu);
SutParams make_sn(VectorXd xi, MatrixXd omega, VectorXd delta_col);
SutParams make_t(VectorXd xi, MatrixXd omega, double nu);   // m = 0
SutParams make_normal(VectorXd xi, MatrixXd omega);         // m = 0, nu = inf

// --- identifiable families (kinds 1..4) -------------------------------------

struct Kind1Result {
  SutParams params;
  bool st_limit_advisory = false;  // rho > 0.95: prefer the plain ST
};
// Delta = delta 1_m^T, tau = tau0 1_m, equicorrelated gamma_bar(rho).
Kind1Result identifiable_kind1(VectorXd xi, MatrixXd omega, VectorXd delta, double tau0,
                               double rho, int m, double nu);
// tau = alpha 1_m + beta (1,...,m)^T, beta != 0.
SutParams identifiable_kind2(VectorXd xi, MatrixXd omega, MatrixXd delta, double alpha,
                             double beta, MatrixXd gamma_bar, double nu);
// SUT_{d,d}(xi, w^2 Ob, w delta (1+delta^2)^{-1/2} Ob, 0, Ob, nu).
SutParams identifiable_kind3(VectorXd xi, double w, double delta, MatrixXd omega_bar, double nu);
// SUT_{d,d}(xi, Omega, delta Omega^{1/2}, 0, I_d, nu).
SutParams identifiable_kind4(VectorXd xi, MatrixXd omega, double delta, double nu);

// --- latent permutations -----------------------------------------------------

// perm maps output slot j to input slot perm[j] (0-based bijection on 0..m-1).
SutParams permute_latent(const SutParams& p, const std::vector<int>& perm);

// --- H/Psi reparameterization ------------------------------------------------

struct HPsiParams {
  VectorXd xi;
  MatrixXd h;    // d x m loading
  MatrixXd psi;  // d x d, Omega = psi + h gamma_bar h^T
  VectorXd tau;
  MatrixXd gamma_bar;
  double nu = kInf;
};

HPsiParams to_hpsi(const SutParams& p);     // throws PsiNotPSD outside the domain
SutParams from_hpsi(const HPsiParams& hp);

// --- JSON wire format --------------------------------------------------------
// Keys: xi, omega, delta, tau, gamma_bar, nu ("inf" accepted); row-major
// matrices; unknown keys rejected.

SutParams params_from_json_text(const std::string& text);
std::string params_to_json_text(const SutParams& p, int indent = 2);

}  // namespace sut
