#pragma once

#include <cmath>
#include <limits>

// Scalar probability functions used throughout: normal cdf/quantile,
// regularized incomplete beta/gamma, univariate t, chi-square quantile,
// Fisher F, and the multivariate-t normalizing constant c(nu, r).

namespace sut {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_inf_dof(double nu) { return std::isinf(nu); }

double norm_pdf(double x);
double norm_cdf(double x);
// Wichura AS241; |error| < 1e-15 over (1e-300, 1-1e-16).
double norm_quantile(double p);

// Regularized incomplete beta I_x(a,b), continued fraction (Lentz).
double betainc(double a, double b, double x);
double betainc_inv(double a, double b, double p);

// Regularized lower incomplete gamma P(a,x); series/CF for small a,
// Gauss-Legendre quadrature path for a >= 100 (stable at very large a).
double gammap(double a, double x);
double gammap_inv(double a, double p);

double chisq_quantile(double p, double nu);

// Univariate Student t, location 0 scale 1. nu may be +inf (normal).
double t_pdf_1d(double x, double nu);
double t_cdf_1d(double x, double nu);
double t_quantile_1d(double p, double nu);

double fisher_f_pdf(double x, double d1, double d2);
double fisher_f_cdf(double x, double d1, double d2);
double fisher_f_quantile(double p, double d1, double d2);

// c(upsilon, r) = Gamma((upsilon+r)/2) / { Gamma(upsilon/2) (pi*upsilon)^{r/2} }
double c_const(double upsilon, double r);
double log_c_const(double upsilon, double r);

// E(V^{-k/2}) for V ~ Gamma(nu/2, rate nu/2); requires nu > k.
double gamma_inverse_moment(double nu, int k);

struct GammaInverseMoments {
  double m1, m2, m3, m4;
};
GammaInverseMoments gamma_inverse_moments(double nu);

}  // namespace sut
