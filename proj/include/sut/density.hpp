#pragma once

#include "sut/params.hpp"
#include "sut/qmc.hpp"

namespace sut {

struct QuadraticData {
  double q = 0.0;      // (y-xi)^T Omega^{-1} (y-xi)
  double alpha = 1.0;  // (nu + q)/(nu + d); 1 at nu = inf
};

struct PdfValue {
  double value = 0.0;
  double error_estimate = 0.0;  // 3-sigma, propagated from the two latent cdfs
};

struct LogPdfValue {
  double value = 0.0;
  bool underflow = false;  // a latent cdf fell below 1e-300; value is -inf
};

// Evaluation context: factorizations and the latent normalizer T_m(tau)
// are computed once, so grids and sample loops stay cheap.
class Density {
 public:
  explicit Density(SutParams p, QmcConfig cfg = {});

  const SutParams& params() const { return p_; }
  const CdfResult& latent_norm() const { return t_m_tau_; }

  QuadraticData quadratic(const VectorXd& y) const;
  double pdf(const VectorXd& y) const { return pdf_detail(y).value; }
  PdfValue pdf_detail(const VectorXd& y) const;
  double logpdf(const VectorXd& y) const { return logpdf_detail(y).value; }
  LogPdfValue logpdf_detail(const VectorXd& y) const;
  CdfResult cdf(const VectorXd& y) const;

 private:
  double log_t_density(const VectorXd& y, double* q_out) const;

  SutParams p_;
  QmcConfig cfg_;
  MatrixXd chol_omega_;
  double logdet_omega_ = 0.0;
  MatrixXd arg_map_;   // Delta^T Ob^{-1} omega^{-1}, m x d
  MatrixXd upsilon_;   // Gb - Delta^T Ob^{-1} Delta
  MatrixXd omega_star_;
  CdfResult t_m_tau_;
};

inline double pdf(const SutParams& p, const VectorXd& y, const QmcConfig& cfg = {}) {
  return Density(p, cfg).pdf(y);
}
inline double logpdf(const SutParams& p, const VectorXd& y, const QmcConfig& cfg = {}) {
  return Density(p, cfg).logpdf(y);
}
inline CdfResult cdf(const SutParams& p, const VectorXd& y, const QmcConfig& cfg = {}) {
  return Density(p, cfg).cdf(y);
}

}  // namespace sut
