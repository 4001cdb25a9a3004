#include "sut/density.hpp"

#include <cmath>
#include <numbers>

#include "sut/errors.hpp"
#include "sut/linalg.hpp"

namespace sut {

Density::Density(SutParams p, QmcConfig cfg) : p_(std::move(p)), cfg_(cfg) {
  require_valid(p_);
  chol_omega_ = cholesky(p_.omega);
  logdet_omega_ = 2.0 * chol_omega_.diagonal().array().log().sum();
  const int m = p_.m();
  if (m > 0) {
    const MatrixXd ob = p_.omega_bar();
    const MatrixXd ob_inv_delta = ob.llt().solve(p_.delta);  // Ob^{-1} Delta
    arg_map_ = ob_inv_delta.transpose() * p_.omega_scale().cwiseInverse().asDiagonal();
    upsilon_ = p_.gamma_bar - p_.delta.transpose() * ob_inv_delta;
    upsilon_ = 0.5 * (upsilon_ + upsilon_.transpose());
    // the normalizer is a single number multiplying every evaluation, and a
    // relative error here biases the whole density; give it a 16x budget
    QmcConfig den_cfg = cfg_;
    den_cfg.points = cfg_.points * 16;
    t_m_tau_ = mvt_cdf(p_.tau, p_.gamma_bar, p_.nu, den_cfg);

    const int d = p_.d();
    omega_star_.resize(m + d, m + d);
    const MatrixXd wd = p_.omega_scale().asDiagonal() * p_.delta;
    omega_star_.topLeftCorner(m, m) = p_.gamma_bar;
    omega_star_.topRightCorner(m, d) = -wd.transpose();
    omega_star_.bottomLeftCorner(d, m) = -wd;
    omega_star_.bottomRightCorner(d, d) = p_.omega;
  } else {
    t_m_tau_ = {1.0, 0.0, 0};
  }
}

QuadraticData Density::quadratic(const VectorXd& y) const {
  if (y.size() != p_.d()) throw DimensionMismatch("density: point has wrong dimension");
  if (!y.allFinite()) throw NonFiniteInput("density: non-finite point");
  QuadraticData out;
  const VectorXd z = chol_omega_.triangularView<Eigen::Lower>().solve(y - p_.xi);
  out.q = z.squaredNorm();
  out.alpha = is_inf_dof(p_.nu) ? 1.0 : (p_.nu + out.q) / (p_.nu + p_.d());
  return out;
}

double Density::log_t_density(const VectorXd& y, double* q_out) const {
  const int d = p_.d();
  const QuadraticData qd = quadratic(y);
  if (q_out) *q_out = qd.q;
  if (is_inf_dof(p_.nu))
    return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * logdet_omega_ - 0.5 * qd.q;
  return log_c_const(p_.nu, d) - 0.5 * logdet_omega_ -
         0.5 * (p_.nu + d) * std::log1p(qd.q / p_.nu);
}

PdfValue Density::pdf_detail(const VectorXd& y) const {
  const int m = p_.m();
  const double log_t = log_t_density(y, nullptr);
  if (m == 0) return {std::exp(log_t), 0.0};

  const QuadraticData qd = quadratic(y);
  const VectorXd arg = (p_.tau + arg_map_ * (y - p_.xi)) / std::sqrt(qd.alpha);
  const double nu_cond = is_inf_dof(p_.nu) ? kInf : p_.nu + p_.d();
  const CdfResult num = mvt_cdf(arg, upsilon_, nu_cond, cfg_);
  const double den = t_m_tau_.value;
  if (!(den > 0.0)) throw DenominatorUnderflow("pdf: T_m(tau; gamma_bar, nu) underflow");
  const double t_d = std::exp(log_t);
  PdfValue out;
  out.value = t_d * num.value / den;
  const double rel_sq = (num.error_estimate / den) * (num.error_estimate / den) +
                        std::pow(num.value * t_m_tau_.error_estimate / (den * den), 2);
  out.error_estimate = t_d * std::sqrt(rel_sq);
  return out;
}

LogPdfValue Density::logpdf_detail(const VectorXd& y) const {
  LogPdfValue out;
  const double log_t = log_t_density(y, nullptr);
  if (p_.m() == 0) {
    out.value = log_t;
    return out;
  }
  const QuadraticData qd = quadratic(y);
  const VectorXd arg = (p_.tau + arg_map_ * (y - p_.xi)) / std::sqrt(qd.alpha);
  const double nu_cond = is_inf_dof(p_.nu) ? kInf : p_.nu + p_.d();
  const CdfResult num = mvt_cdf(arg, upsilon_, nu_cond, cfg_);
  if (num.value < 1e-300 || t_m_tau_.value < 1e-300) {
    out.value = -kInf;
    out.underflow = true;
    return out;
  }
  out.value = log_t + std::log(num.value) - std::log(t_m_tau_.value);
  return out;
}

CdfResult Density::cdf(const VectorXd& y) const {
  if (y.size() != p_.d()) throw DimensionMismatch("density: point has wrong dimension");
  const int m = p_.m(), d = p_.d();
  if (m == 0) return mvt_cdf(y - p_.xi, p_.omega, p_.nu, cfg_);
  if (t_m_tau_.value < 1e-12)
    throw DenominatorUnderflow("cdf: T_m(tau; gamma_bar, nu) < 1e-12");
  VectorXd ystar(m + d);
  ystar.head(m) = p_.tau;
  ystar.tail(d) = y - p_.xi;
  const CdfResult num = mvt_cdf(ystar, omega_star_, p_.nu, cfg_);
  CdfResult out;
  const double den = t_m_tau_.value;
  out.value = std::clamp(num.value / den, 0.0, 1.0);
  out.error_estimate = std::sqrt(std::pow(num.error_estimate / den, 2) +
                                 std::pow(num.value * t_m_tau_.error_estimate / (den * den), 2));
  out.points_used = num.points_used + t_m_tau_.points_used;
  return out;
}

}  // namespace sut
