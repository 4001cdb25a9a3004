#include "sut/transforms.hpp"

#include <cmath>

#include "sut/errors.hpp"
#include "sut/linalg.hpp"

namespace sut {

namespace {

void check_partition(const SutParams& p, const PartitionSpec& spec) {
  if (spec.d1 < 0 || spec.d2 < 0 || spec.d1 + spec.d2 != p.d())
    throw DimensionMismatch("partition: d1 + d2 must equal d");
}

}  // namespace

SutParams linear(const SutParams& p, const MatrixXd& a, const VectorXd& b) {
  require_valid(p);
  const int d = p.d();
  const int n = static_cast<int>(a.rows());
  if (a.cols() != d || b.size() != n) throw DimensionMismatch("linear: map size mismatch");
  if (n < 1 || n > d) throw RankDeficient("linear: need 1 <= rows <= d");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(a.transpose());
  qr.setThreshold(1e-10);
  if (qr.rank() < n) throw RankDeficient("linear: map does not have full row rank");

  SutParams out;
  out.xi = a * p.xi + b;
  out.omega = a * p.omega * a.transpose();
  out.omega = 0.5 * (out.omega + out.omega.transpose());
  out.tau = p.tau;
  out.gamma_bar = p.gamma_bar;
  out.nu = p.nu;
  const VectorXd wa_inv = out.omega.diagonal().cwiseSqrt().cwiseInverse();
  out.delta = wa_inv.asDiagonal() * a * p.omega_scale().asDiagonal() * p.delta;
  require_valid(out);
  return out;
}

SutParams marginal(const SutParams& p, const PartitionSpec& spec, int which) {
  check_partition(p, spec);
  if (which != 1 && which != 2) throw DimensionMismatch("marginal: which must be 1 or 2");
  const int n = which == 1 ? spec.d1 : spec.d2;
  const int off = which == 1 ? 0 : spec.d1;
  if (n == p.d()) return p;
  if (n == 0) throw DimensionMismatch("marginal: empty block");
  MatrixXd a = MatrixXd::Zero(n, p.d());
  for (int i = 0; i < n; ++i) a(i, off + i) = 1.0;
  return linear(p, a, VectorXd::Zero(n));
}

SutParams add_marginals(const SutParams& p, const PartitionSpec& spec) {
  check_partition(p, spec);
  if (spec.d1 != spec.d2) throw DimensionMismatch("add_marginals: halves must be equal");
  const int h = spec.d1;
  MatrixXd a(h, 2 * h);
  a << MatrixXd::Identity(h, h), MatrixXd::Identity(h, h);
  return linear(p, a, VectorXd::Zero(h));
}

ConditionalParams conditional(const SutParams& p, const PartitionSpec& spec,
                              const VectorXd& y1) {
  require_valid(p);
  check_partition(p, spec);
  const int d1 = spec.d1, d2 = spec.d2, m = p.m();
  if (d1 < 1 || d2 < 1) throw DimensionMismatch("conditional: both blocks must be nonempty");
  if (y1.size() != d1) throw DimensionMismatch("conditional: y1 has wrong dimension");
  if (!y1.allFinite()) throw NonFiniteInput("conditional: non-finite y1");

  const MatrixXd o11 = p.omega.topLeftCorner(d1, d1);
  const MatrixXd o12 = p.omega.topRightCorner(d1, d2);
  const MatrixXd o21 = p.omega.bottomLeftCorner(d2, d1);
  const MatrixXd o22 = p.omega.bottomRightCorner(d2, d2);
  const VectorXd xi1 = p.xi.head(d1), xi2 = p.xi.tail(d2);
  const VectorXd w1 = o11.diagonal().cwiseSqrt(), w2 = o22.diagonal().cwiseSqrt();
  const MatrixXd d1m = p.delta.topRows(d1), d2m = p.delta.bottomRows(d2);

  const Eigen::LLT<MatrixXd> llt11(o11);
  const VectorXd resid = y1 - xi1;

  ConditionalParams out;
  out.q_y1 = llt11.matrixL().solve(resid).squaredNorm();
  out.alpha = is_inf_dof(p.nu) ? 1.0 : (p.nu + out.q_y1) / (p.nu + d1);
  out.xi_2_1 = xi2 + o21 * llt11.solve(resid);
  out.omega_2_1 = o22 - o21 * llt11.solve(o12);
  out.omega_2_1 = 0.5 * (out.omega_2_1 + out.omega_2_1.transpose());

  SutParams c;
  c.xi = out.xi_2_1;
  c.omega = out.alpha * out.omega_2_1;
  c.nu = is_inf_dof(p.nu) ? kInf : p.nu + d1;
  if (m > 0) {
    const MatrixXd ob11 = w1.cwiseInverse().asDiagonal() * o11 * w1.cwiseInverse().asDiagonal();
    const Eigen::LLT<MatrixXd> llt_ob11(ob11);
    MatrixXd g21 = p.gamma_bar - d1m.transpose() * llt_ob11.solve(d1m);
    g21 = 0.5 * (g21 + g21.transpose());
    out.gamma_scale_2_1 = g21.diagonal().cwiseSqrt();
    const VectorXd ginv = out.gamma_scale_2_1.cwiseInverse();
    out.gamma_bar_2_1 = ginv.asDiagonal() * g21 * ginv.asDiagonal();
    out.gamma_bar_2_1.diagonal().setOnes();
    const VectorXd w21_inv = out.omega_2_1.diagonal().cwiseSqrt().cwiseInverse();
    out.delta_2_1 = w21_inv.asDiagonal() *
                    (w2.asDiagonal() * d2m - o21 * llt11.solve(w1.asDiagonal() * d1m)) *
                    ginv.asDiagonal();
    out.tau_2_1 = ginv.asDiagonal() *
                  (p.tau + d1m.transpose() * llt_ob11.solve(w1.cwiseInverse().asDiagonal() * resid));
    c.delta = out.delta_2_1;
    c.tau = out.tau_2_1 / std::sqrt(out.alpha);
    c.gamma_bar = out.gamma_bar_2_1;
  } else {
    c.delta = MatrixXd(d2, 0);
    c.tau = VectorXd(0);
    c.gamma_bar = MatrixXd(0, 0);
  }
  require_valid(c);
  out.params = std::move(c);
  return out;
}

SutParams condition_positive(const SutParams& p, const PartitionSpec& spec) {
  require_valid(p);
  check_partition(p, spec);
  const int d1 = spec.d1, d2 = spec.d2, m = p.m();
  if (d1 < 1 || d2 < 1)
    throw DimensionMismatch("condition_positive: both blocks must be nonempty");

  const MatrixXd o22 = p.omega.bottomRightCorner(d2, d2);
  const VectorXd w1 = p.omega.topLeftCorner(d1, d1).diagonal().cwiseSqrt();
  const MatrixXd ob = p.omega_bar();
  const MatrixXd ob11 = ob.topLeftCorner(d1, d1);
  const MatrixXd ob21 = ob.bottomLeftCorner(d2, d1);

  SutParams out;
  out.xi = p.xi.tail(d2);
  out.omega = o22;
  out.nu = p.nu;
  out.delta.resize(d2, m + d1);
  out.delta << p.delta.bottomRows(d2), ob21;
  out.tau.resize(m + d1);
  out.tau.head(m) = p.tau;
  out.tau.tail(d1) = w1.cwiseInverse().cwiseProduct(p.xi.head(d1));
  out.gamma_bar.resize(m + d1, m + d1);
  out.gamma_bar.topLeftCorner(m, m) = p.gamma_bar;
  out.gamma_bar.topRightCorner(m, d1) = p.delta.topRows(d1).transpose();
  out.gamma_bar.bottomLeftCorner(d1, m) = p.delta.topRows(d1);
  out.gamma_bar.bottomRightCorner(d1, d1) = ob11;
  try {
    cholesky(out.gamma_bar);
  } catch (const NotPositiveDefinite& e) {
    throw ExtendedGammaNotPD(std::string("condition_positive: extended latent correlation "
                                         "not PD: ") + e.what());
  }
  require_valid(out);
  return out;
}

SutParams reduce_latent(const SutParams& p, int m1) {
  require_valid(p);
  const int m = p.m();
  if (m1 < 1 || m1 > m) throw DimensionMismatch("reduce_latent: need 1 <= m1 <= m");
  const int m2 = m - m1;
  constexpr double tol = 1e-12;
  if (p.delta.leftCols(m1).cwiseAbs().maxCoeff() > tol)
    throw StructureNotReducible("reduce_latent: delta block for the dropped latents not zero");
  if (m1 > 0 && p.tau.head(m1).cwiseAbs().maxCoeff() > tol)
    throw StructureNotReducible("reduce_latent: tau block for the dropped latents not zero");
  if (m2 > 0 && (p.gamma_bar.topRightCorner(m1, m2).cwiseAbs().maxCoeff() > tol ||
                 p.gamma_bar.bottomLeftCorner(m2, m1).cwiseAbs().maxCoeff() > tol))
    throw StructureNotReducible("reduce_latent: gamma_bar is not block-diagonal");

  SutParams out;
  out.xi = p.xi;
  out.omega = p.omega;
  out.nu = p.nu;
  out.delta = p.delta.rightCols(m2);
  out.tau = p.tau.tail(m2);
  out.gamma_bar = p.gamma_bar.bottomRightCorner(m2, m2);
  require_valid(out);
  return out;
}

CanonicalResult canonical(const SutParams& p) {
  require_valid(p);
  const int d = p.d(), m = p.m();
  if (d < 2) throw DimensionMismatch("canonical: requires d >= 2");

  CanonicalResult out;
  const MatrixXd wd2 = p.omega_scale().tail(d - 1).asDiagonal() * p.delta.bottomRows(d - 1);
  double smax = 0.0;
  Eigen::JacobiSVD<MatrixXd> svd;
  int rank = 0;
  if (m > 0) {
    svd.compute(wd2, Eigen::ComputeFullU);
    smax = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-10 * std::max(smax, 1.0)) ++rank;
  }
  if (rank == 0) {
    out.c = MatrixXd::Identity(d, d);
    out.params = p;
    return out;
  }
  const int keep = (d - 1) - rank;  // symmetric components after the transform
  if (keep < 1)
    throw CanonicalNotExists("canonical: rank of the residual skewness block is " +
                             std::to_string(rank) + "; need at most d-2 = " +
                             std::to_string(d - 2));
  // Rows: e_1, then the left null space of omega2 delta2 (SVD order, fixed signs).
  MatrixXd c = MatrixXd::Zero(1 + keep, d);
  c(0, 0) = 1.0;
  for (int i = 0; i < keep; ++i) {
    VectorXd row = svd.matrixU().col(rank + i);
    int lead = 0;
    while (lead < row.size() && std::abs(row[lead]) < 1e-14) ++lead;
    if (lead < row.size() && row[lead] < 0.0) row = -row;
    c.block(i + 1, 1, 1, d - 1) = row.transpose();
  }
  out.c = c;
  out.params = linear(p, c, VectorXd::Zero(1 + keep));
  // clean the annihilated block exactly
  for (int i = 1; i < out.params.delta.rows(); ++i)
    for (int j = 0; j < out.params.delta.cols(); ++j)
      if (std::abs(out.params.delta(i, j)) < 1e-10) out.params.delta(i, j) = 0.0;
  return out;
}

}  // namespace sut
