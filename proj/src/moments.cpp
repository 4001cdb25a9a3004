#include "sut/moments.hpp"

#include <cmath>
#include <numbers>

#include "sut/errors.hpp"
#include "sut/linalg.hpp"

namespace sut {

namespace {

bool is_diagonal(const MatrixXd& a) {
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j && a(i, j) != 0.0) return false;
  return true;
}

bool is_zero(const VectorXd& v) { return v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0; }

// ---------------------------------------------------------------------------
// Exact 1-d truncated-normal raw moments from I_k = int_a^inf z^k phi(z) dz.
struct Tn1d {
  double r1, r2, r3, r4;
};

Tn1d tn1d_raw(double a) {
  const double ph = norm_pdf(a);
  const double p0 = norm_cdf(-a);  // upper tail mass
  const double i1 = ph;
  const double i2 = a * ph + p0;
  const double i3 = (a * a + 2.0) * ph;
  const double i4 = (a * a * a + 3.0 * a) * ph + 3.0 * p0;
  return {i1 / p0, i2 / p0, i3 / p0, i4 / p0};
}

struct RawMoments {
  VectorXd m1;
  MatrixXd m2, m3, m4;
};

// (X | X + tau > 0) for X ~ N_m(0, I): independent coordinates, exact.
RawMoments diag_trunc_normal_moments(const VectorXd& tau, int order) {
  const int m = static_cast<int>(tau.size());
  std::vector<Tn1d> r(m);
  for (int i = 0; i < m; ++i) r[i] = tn1d_raw(-tau[i]);
  auto pw = [&](int i, int k) -> double {
    switch (k) {
      case 0: return 1.0;
      case 1: return r[i].r1;
      case 2: return r[i].r2;
      case 3: return r[i].r3;
      default: return r[i].r4;
    }
  };
  auto cross = [&](std::initializer_list<int> idx) {
    int cnt[64] = {0};
    for (int i : idx) ++cnt[i];
    double v = 1.0;
    for (int i = 0; i < m; ++i)
      if (cnt[i]) v *= pw(i, cnt[i]);
    return v;
  };
  RawMoments out;
  out.m1.resize(m);
  for (int i = 0; i < m; ++i) out.m1[i] = pw(i, 1);
  out.m2.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out.m2(i, j) = cross({i, j});
  if (order >= 3) {
    out.m3.resize(m * m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) out.m3(i * m + j, k) = cross({i, j, k});
  }
  if (order >= 4) {
    out.m4.resize(m * m, m * m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < m; ++l) out.m4(i * m + k, j * m + l) = cross({i, j, k, l});
  }
  return out;
}

// ---------------------------------------------------------------------------
struct RawSet {
  VectorXd mu1;
  MatrixXd mu2, mu3, mu4;
};

// Raw moments of X + b from raw moments of X, elementwise binomial expansion.
RawSet shift_raw(const RawSet& x, const VectorXd& b, int d, int order) {
  RawSet y = x;
  auto M3 = [&](int i, int j, int k) { return x.mu3(i * d + j, k); };
  auto M4 = [&](int i, int j, int k, int l) { return x.mu4(i * d + k, j * d + l); };
  y.mu1 = x.mu1 + b;
  if (order >= 2)
    y.mu2 = x.mu2 + b * x.mu1.transpose() + x.mu1 * b.transpose() + b * b.transpose();
  if (order >= 3)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          y.mu3(i * d + j, k) = M3(i, j, k) + b[i] * x.mu2(j, k) + b[j] * x.mu2(i, k) +
                                b[k] * x.mu2(i, j) + b[i] * b[j] * x.mu1[k] +
                                b[i] * b[k] * x.mu1[j] + b[j] * b[k] * x.mu1[i] +
                                b[i] * b[j] * b[k];
  if (order >= 4)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l)
            y.mu4(i * d + k, j * d + l) =
                M4(i, j, k, l) + b[i] * M3(j, k, l) + b[j] * M3(i, k, l) + b[k] * M3(i, j, l) +
                b[l] * M3(i, j, k) + b[i] * b[j] * x.mu2(k, l) + b[i] * b[k] * x.mu2(j, l) +
                b[i] * b[l] * x.mu2(j, k) + b[j] * b[k] * x.mu2(i, l) +
                b[j] * b[l] * x.mu2(i, k) + b[k] * b[l] * x.mu2(i, j) +
                b[i] * b[j] * b[k] * x.mu1[l] + b[i] * b[j] * b[l] * x.mu1[k] +
                b[i] * b[k] * b[l] * x.mu1[j] + b[j] * b[k] * b[l] * x.mu1[i] +
                b[i] * b[j] * b[k] * b[l];
  return y;
}

RawSet central_of(const RawSet& r, int d, int order) { return shift_raw(r, -r.mu1, d, order); }

// Latent inputs for one assembly pass (one randomization, or the exact path).
struct LatentIn {
  VectorXd m1U;
  MatrixXd m2U, m3U, m4U;
  VectorXd evu;    // E(V* U*)
  MatrixXd evuut;  // E(V* U* U*^T)
  double eta = 1.0;   // E(V*)
  double mu2v = 1.0;  // E(V*^2)
};

struct AssemblyInputs {
  MatrixXd a;      // omega Delta gamma_bar^{-1}, d x m
  VectorXd wdiag;  // omega scale
  MatrixXd m2w;    // E(W* W*^T)
  MatrixXd m4w;    // E(W*W*^T kron W*W*^T)
  std::vector<LatentIn> reps;
  double cdf_rel_err = 0.0;  // relative error carried by the QMC T-ratios
};

MatrixXd normal_mu4(const MatrixXd& sigma) {
  const int d = static_cast<int>(sigma.rows());
  const MatrixXd K = commutation(d);
  return (MatrixXd::Identity(d * d, d * d) + K) * kron(sigma, sigma) +
         vec(sigma) * vec(sigma).transpose();
}

// Lemma-1 constant: E{V*^{k/2} h(U*)} = value * E{ h( sqrt(nu/(nu-k)) U_k ) },
// with U_k truncated at tau_k = sqrt((nu-k)/nu) tau under dof nu-k.
struct LemmaConst {
  double value = 1.0;
  double rel_err = 0.0;
  VectorXd tau_k;
};

LemmaConst lemma_const(int k, const VectorXd& tau, const MatrixXd& gamma_bar, double nu,
                       const QmcConfig& cfg) {
  if (!(nu > k)) throw DofTooSmall("lemma1: requires nu > k");
  const int m = static_cast<int>(tau.size());
  LemmaConst out;
  out.tau_k = std::sqrt((nu - k) / nu) * tau;
  const double log_c = 0.5 * k * std::log(nu / (nu + m)) + log_c_const(nu, m) -
                       log_c_const(nu - k, m) + 0.5 * m * std::log(nu / (nu - k));
  if (is_zero(tau)) {
    // T_m(0; Gb, nu') is dof-free, so the ratio is exactly 1.
    out.value = std::exp(log_c);
    return out;
  }
  const CdfResult num = mvt_cdf(out.tau_k, gamma_bar, nu - k, cfg);
  const CdfResult den = mvt_cdf(tau, gamma_bar, nu, cfg);
  if (den.value < 1e-12) throw DenominatorUnderflow("lemma1: T_m(tau) < 1e-12");
  out.value = std::exp(log_c) * num.value / den.value;
  out.rel_err = std::sqrt(std::pow(num.error_estimate / std::max(num.value, 1e-300), 2) +
                          std::pow(den.error_estimate / den.value, 2));
  return out;
}

int max_order_for(double nu) {
  if (is_inf_dof(nu)) return 4;
  if (nu > 4.0) return 4;
  if (nu > 3.0) return 3;
  if (nu > 2.0) return 2;
  if (nu > 1.0) return 1;
  return 0;
}

AssemblyInputs build_inputs(const SutParams& p, const QmcConfig& cfg, int order) {
  require_valid(p);
  const int d = p.d(), m = p.m();
  AssemblyInputs in;
  in.wdiag = p.omega_scale();
  const double nu = p.nu;

  MatrixXd sw;
  if (m > 0) {
    const MatrixXd gb_inv = p.gamma_bar.inverse();
    in.a = in.wdiag.asDiagonal() * p.delta * gb_inv;
    sw = p.omega_bar() - p.delta * gb_inv * p.delta.transpose();
  } else {
    in.a = MatrixXd(d, 0);
    sw = p.omega_bar();
  }
  sw = 0.5 * (sw + sw.transpose());

  if (is_inf_dof(nu)) {
    in.m2w = sw;
    if (order >= 4) in.m4w = normal_mu4(sw);
    if (m == 0) {
      in.reps.push_back(LatentIn{});
      return in;
    }
    if (is_diagonal(p.gamma_bar)) {
      const RawMoments rm = diag_trunc_normal_moments(p.tau, order);
      LatentIn li;
      li.m1U = rm.m1;
      li.m2U = rm.m2;
      li.m3U = rm.m3;
      li.m4U = rm.m4;
      li.evu = rm.m1;
      li.evuut = rm.m2;
      in.reps.push_back(std::move(li));
      return in;
    }
    const TruncMomentsRaw tm = trunc_raw_moments(p.tau, p.gamma_bar, kInf, cfg, order);
    for (const auto& rep : tm.reps) {
      LatentIn li;
      li.m1U = rep.m1;
      li.m2U = rep.m2;
      li.m3U = rep.m3;
      li.m4U = rep.m4;
      li.evu = rep.m1;
      li.evuut = rep.m2;
      in.reps.push_back(std::move(li));
    }
    return in;
  }

  const double nu_w = nu + m;
  if (order >= 2) {
    if (!(nu_w > 2.0)) throw DofTooSmall("moments: W* second moment needs nu+m > 2");
    in.m2w = (nu_w / (nu_w - 2.0)) * sw;
  }
  if (order >= 4) {
    if (!(nu_w > 4.0)) throw DofTooSmall("moments: W* fourth moment needs nu+m > 4");
    in.m4w = (nu_w * nu_w / ((nu_w - 2.0) * (nu_w - 4.0))) * normal_mu4(sw);
  }

  if (m == 0) {
    in.reps.push_back(LatentIn{});
    return in;
  }

  const LemmaConst c2 = order >= 2 ? lemma_const(2, p.tau, p.gamma_bar, nu, cfg) : LemmaConst{};
  const LemmaConst c4 = order >= 4 ? lemma_const(4, p.tau, p.gamma_bar, nu, cfg) : LemmaConst{};
  in.cdf_rel_err = std::max(c2.rel_err, c4.rel_err);

  const double scale2 = order >= 2 ? std::sqrt(nu / (nu - 2.0)) : 1.0;
  const TruncMomentsRaw base = trunc_raw_moments(p.tau, p.gamma_bar, nu, cfg, order);
  TruncMomentsRaw shifted;
  if (order >= 2) {
    QmcConfig cfg2 = cfg;
    cfg2.seed ^= 0x11u;  // decorrelate the two engines
    shifted = trunc_raw_moments(c2.tau_k, p.gamma_bar, nu - 2.0, cfg2, 2);
  }
  for (std::size_t r = 0; r < base.reps.size(); ++r) {
    LatentIn li;
    li.m1U = base.reps[r].m1;
    li.m2U = base.reps[r].m2;
    if (order >= 3) li.m3U = base.reps[r].m3;
    if (order >= 4) li.m4U = base.reps[r].m4;
    if (order >= 2) {
      li.evu = c2.value * scale2 * shifted.reps[r].m1;
      li.evuut = c2.value * scale2 * scale2 * shifted.reps[r].m2;
      li.eta = c2.value;
    }
    if (order >= 4) li.mu2v = c4.value;
    in.reps.push_back(std::move(li));
  }
  return in;
}

// Convolution-route assembly for X = A U* + V*^{1/2} B W*; raw about 0 with
// the location shift applied afterwards.
RawSet assemble(const AssemblyInputs& in, const LatentIn& li, const VectorXd& xi, int order) {
  const int d = static_cast<int>(in.wdiag.size());
  const int m = static_cast<int>(in.a.cols());
  const MatrixXd& A = in.a;
  const MatrixXd B = MatrixXd(in.wdiag.asDiagonal());
  RawSet x;
  x.mu1 = m > 0 ? VectorXd(A * li.m1U) : VectorXd(VectorXd::Zero(d));
  if (order >= 2) {
    x.mu2 = li.eta * B * in.m2w * B.transpose();
    if (m > 0) x.mu2 += A * li.m2U * A.transpose();
  }
  if (order >= 3) {
    const MatrixXd K = commutation(d);
    x.mu3 = MatrixXd::Zero(d * d, d);
    const MatrixXd BB = kron(B, B);
    if (m > 0) {
      const MatrixXd AA = kron(A, A);
      const MatrixXd AB = kron(A, B);
      const MatrixXd I2 = MatrixXd::Identity(d * d, d * d);
      x.mu3 = AA * li.m3U * A.transpose() +
              (I2 + K) * AB * kron(MatrixXd(li.evu), in.m2w) * B.transpose() +
              BB * vec(in.m2w) * li.evu.transpose() * A.transpose();
    }
    if (order >= 4) {
      x.mu4 = li.mu2v * BB * in.m4w * BB.transpose();
      if (m > 0) {
        const MatrixXd AA = kron(A, A);
        const MatrixXd AB = kron(A, B);
        const MatrixXd mid = AB * kron(li.evuut, in.m2w) * AB.transpose();
        x.mu4 += AA * li.m4U * AA.transpose() + mid + mid * K + K * mid + K * mid * K +
                 AA * vec(li.evuut) * vec(in.m2w).transpose() * BB.transpose() +
                 BB * vec(in.m2w) * vec(li.evuut).transpose() * AA.transpose();
      }
    }
  }
  if (xi.size() > 0 && xi.cwiseAbs().maxCoeff() > 0.0) return shift_raw(x, xi, d, order);
  return x;
}

MomentSet aggregate(const std::vector<RawSet>& sets, int d, int order, double cdf_rel_err,
                    MomentSet::Kind kind) {
  MomentSet out;
  out.kind = kind;
  out.d = d;
  const int R = static_cast<int>(sets.size());
  RawSet mean;
  mean.mu1 = VectorXd::Zero(d);
  if (order >= 2) mean.mu2 = MatrixXd::Zero(d, d);
  if (order >= 3) mean.mu3 = MatrixXd::Zero(d * d, d);
  if (order >= 4) mean.mu4 = MatrixXd::Zero(d * d, d * d);
  for (const auto& s : sets) {
    mean.mu1 += s.mu1;
    if (order >= 2) mean.mu2 += s.mu2;
    if (order >= 3) mean.mu3 += s.mu3;
    if (order >= 4) mean.mu4 += s.mu4;
  }
  mean.mu1 /= R;
  if (order >= 2) mean.mu2 /= R;
  if (order >= 3) mean.mu3 /= R;
  if (order >= 4) mean.mu4 /= R;

  auto spread = [&](auto getter, const MatrixXd& mu) {
    MatrixXd ss = MatrixXd::Zero(mu.rows(), mu.cols());
    for (const auto& s : sets) {
      const MatrixXd dlt = getter(s) - mu;
      ss.array() += dlt.array().square();
    }
    MatrixXd se = R > 1 ? MatrixXd((ss / (R * (R - 1.0))).cwiseSqrt() * 3.0)
                        : MatrixXd::Zero(mu.rows(), mu.cols());
    se.array() += cdf_rel_err * mu.array().abs();
    return se;
  };
  out.mu1 = mean.mu1;
  out.mu1_se = spread([](const RawSet& s) -> MatrixXd { return s.mu1; }, mean.mu1).col(0);
  if (order >= 2) {
    out.mu2 = mean.mu2;
    out.mu2_se = spread([](const RawSet& s) -> MatrixXd { return s.mu2; }, mean.mu2);
  }
  if (order >= 3) {
    out.mu3 = mean.mu3;
    out.mu3_se = spread([](const RawSet& s) -> MatrixXd { return s.mu3; }, mean.mu3);
  }
  if (order >= 4) {
    out.mu4 = mean.mu4;
    out.mu4_se = spread([](const RawSet& s) -> MatrixXd { return s.mu4; }, mean.mu4);
  }
  return out;
}

}  // namespace

TruncatedMoments truncated_t_moments(const VectorXd& tau, const MatrixXd& gamma_bar,
                                     double nu, const QmcConfig& cfg) {
  const int m = static_cast<int>(tau.size());
  TruncatedMoments out;
  out.m = m;
  out.nu = nu;
  if (m == 0) return out;
  const int order = max_order_for(nu);
  if (order < 1) throw DofTooSmall("truncated_t_moments: nu must exceed 1 for the mean");
  const TruncMomentsRaw raw = trunc_raw_moments(tau, gamma_bar, nu, cfg, order);
  out.mean = raw.m1;
  out.mean_se = raw.m1_se;
  if (order >= 2) {
    out.cov = MatrixXd(raw.m2 - raw.m1 * raw.m1.transpose());
    out.cov_se = raw.m2_se;
    out.e_q = (gamma_bar.inverse() * raw.m2).trace();
    if (!is_inf_dof(nu)) {
      const LemmaConst c2 = lemma_const(2, tau, gamma_bar, nu, cfg);
      out.eta_q = c2.value;
      const double scale2 = std::sqrt(nu / (nu - 2.0));
      QmcConfig cfg2 = cfg;
      cfg2.seed ^= 0x11u;
      const TruncMomentsRaw sh = trunc_raw_moments(c2.tau_k, gamma_bar, nu - 2.0, cfg2, 2);
      out.weighted_mean = VectorXd(c2.value * scale2 * sh.m1);
      out.weighted_second = MatrixXd(c2.value * scale2 * scale2 * sh.m2);
      if (nu > 4.0) out.mu2_vstar = lemma_const(4, tau, gamma_bar, nu, cfg).value;
    } else {
      out.eta_q = 1.0;
      out.weighted_mean = raw.m1;
      out.weighted_second = raw.m2;
      out.mu2_vstar = 1.0;
    }
  }
  if (order >= 3) {
    out.mu3 = raw.m3;
    out.mu3_se = raw.m3_se;
  }
  if (order >= 4) {
    out.mu4 = raw.m4;
    out.mu4_se = raw.m4_se;
  }
  return out;
}

MatrixXd lemma1_expectation(int k, LemmaH h, const VectorXd& tau, const MatrixXd& gamma_bar,
                            double nu, const QmcConfig& cfg) {
  if (k != 2 && k != 4) throw DimensionMismatch("lemma1: k must be 2 or 4");
  if (is_inf_dof(nu)) throw DofTooSmall("lemma1: finite nu required");
  const LemmaConst c = lemma_const(k, tau, gamma_bar, nu, cfg);
  if (h == LemmaH::one) return MatrixXd::Constant(1, 1, c.value);
  const double s = std::sqrt(nu / (nu - k));
  const int order =
      h == LemmaH::u ? 1 : (h == LemmaH::uuT ? 2 : (h == LemmaH::u_kron_uuT ? 3 : 4));
  QmcConfig cfg2 = cfg;
  cfg2.seed ^= 0x11u;
  const TruncMomentsRaw tm = trunc_raw_moments(c.tau_k, gamma_bar, nu - k, cfg2, order);
  switch (h) {
    case LemmaH::u: return MatrixXd(c.value * s * tm.m1);
    case LemmaH::uuT: return MatrixXd(c.value * s * s * tm.m2);
    case LemmaH::u_kron_uuT: return MatrixXd(c.value * s * s * s * tm.m3);
    default: return MatrixXd(c.value * s * s * s * s * tm.m4);
  }
}

MeanVar mean_var(const SutParams& p, const QmcConfig& cfg) {
  if (!is_inf_dof(p.nu) && !(p.nu > 2.0))
    throw DofTooSmall("mean_var: variance requires nu > 2");
  const AssemblyInputs in = build_inputs(p, cfg, 2);
  std::vector<RawSet> sets;
  sets.reserve(in.reps.size());
  for (const auto& li : in.reps) sets.push_back(assemble(in, li, p.xi, 2));
  const MomentSet agg = aggregate(sets, p.d(), 2, in.cdf_rel_err, MomentSet::Kind::raw);
  MeanVar out;
  out.mean = *agg.mu1;
  out.cov = *agg.mu2 - *agg.mu1 * agg.mu1->transpose();
  out.mean_se = agg.mu1_se;
  out.cov_se = agg.mu2_se;
  return out;
}

MomentSet moments_34(const SutParams& p, const QmcConfig& cfg) {
  const int order = max_order_for(p.nu);
  if (order < 1) throw DofTooSmall("moments_34: nu must exceed 1");
  const AssemblyInputs in = build_inputs(p, cfg, order);
  std::vector<RawSet> sets;
  sets.reserve(in.reps.size());
  for (const auto& li : in.reps) sets.push_back(assemble(in, li, p.xi, order));
  return aggregate(sets, p.d(), order, in.cdf_rel_err, MomentSet::Kind::raw);
}

namespace {

struct RouteSets {
  std::vector<RawSet> sets;
  double cdf_rel_err = 0.0;
};

RouteSets mixture_rawsets(const SutParams& p, const QmcConfig& cfg, int order) {
  SutParams sun = p;
  sun.nu = kInf;
  sun.xi.setZero();
  const AssemblyInputs in = build_inputs(sun, cfg, order);
  double mk[5] = {1.0, 1.0, 1.0, 1.0, 1.0};
  if (!is_inf_dof(p.nu))
    for (int k = 1; k <= order; ++k) mk[k] = gamma_inverse_moment(p.nu, k);
  RouteSets out;
  out.cdf_rel_err = in.cdf_rel_err;
  out.sets.reserve(in.reps.size());
  for (const auto& li : in.reps) {
    RawSet s = assemble(in, li, VectorXd::Zero(p.d()), order);
    s.mu1 *= mk[1];
    if (order >= 2) s.mu2 *= mk[2];
    if (order >= 3) s.mu3 *= mk[3];
    if (order >= 4) s.mu4 *= mk[4];
    if (p.xi.cwiseAbs().maxCoeff() > 0.0) s = shift_raw(s, p.xi, p.d(), order);
    out.sets.push_back(std::move(s));
  }
  return out;
}

}  // namespace

MomentSet moments_via_mixture(const SutParams& p, const QmcConfig& cfg) {
  if (!is_zero(p.tau)) throw TauMustBeZero("moments_via_mixture: requires tau = 0");
  if (is_inf_dof(p.nu)) return moments_34(p, cfg);  // already the SUN path
  const int order = max_order_for(p.nu);
  if (order < 1) throw DofTooSmall("moments_via_mixture: nu must exceed 1");
  require_valid(p);
  const RouteSets rs = mixture_rawsets(p, cfg, order);
  return aggregate(rs.sets, p.d(), order, rs.cdf_rel_err, MomentSet::Kind::raw);
}

MomentSet to_central(const MomentSet& raw) {
  if (raw.kind == MomentSet::Kind::central) return raw;
  if (!raw.mu1 || !raw.mu2 || !raw.mu3 || !raw.mu4)
    throw DofTooSmall("to_central: all four raw moments required");
  RawSet r;
  r.mu1 = *raw.mu1;
  r.mu2 = *raw.mu2;
  r.mu3 = *raw.mu3;
  r.mu4 = *raw.mu4;
  const RawSet c = central_of(r, raw.d, 4);
  MomentSet out = raw;
  out.kind = MomentSet::Kind::central;
  out.mu1 = c.mu1;
  out.mu2 = c.mu2;
  out.mu3 = c.mu3;
  out.mu4 = c.mu4;
  return out;
}

MardiaMeasures mardia(const SutParams& p, const QmcConfig& cfg, MomentRoute route) {
  if (!is_inf_dof(p.nu) && !(p.nu > 4.0)) throw DofTooSmall("mardia: requires nu > 4");
  const int d = p.d();
  std::vector<RawSet> rawsets;
  double cdf_rel_err = 0.0;
  if (route == MomentRoute::mixture) {
    if (!is_zero(p.tau)) throw TauMustBeZero("mardia mixture route: requires tau = 0");
    require_valid(p);
    SutParams centered = p;  // location cancels in the central moments
    centered.xi.setZero();
    RouteSets rs = mixture_rawsets(centered, cfg, 4);
    rawsets = std::move(rs.sets);
    cdf_rel_err = rs.cdf_rel_err;
  } else {
    const AssemblyInputs in = build_inputs(p, cfg, 4);
    cdf_rel_err = in.cdf_rel_err;
    for (const auto& li : in.reps)
      rawsets.push_back(assemble(in, li, VectorXd::Zero(d), 4));
  }
  std::vector<double> b1s, b2s;
  for (const auto& raw : rawsets) {
    const RawSet c = central_of(raw, d, 4);
    const MatrixXd L = cholesky(c.mu2);
    const MatrixXd Li = L.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d, d));
    const MatrixXd LiLi = kron(Li, Li);
    const MatrixXd z3 = LiLi * c.mu3 * Li.transpose();
    const MatrixXd z4 = LiLi * c.mu4 * LiLi.transpose();
    b1s.push_back(z3.squaredNorm());
    b2s.push_back(z4.trace());
  }
  const int R = static_cast<int>(b1s.size());
  double b1_mean = 0.0, b2_mean = 0.0;
  for (int r = 0; r < R; ++r) {
    b1_mean += b1s[r];
    b2_mean += b2s[r];
  }
  b1_mean /= R;
  b2_mean /= R;
  double s1 = 0.0, s2 = 0.0;
  for (int r = 0; r < R; ++r) {
    s1 += (b1s[r] - b1_mean) * (b1s[r] - b1_mean);
    s2 += (b2s[r] - b2_mean) * (b2s[r] - b2_mean);
  }
  MardiaMeasures out;
  out.beta1 = b1_mean;
  out.beta2 = b2_mean;
  out.gamma1 = b1_mean;
  out.gamma2 = b2_mean - d * (d + 2.0);
  const double f1 = R > 1 ? 3.0 * std::sqrt(s1 / (R * (R - 1.0))) : 0.0;
  const double f2 = R > 1 ? 3.0 * std::sqrt(s2 / (R * (R - 1.0))) : 0.0;
  out.se_gamma1 = f1 + cdf_rel_err * std::abs(b1_mean);
  out.se_gamma2 = f2 + cdf_rel_err * std::abs(b2_mean);
  return out;
}

MomentSet sample_moments_raw(const MatrixXd& draws) {
  const int n = static_cast<int>(draws.rows());
  const int d = static_cast<int>(draws.cols());
  if (n < 16) throw DimensionMismatch("sample_moments_raw: need at least 16 draws");
  const int nb = 16, bs = n / nb;
  std::vector<RawSet> sets(nb);
  for (int b = 0; b < nb; ++b) {
    RawSet& s = sets[b];
    s.mu1 = VectorXd::Zero(d);
    s.mu2 = MatrixXd::Zero(d, d);
    s.mu3 = MatrixXd::Zero(d * d, d);
    s.mu4 = MatrixXd::Zero(d * d, d * d);
    for (int r = b * bs; r < (b + 1) * bs; ++r) {
      const VectorXd y = draws.row(r).transpose();
      s.mu1 += y;
      s.mu2 += y * y.transpose();
      VectorXd v(d * d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) v[i * d + j] = y[i] * y[j];
      s.mu3 += v * y.transpose();
      s.mu4 += v * v.transpose();
    }
    s.mu1 /= bs;
    s.mu2 /= bs;
    s.mu3 /= bs;
    s.mu4 /= bs;
  }
  return aggregate(sets, d, 4, 0.0, MomentSet::Kind::raw);
}

MardiaMeasures sample_mardia(const MatrixXd& draws) {
  const int n = static_cast<int>(draws.rows());
  const int d = static_cast<int>(draws.cols());
  if (n < 16) throw DimensionMismatch("sample_mardia: need at least 16 draws");
  const VectorXd mean = draws.colwise().mean().transpose();
  MatrixXd cov = MatrixXd::Zero(d, d);
  for (int r = 0; r < n; ++r) {
    const VectorXd c = draws.row(r).transpose() - mean;
    cov += c * c.transpose();
  }
  cov /= n;
  const MatrixXd L = cholesky(cov);
  MatrixXd z = L.triangularView<Eigen::Lower>()
                   .solve((draws.rowwise() - mean.transpose()).transpose());
  // z is d x n standardized: beta1 from the pooled third moment, beta2 from
  // mean squared Mahalanobis norms; block statistics only drive the SEs.
  const int nb = 16, bs = n / nb;
  std::vector<MatrixXd> m3b(nb, MatrixXd::Zero(d * d, d));
  std::vector<double> b2s(nb, 0.0);
  for (int b = 0; b < nb; ++b) {
    for (int r = b * bs; r < (b + 1) * bs; ++r) {
      const VectorXd y = z.col(r);
      VectorXd v(d * d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) v[i * d + j] = y[i] * y[j];
      m3b[b] += v * y.transpose();
      const double q = y.squaredNorm();
      b2s[b] += q * q;
    }
    m3b[b] /= bs;
    b2s[b] /= bs;
  }
  MatrixXd m3 = MatrixXd::Zero(d * d, d);
  double b2 = 0.0;
  for (int b = 0; b < nb; ++b) {
    m3 += m3b[b];
    b2 += b2s[b];
  }
  m3 /= nb;
  b2 /= nb;
  const double b1 = m3.squaredNorm();
  double s1 = 0.0, s2 = 0.0;
  for (int b = 0; b < nb; ++b) {
    // delta method: spread of 2 m3 . (m3_b - m3) approximates the b1 noise
    const double g = 2.0 * (m3.array() * (m3b[b] - m3).array()).sum();
    s1 += g * g;
    s2 += (b2s[b] - b2) * (b2s[b] - b2);
  }
  MardiaMeasures out;
  out.beta1 = b1;
  out.beta2 = b2;
  out.gamma1 = b1;
  out.gamma2 = b2 - d * (d + 2.0);
  out.se_gamma1 = 3.0 * std::sqrt(s1 / (nb * (nb - 1.0)));
  out.se_gamma2 = 3.0 * std::sqrt(s2 / (nb * (nb - 1.0)));
  return out;
}

CorrelationSweep correlation_vs_latent_dim(const std::function<HPsiParams(int)>& generator,
                                           int m_max, const QmcConfig& cfg) {
  CorrelationSweep out;
  double last_abs = 0.0;
  for (int m = 1; m <= m_max; ++m) {
    const HPsiParams hp = generator(m);
    const double nu = hp.nu;
    MatrixXd var_u;
    double eta_w;  // multiplies Psi: E(V*) times the W* second-moment factor
    if (is_zero(hp.tau) && is_diagonal(hp.gamma_bar)) {
      const double m1 = is_inf_dof(nu) ? 1.0 : gamma_inverse_moment(nu, 1);
      const double m2 = is_inf_dof(nu) ? 1.0 : gamma_inverse_moment(nu, 2);
      const MatrixXd J = MatrixXd::Ones(m, m);
      const MatrixXd I = MatrixXd::Identity(m, m);
      var_u = m2 * (I + (2.0 / std::numbers::pi) * (J - I)) -
              m1 * m1 * (2.0 / std::numbers::pi) * J;
      eta_w = m2;  // eta * (nu+m)/(nu+m-2) collapses to nu/(nu-2) at tau = 0
    } else {
      const TruncatedMoments tm = truncated_t_moments(hp.tau, hp.gamma_bar, nu, cfg);
      if (!tm.cov) throw DofTooSmall("correlation sweep: nu must exceed 2");
      var_u = *tm.cov;
      eta_w = is_inf_dof(nu) ? 1.0 : *tm.eta_q * (nu + m) / (nu + m - 2.0);
    }
    MatrixXd var_y = hp.psi * eta_w;
    if (hp.h.cols() > 0) var_y += hp.h * var_u * hp.h.transpose();
    const VectorXd sd = var_y.diagonal().cwiseSqrt();
    CorrelationSweepRow row;
    row.m = m;
    row.corr = sd.cwiseInverse().asDiagonal() * var_y * sd.cwiseInverse().asDiagonal();
    row.corr.diagonal().setOnes();
    double mx = 0.0;
    const int dd = static_cast<int>(row.corr.rows());
    for (int i = 0; i < dd; ++i)
      for (int j = i + 1; j < dd; ++j) mx = std::max(mx, std::abs(row.corr(i, j)));
    last_abs = mx;
    out.rows.push_back(std::move(row));
  }
  if (last_abs > 0.9)
    out.trend = CorrelationTrend::to_one;
  else if (last_abs < 0.1)
    out.trend = CorrelationTrend::to_zero;
  else
    out.trend = CorrelationTrend::mixed;
  return out;
}

}  // namespace sut
