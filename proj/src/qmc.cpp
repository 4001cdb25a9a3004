#include "sut/qmc.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "sut/errors.hpp"
#include "sut/linalg.hpp"
#include "sut/rng.hpp"

namespace sut {

namespace {

constexpr int kPrimes[32] = {2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,
                             37,  41,  43,  47,  53,  59,  61,  67,  71,  73,  79,
                             83,  89,  97,  101, 103, 107, 109, 113, 127, 131};

// Richtmyer/Kronecker generators: fractional parts of k*sqrt(p_j).
std::vector<double> kronecker_generators(int dim) {
  if (dim > 32) throw DimensionMismatch("qmc: dimension above supported limit (~25 for CDF)");
  std::vector<double> q(dim);
  for (int j = 0; j < dim; ++j) {
    double r = std::sqrt(static_cast<double>(kPrimes[j]));
    q[j] = r - std::floor(r);
  }
  return q;
}

// s(w) = sqrt(chisq_quantile(w, nu)/nu), tabulated on a z = Phi^{-1}(w) grid
// with Catmull-Rom interpolation; quantile evaluations are the expensive part
// and recur across calls, so tables are cached per dof.
struct ChiTable {
  double nu = 0.0;
  double zlo = -8.5, dz = 0.025;
  std::vector<double> s;
};

const ChiTable& chi_table(double nu) {
  thread_local std::vector<ChiTable> cache;
  for (const auto& t : cache)
    if (t.nu == nu) return t;
  ChiTable t;
  t.nu = nu;
  const int n = static_cast<int>(std::floor((8.5 - t.zlo) / t.dz)) + 1;
  t.s.resize(n);
  for (int i = 0; i < n; ++i) {
    const double z = t.zlo + i * t.dz;
    const double p = norm_cdf(z);
    t.s[i] = std::sqrt(chisq_quantile(p, nu) / nu);
  }
  if (cache.size() >= 16) cache.erase(cache.begin());
  cache.push_back(std::move(t));
  return cache.back();
}

double chi_interp(const ChiTable& t, double w) {
  const double z = std::clamp(norm_quantile(w), t.zlo, t.zlo + (t.s.size() - 1.0) * t.dz);
  const double x = (z - t.zlo) / t.dz;
  const int n = static_cast<int>(t.s.size());
  int i = std::clamp(static_cast<int>(x), 1, n - 3);
  const double u = x - i;
  const double s0 = t.s[i - 1], s1 = t.s[i], s2 = t.s[i + 1], s3 = t.s[i + 2];
  // Catmull-Rom
  return s1 + 0.5 * u * (s2 - s0 + u * (2.0 * s0 - 5.0 * s1 + 4.0 * s2 - s3 +
                                        u * (3.0 * (s1 - s2) + s3 - s0)));
}

double clamp_prob(double p) { return std::clamp(p, 1e-300, 1.0 - 1e-16); }

// ---------------------------------------------------------------------------
// Deterministic conditional-quadrature reductions for d <= 3. The exact
// identity T_d(b) = int t(u) T_{d-1}(conditional(u); nu+1) du is integrated
// in theta with u = sqrt(nu) tan(theta), which compactifies the domain and
// turns the t weight into cos^{nu-1}(theta). Error estimates come from a
// coarse/fine Gauss-Legendre pair.

struct GlRule {
  std::vector<double> x, w;  // on [0, 1]
};

const GlRule& gl_rule(int n) {
  thread_local std::vector<GlRule> cache(2);
  GlRule& r = cache[n == 48 ? 0 : 1];
  if (!r.x.empty()) return r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    r.x[i] = 0.5 * (1.0 - z);
    r.x[n - 1 - i] = 0.5 * (1.0 + z);
    r.w[i] = r.w[n - 1 - i] = 1.0 / ((1.0 - z * z) * pp * pp);
  }
  return r;
}

// integrate f over [lo, hi] with the fine rule; *coarse gets the 48-pt value
template <typename F>
double gl_integrate(F&& f, double lo, double hi, double* coarse, long* evals) {
  if (!(hi > lo)) {
    if (coarse) *coarse = 0.0;
    return 0.0;
  }
  const GlRule& fine = gl_rule(96);
  const GlRule& half = gl_rule(48);
  double acc = 0.0;
  for (int i = 0; i < 96; ++i) acc += fine.w[i] * f(lo + (hi - lo) * fine.x[i]);
  if (coarse) {
    double c = 0.0;
    for (int i = 0; i < 48; ++i) c += half.w[i] * f(lo + (hi - lo) * half.x[i]);
    *coarse = c * (hi - lo);
  }
  if (evals) *evals += coarse ? 144 : 96;
  return acc * (hi - lo);
}

// scalar conditional pieces of the t: U2 | U1 = u has location rho u,
// scale^2 = ((nu + u^2)/(nu + 1)) (1 - rho^2), dof nu + 1
double t2_quad(double b1, double b2, double rho, double nu, double* err, long* evals) {
  if (std::abs(rho) >= 1.0 - 1e-12)
    throw NotPositiveDefinite(1, "mvt_cdf: bivariate correlation at the singular boundary");
  const bool inf_dof = is_inf_dof(nu);
  const double r2 = 1.0 - rho * rho;
  double fine = 0.0, coarse = 0.0;
  if (inf_dof) {
    const double lo = -9.3, hi = std::min(b1, 9.3);
    if (hi <= lo) {
      if (err) *err = 1e-16;
      return 0.0;
    }
    auto f = [&](double u) {
      return norm_pdf(u) * norm_cdf((b2 - rho * u) / std::sqrt(r2));
    };
    fine = gl_integrate(f, lo, hi, &coarse, evals);
  } else {
    const double th_clip = nu > 90.0 ? 9.5 / std::sqrt(nu - 1.0) : 1.5707963267948966;
    const double th_lo = -th_clip;
    const double th_hi = std::min(std::atan(b1 / std::sqrt(nu)), th_clip);
    if (th_hi <= th_lo) {
      if (err) *err = 1e-15;
      return 0.0;
    }
    const double c1 = c_const(nu, 1.0) * std::sqrt(nu);
    auto f = [&](double th) {
      const double cth = std::cos(th);
      const double u = std::sqrt(nu) * std::tan(th);
      const double scale = std::sqrt(((nu + u * u) / (nu + 1.0)) * r2);
      return c1 * std::exp((nu - 1.0) * std::log(cth)) *
             t_cdf_1d((b2 - rho * u) / scale, nu + 1.0);
    };
    fine = gl_integrate(f, th_lo, th_hi, &coarse, evals);
  }
  if (err) *err = std::abs(fine - coarse) + 1e-14;
  return std::clamp(fine, 0.0, 1.0);
}

double t3_quad(const VectorXd& b, const MatrixXd& c, double nu, double* err, long* evals) {
  // condition on the first variable; the inner pair is a bivariate t at nu+1
  const double r21 = c(1, 0), r31 = c(2, 0), r23 = c(2, 1);
  const double s2 = std::sqrt(1.0 - r21 * r21), s3 = std::sqrt(1.0 - r31 * r31);
  const double rho_c = (r23 - r21 * r31) / (s2 * s3);
  const bool inf_dof = is_inf_dof(nu);
  double inner_err_max = 0.0;
  double fine = 0.0, coarse = 0.0;
  if (inf_dof) {
    const double lo = -9.3, hi = std::min(b[0], 9.3);
    if (hi <= lo) {
      if (err) *err = 1e-16;
      return 0.0;
    }
    auto f = [&](double u) {
      double ie = 0.0;
      const double v = t2_quad((b[1] - r21 * u) / s2, (b[2] - r31 * u) / s3, rho_c, kInf,
                               &ie, evals);
      inner_err_max = std::max(inner_err_max, ie);
      return norm_pdf(u) * v;
    };
    fine = gl_integrate(f, lo, hi, &coarse, evals);
  } else {
    const double th_clip = nu > 90.0 ? 9.5 / std::sqrt(nu - 1.0) : 1.5707963267948966;
    const double th_lo = -th_clip;
    const double th_hi = std::min(std::atan(b[0] / std::sqrt(nu)), th_clip);
    if (th_hi <= th_lo) {
      if (err) *err = 1e-15;
      return 0.0;
    }
    const double c1 = c_const(nu, 1.0) * std::sqrt(nu);
    auto f = [&](double th) {
      const double cth = std::cos(th);
      const double u = std::sqrt(nu) * std::tan(th);
      const double alpha = std::sqrt((nu + u * u) / (nu + 1.0));
      double ie = 0.0;
      const double v = t2_quad((b[1] - r21 * u) / (alpha * s2),
                               (b[2] - r31 * u) / (alpha * s3), rho_c, nu + 1.0, &ie, evals);
      inner_err_max = std::max(inner_err_max, ie);
      return c1 * std::exp((nu - 1.0) * std::log(cth)) * v;
    };
    fine = gl_integrate(f, th_lo, th_hi, &coarse, evals);
  }
  if (err) *err = std::abs(fine - coarse) + inner_err_max + 1e-14;
  return std::clamp(fine, 0.0, 1.0);
}

struct ShiftSet {
  std::vector<std::vector<double>> shifts;  // [rand][dim]
};

ShiftSet make_shifts(int randomizations, int dim, std::uint64_t seed) {
  ShiftSet s;
  s.shifts.resize(randomizations);
  for (int r = 0; r < randomizations; ++r) {
    Rng rng(seed, 1000 + static_cast<std::uint64_t>(r));
    s.shifts[r].resize(dim);
    for (int j = 0; j < dim; ++j) s.shifts[r][j] = rng.uniform();
  }
  return s;
}

struct MeanSd {
  double mean, sd;
};

MeanSd mean_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mu = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return {mu, n > 1 ? std::sqrt(ss / (n * (n - 1.0))) : 0.0};
}

}  // namespace

namespace {

struct Standardized {
  int d = 0;
  bool trivially_zero = false;
  VectorXd b;     // sorted ascending
  MatrixXd corr;  // permuted to match
};

Standardized standardize_limits(const VectorXd& upper, const MatrixXd& sigma, double nu) {
  const int d0 = static_cast<int>(upper.size());
  if (sigma.rows() != d0 || sigma.cols() != d0)
    throw DimensionMismatch("mvt_cdf: limit/matrix size mismatch");
  if (!(nu > 0.0)) throw NonFiniteInput("mvt_cdf: nu must be positive or inf");
  for (int i = 0; i < d0; ++i)
    if (std::isnan(upper[i])) throw NonFiniteInput("mvt_cdf: NaN limit");
  if (!sigma.allFinite()) throw NonFiniteInput("mvt_cdf: non-finite sigma");

  Standardized out;
  std::vector<int> keep;
  for (int i = 0; i < d0; ++i) {
    if (upper[i] == -kInf) {
      out.trivially_zero = true;
      return out;
    }
    if (upper[i] != kInf) keep.push_back(i);
  }
  const int d = static_cast<int>(keep.size());
  out.d = d;
  if (d == 0) return out;

  VectorXd b(d);
  MatrixXd corr(d, d);
  for (int i = 0; i < d; ++i) {
    const double si = std::sqrt(sigma(keep[i], keep[i]));
    if (!(si > 0.0)) throw NotPositiveDefinite(keep[i], "mvt_cdf: nonpositive variance");
    b[i] = upper[keep[i]] / si;
    for (int j = 0; j < d; ++j)
      corr(i, j) = sigma(keep[i], keep[j]) / (si * std::sqrt(sigma(keep[j], keep[j])));
  }
  // sort by standardized limit; conditioning on the tightest variable first
  // helps both the quadrature reduction and the SOV rule
  std::vector<int> ord(d);
  std::iota(ord.begin(), ord.end(), 0);
  std::stable_sort(ord.begin(), ord.end(), [&](int i, int j) { return b[i] < b[j]; });
  out.b.resize(d);
  out.corr.resize(d, d);
  for (int i = 0; i < d; ++i) {
    out.b[i] = b[ord[i]];
    for (int j = 0; j < d; ++j) out.corr(i, j) = corr(ord[i], ord[j]);
  }
  return out;
}

}  // namespace

CdfResult mvt_cdf(const VectorXd& upper, const MatrixXd& sigma, double nu, const QmcConfig& cfg) {
  const Standardized st = standardize_limits(upper, sigma, nu);
  if (st.trivially_zero) return {0.0, 0.0, 0};
  if (st.d == 0) return {1.0, 0.0, 0};
  if (st.d == 1) return {t_cdf_1d(st.b[0], nu), 1e-15, 0};
  // below one dof the compactified integrand has an endpoint singularity
  // that spoils the Gauss-Legendre rate; leave that corner to the lattice
  if (st.d <= 3 && (is_inf_dof(nu) || nu >= 1.0)) {
    cholesky(st.corr);  // enforce the positive-definiteness contract
    CdfResult out;
    double err = 0.0;
    long evals = 0;
    if (st.d == 2)
      out.value = t2_quad(st.b[0], st.b[1], st.corr(1, 0), nu, &err, &evals);
    else
      out.value = t3_quad(st.b, st.corr, nu, &err, &evals);
    out.error_estimate = err;
    out.points_used = evals;
    return out;
  }
  return mvt_cdf_qmc(upper, sigma, nu, cfg);
}

CdfResult mvt_cdf_qmc(const VectorXd& upper, const MatrixXd& sigma, double nu,
                      const QmcConfig& cfg) {
  const Standardized st = standardize_limits(upper, sigma, nu);
  if (st.trivially_zero) return {0.0, 0.0, 0};
  const int d = st.d;
  if (d == 0) return {1.0, 0.0, 0};
  if (d == 1) return {t_cdf_1d(st.b[0], nu), 1e-15, 0};
  const VectorXd& bs = st.b;
  const MatrixXd L = cholesky(st.corr);

  const bool tdist = !is_inf_dof(nu);
  const int dim = (d - 1) + (tdist ? 1 : 0);
  const auto q = kronecker_generators(dim);
  const auto shifts = make_shifts(cfg.randomizations, dim, cfg.seed);
  const ChiTable* ct = tdist ? &chi_table(nu) : nullptr;

  std::vector<double> rep_means(cfg.randomizations);
  std::vector<double> w(dim), y(d);
  auto integrand = [&](const std::vector<double>& pt) {
    const double s = tdist ? chi_interp(*ct, pt[dim - 1]) : 1.0;
    double f = 1.0;
    for (int i = 0; i < d && f > 0.0; ++i) {
      double zi = s * bs[i];
      for (int j = 0; j < i; ++j) zi -= L(i, j) * y[j];
      const double e = norm_cdf(zi / L(i, i));
      f *= e;
      if (i + 1 < d) y[i] = norm_quantile(clamp_prob(pt[i] * e));
    }
    return f;
  };
  std::vector<double> wr(dim);
  for (int r = 0; r < cfg.randomizations; ++r) {
    double acc = 0.0;
    std::vector<double> state(shifts.shifts[r]);
    for (int k = 0; k < cfg.points; ++k) {
      for (int j = 0; j < dim; ++j) {
        state[j] += q[j];
        if (state[j] >= 1.0) state[j] -= 1.0;
        w[j] = state[j];
        wr[j] = 1.0 - state[j];
      }
      // antithetic pair cancels the odd error terms of the lattice rule
      acc += 0.5 * (integrand(w) + integrand(wr));
    }
    rep_means[r] = acc / cfg.points;
  }

  const auto [mean, sd] = mean_sd(rep_means);
  CdfResult out;
  out.error_estimate = 3.0 * sd;
  out.points_used = 2L * cfg.points * cfg.randomizations;
  out.value = mean;
  if (out.value < 0.0 || out.value > 1.0) {
    const double clamped = std::clamp(out.value, 0.0, 1.0);
    if (std::abs(clamped - out.value) > out.error_estimate)
      std::cerr << "mvt_cdf: clamped " << out.value << " to " << clamped << "\n";
    out.value = clamped;
  }
  return out;
}

double mvt_logpdf(const VectorXd& y, const VectorXd& xi, const MatrixXd& omega, double nu) {
  const int d = static_cast<int>(y.size());
  if (xi.size() != d || omega.rows() != d || omega.cols() != d)
    throw DimensionMismatch("mvt_pdf: size mismatch");
  if (!y.allFinite() || !xi.allFinite()) throw NonFiniteInput("mvt_pdf: non-finite input");
  const MatrixXd L = cholesky(omega);
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const double q = L.triangularView<Eigen::Lower>().solve(y - xi).squaredNorm();
  if (is_inf_dof(nu))
    return -0.5 * d * std::log(2.0 * 3.14159265358979323846) - 0.5 * logdet - 0.5 * q;
  return log_c_const(nu, d) - 0.5 * logdet - 0.5 * (nu + d) * std::log1p(q / nu);
}

double mvt_pdf(const VectorXd& y, const VectorXd& xi, const MatrixXd& omega, double nu) {
  return std::exp(mvt_logpdf(y, xi, omega, nu));
}

TruncMomentsRaw trunc_raw_moments(const VectorXd& tau, const MatrixXd& disp, double nu,
                                  const QmcConfig& cfg, int max_order) {
  const int m = static_cast<int>(tau.size());
  if (disp.rows() != m || disp.cols() != m)
    throw DimensionMismatch("trunc_raw_moments: tau/disp size mismatch");
  if (!(nu > 0.0)) throw NonFiniteInput("trunc_raw_moments: nu must be positive or inf");
  if (max_order < 1 || max_order > 4)
    throw DimensionMismatch("trunc_raw_moments: order must be in 1..4");

  TruncMomentsRaw out;
  out.m = m;
  out.nu = nu;
  if (m == 0) {
    out.prob = 1.0;
    return out;
  }

  const MatrixXd L = cholesky(disp);
  const bool tdist = !is_inf_dof(nu);
  const int dim = m + (tdist ? 1 : 0);
  const auto q = kronecker_generators(dim);
  const auto shifts = make_shifts(cfg.randomizations, dim, cfg.seed ^ 0x7A0CULL);
  const ChiTable* ct = tdist ? &chi_table(nu) : nullptr;

  out.reps.resize(cfg.randomizations);
  std::vector<double> w(dim), z(m);
  VectorXd u(m), v(m * m);
  for (int r = 0; r < cfg.randomizations; ++r) {
    double sw = 0.0;
    VectorXd s1 = VectorXd::Zero(m);
    MatrixXd s2 = MatrixXd::Zero(m, m);
    MatrixXd s3 = max_order >= 3 ? MatrixXd::Zero(m * m, m) : MatrixXd();
    MatrixXd s4 = max_order >= 4 ? MatrixXd::Zero(m * m, m * m) : MatrixXd();
    std::vector<double> state(shifts.shifts[r]);
    for (int k = 0; k < cfg.points; ++k) {
      for (int j = 0; j < dim; ++j) {
        state[j] += q[j];
        if (state[j] >= 1.0) state[j] -= 1.0;
        w[j] = state[j];
      }
      const double s = tdist ? chi_interp(*ct, w[dim - 1]) : 1.0;
      double weight = 1.0;
      for (int i = 0; i < m; ++i) {
        double lo = -s * tau[i];
        for (int j = 0; j < i; ++j) lo -= L(i, j) * z[j];
        lo /= L(i, i);
        const double pa = norm_cdf(-lo);  // upper-tail mass
        weight *= pa;
        if (weight <= 0.0) break;
        // z | z > lo via complementary inverse, stable for lo >> 0
        z[i] = -norm_quantile(clamp_prob((1.0 - w[i]) * pa));
        if (z[i] < lo) z[i] = lo;  // guard against roundoff at the edge
      }
      if (weight <= 0.0) continue;
      for (int i = 0; i < m; ++i) {
        double xi = 0.0;
        for (int j = 0; j <= i; ++j) xi += L(i, j) * z[j];
        u[i] = xi / s;
      }
      sw += weight;
      s1.noalias() += weight * u;
      s2.noalias() += weight * u * u.transpose();
      if (max_order >= 3) {
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) v[i * m + j] = u[i] * u[j];
        s3.noalias() += weight * v * u.transpose();
        if (max_order >= 4) s4.noalias() += weight * v * v.transpose();
      }
    }
    if (!(sw > 0.0))
      throw AcceptanceTooLow("trunc_raw_moments: truncation probability underflow");
    TruncRep& rep = out.reps[r];
    rep.prob = sw / cfg.points;
    rep.m1 = s1 / sw;
    rep.m2 = s2 / sw;
    if (max_order >= 3) rep.m3 = s3 / sw;
    if (max_order >= 4) rep.m4 = s4 / sw;
  }

  // Aggregate across randomizations.
  const int R = cfg.randomizations;
  auto agg_scalar = [&](auto get) {
    std::vector<double> vals(R);
    for (int r = 0; r < R; ++r) vals[r] = get(out.reps[r]);
    return mean_sd(vals);
  };
  const auto p = agg_scalar([](const TruncRep& r) { return r.prob; });
  out.prob = p.mean;
  out.prob_se = 3.0 * p.sd;

  auto agg_matrix = [&](auto get, MatrixXd& mean, MatrixXd& se) {
    mean = get(out.reps[0]);
    for (int r = 1; r < R; ++r) mean += get(out.reps[r]);
    mean /= R;
    MatrixXd ss = MatrixXd::Zero(mean.rows(), mean.cols());
    for (int r = 0; r < R; ++r) {
      const MatrixXd dlt = get(out.reps[r]) - mean;
      ss.array() += dlt.array().square();
    }
    se = 3.0 * (ss / (R * std::max(R - 1, 1))).cwiseSqrt();
  };
  MatrixXd m1m, m1s;
  agg_matrix([](const TruncRep& r) -> MatrixXd { return r.m1; }, m1m, m1s);
  out.m1 = m1m.col(0);
  out.m1_se = m1s.col(0);
  agg_matrix([](const TruncRep& r) -> const MatrixXd& { return r.m2; }, out.m2, out.m2_se);
  if (max_order >= 3)
    agg_matrix([](const TruncRep& r) -> const MatrixXd& { return r.m3; }, out.m3, out.m3_se);
  if (max_order >= 4)
    agg_matrix([](const TruncRep& r) -> const MatrixXd& { return r.m4; }, out.m4, out.m4_se);
  return out;
}

}  // namespace sut
