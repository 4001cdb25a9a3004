#include "sut/sampling.hpp"

#include <cmath>
#include <ostream>

#include "sut/errors.hpp"
#include "sut/linalg.hpp"

namespace sut {

namespace {

// One multivariate t draw as L z / sqrt(chi2_nu/nu); s = 1 at nu = inf.
double radial_scale(double nu, Rng& rng) {
  if (is_inf_dof(nu)) return 1.0;
  return std::sqrt(rng.chisq(nu) / nu);
}

void check_acceptance(const VectorXd& tau, const MatrixXd& gamma_bar, double nu,
                      const QmcConfig& cfg) {
  const CdfResult t = mvt_cdf(tau, gamma_bar, nu, cfg);
  if (t.value < 1e-6)
    throw AcceptanceTooLow("truncation probability T_m(tau) = " + std::to_string(t.value) +
                           " < 1e-6; reconsider tau");
}

}  // namespace

LatentDraws sample_truncated_t(const VectorXd& tau, const MatrixXd& gamma_bar, double nu,
                               int n, Rng& rng, const QmcConfig& cfg) {
  const int m = static_cast<int>(tau.size());
  if (n <= 0) throw DimensionMismatch("sample_truncated_t: n must be positive");
  check_acceptance(tau, gamma_bar, nu, cfg);
  const MatrixXd L = cholesky(gamma_bar);
  const MatrixXd gb_inv = gamma_bar.inverse();
  LatentDraws out;
  out.u_star.resize(n, m);
  out.q_ustar.resize(n);
  long trials = 0;
  VectorXd z(m), u(m);
  for (int i = 0; i < n;) {
    ++trials;
    for (int j = 0; j < m; ++j) z[j] = rng.normal();
    const double s = radial_scale(nu, rng);
    u = L.triangularView<Eigen::Lower>() * z / s;
    bool ok = true;
    for (int j = 0; j < m; ++j)
      if (!(u[j] + tau[j] > 0.0)) {
        ok = false;
        break;
      }
    if (!ok) continue;
    out.u_star.row(i) = u.transpose();
    out.q_ustar[i] = u.dot(gb_inv * u);
    ++i;
  }
  out.acceptance_rate = static_cast<double>(n) / static_cast<double>(trials);
  return out;
}

SampleBatch sample_selection(const SutParams& p, int n, std::uint64_t seed,
                             const QmcConfig& cfg) {
  require_valid(p);
  if (n <= 0) throw DimensionMismatch("sample_selection: n must be positive");
  const int d = p.d(), m = p.m();
  if (m > 0) check_acceptance(p.tau, p.gamma_bar, p.nu, cfg);
  const MatrixXd L = cholesky(p.extended_corr());
  const VectorXd w = p.omega_scale();
  Rng rng(seed);
  SampleBatch out;
  out.method = "selection";
  out.seed = seed;
  out.n = n;
  out.draws.resize(n, d);
  long trials = 0;
  VectorXd z(m + d), u(m + d);
  for (int i = 0; i < n;) {
    ++trials;
    for (int j = 0; j < m + d; ++j) z[j] = rng.normal();
    const double s = radial_scale(p.nu, rng);
    u = L.triangularView<Eigen::Lower>() * z / s;
    bool ok = true;
    for (int j = 0; j < m; ++j)
      if (!(u[j] + p.tau[j] > 0.0)) {
        ok = false;
        break;
      }
    if (!ok) continue;
    out.draws.row(i) = (p.xi + w.cwiseProduct(u.tail(d))).transpose();
    ++i;
  }
  out.acceptance_rate = static_cast<double>(n) / static_cast<double>(trials);
  return out;
}

SampleBatch sample_convolution(const SutParams& p, int n, std::uint64_t seed,
                               const QmcConfig& cfg) {
  require_valid(p);
  if (is_inf_dof(p.nu))
    throw ValidationFailure({"sample_convolution: requires finite nu"});
  if (n <= 0) throw DimensionMismatch("sample_convolution: n must be positive");
  const int d = p.d(), m = p.m();
  Rng rng(seed);
  SampleBatch out;
  out.method = "convolution";
  out.seed = seed;
  out.n = n;
  out.draws.resize(n, d);
  const VectorXd w = p.omega_scale();

  if (m == 0) {  // plain multivariate t
    const MatrixXd L = cholesky(p.omega_bar());
    VectorXd z(d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) z[j] = rng.normal();
      const double s = radial_scale(p.nu, rng);
      out.draws.row(i) =
          (p.xi + w.cwiseProduct(L.triangularView<Eigen::Lower>() * z / s)).transpose();
    }
    return out;
  }

  Rng latent_rng = rng.split();
  const LatentDraws latent = sample_truncated_t(p.tau, p.gamma_bar, p.nu, n, latent_rng, cfg);
  out.acceptance_rate = latent.acceptance_rate;
  const MatrixXd coeff = p.delta * p.gamma_bar.inverse();  // d x m
  MatrixXd sw = p.omega_bar() - coeff * p.delta.transpose();
  sw = 0.5 * (sw + sw.transpose());
  const MatrixXd Lw = cholesky(sw);
  const double nu_w = p.nu + m;
  VectorXd zw(d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) zw[j] = rng.normal();
    const double s = radial_scale(nu_w, rng);
    const VectorXd wstar = Lw.triangularView<Eigen::Lower>() * zw / s;
    const double scale = std::sqrt((p.nu + latent.q_ustar[i]) / (p.nu + m));
    const VectorXd z = coeff * latent.u_star.row(i).transpose() + scale * wstar;
    out.draws.row(i) = (p.xi + w.cwiseProduct(z)).transpose();
  }
  return out;
}

SampleBatch sample_sun_mixture(const SutParams& p, int n, std::uint64_t seed,
                               const QmcConfig& cfg, MixtureDraws* mix) {
  require_valid(p);
  if (p.tau.size() > 0 && p.tau.cwiseAbs().maxCoeff() != 0.0)
    throw TauMustBeZero("sample_sun_mixture: representation requires tau = 0");
  if (is_inf_dof(p.nu))
    throw ValidationFailure({"sample_sun_mixture: requires finite nu"});
  if (n <= 0) throw DimensionMismatch("sample_sun_mixture: n must be positive");
  const int d = p.d(), m = p.m();
  if (m > 0) check_acceptance(p.tau, p.gamma_bar, kInf, cfg);
  const MatrixXd L = cholesky(p.extended_corr());
  const VectorXd w = p.omega_scale();
  Rng rng(seed);
  SampleBatch out;
  out.method = "sun-mixture";
  out.seed = seed;
  out.n = n;
  out.draws.resize(n, d);
  if (mix) {
    mix->v.resize(n);
    mix->z0.resize(n, d);
  }
  long trials = 0;
  VectorXd z(m + d), u(m + d);
  for (int i = 0; i < n;) {
    ++trials;
    for (int j = 0; j < m + d; ++j) z[j] = rng.normal();
    u = L.triangularView<Eigen::Lower>() * z;  // SUN core: normal joint
    bool ok = true;
    for (int j = 0; j < m; ++j)
      if (!(u[j] > 0.0)) {
        ok = false;
        break;
      }
    if (!ok) continue;
    const VectorXd z0 = w.cwiseProduct(u.tail(d));
    const double v = rng.gamma(0.5 * p.nu, 0.5 * p.nu);
    out.draws.row(i) = (p.xi + z0 / std::sqrt(v)).transpose();
    if (mix) {
      mix->v[i] = v;
      mix->z0.row(i) = z0.transpose();
    }
    ++i;
  }
  out.acceptance_rate = static_cast<double>(n) / static_cast<double>(trials);
  return out;
}

void write_csv(const SampleBatch& batch, std::ostream& os) {
  os << "# method=" << batch.method << ", seed=" << batch.seed << ", n=" << batch.n << "\n";
  const int d = static_cast<int>(batch.draws.cols());
  for (int j = 0; j < d; ++j) os << (j ? "," : "") << "y" << (j + 1);
  os << "\n";
  os.precision(17);
  for (int i = 0; i < batch.draws.rows(); ++i) {
    for (int j = 0; j < d; ++j) os << (j ? "," : "") << batch.draws(i, j);
    os << "\n";
  }
}

}  // namespace sut
