#include "oracle.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

namespace {
constexpr double kPi = 3.14159265358979323846;

double simpson(const std::function<double(double)>& f, double a, double b, double fa,
               double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

double t_pdf(double x, double nu) {
  return std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)) /
         std::sqrt(kPi * nu) * std::pow(1.0 + x * x / nu, -0.5 * (nu + 1.0));
}

double t_cdf(double x, double nu) {
  if (x == 0.0) return 0.5;
  const double ax = std::abs(x);
  // integrate the density from 0 to |x|; the substitution u = 1/t covers the tail
  const double body = integrate([&](double t) { return t_pdf(t, nu); }, 0.0, std::min(ax, 30.0));
  double tail = 0.0;
  if (ax > 30.0)
    tail = integrate([&](double u) { return t_pdf(1.0 / u, nu) / (u * u); }, 1.0 / ax, 1.0 / 30.0);
  const double half = body + tail;
  return x > 0.0 ? 0.5 + half : 0.5 - half;
}

double StReference::pdf(double y) const {
  const double alpha = delta / std::sqrt(1.0 - delta * delta);
  const double arg = alpha * y * std::sqrt((nu + 1.0) / (nu + y * y));
  return 2.0 * t_pdf(y, nu) * t_cdf(arg, nu + 1.0);
}

namespace {
double b_nu(double nu) {
  return std::sqrt(nu / kPi) * std::exp(std::lgamma(0.5 * (nu - 1.0)) - std::lgamma(0.5 * nu));
}
}  // namespace

double StReference::mean() const { return b_nu(nu) * delta; }

double StReference::var() const { return nu / (nu - 2.0) - mean() * mean(); }

double StReference::skewness() const {
  const double m = mean();
  return m * (nu * (3.0 - delta * delta) / (nu - 3.0) - 3.0 * nu / (nu - 2.0) + 2.0 * m * m) /
         std::pow(var(), 1.5);
}

double StReference::kurtosis_excess() const {
  const double m = mean();
  const double m2 = m * m;
  return (3.0 * nu * nu / ((nu - 2.0) * (nu - 4.0)) -
          4.0 * m2 * nu * (3.0 - delta * delta) / (nu - 3.0) + 6.0 * m2 * nu / (nu - 2.0) -
          3.0 * m2 * m2) /
             (var() * var()) -
         3.0;
}

OracleReport compare(std::string statistic, double oracle_value, double artifact_value,
                     double se, double z_threshold) {
  OracleReport r;
  r.statistic = std::move(statistic);
  r.oracle_value = oracle_value;
  r.artifact_value = artifact_value;
  r.se = se;
  r.z = se > 0.0 ? (artifact_value - oracle_value) / se
                 : (artifact_value == oracle_value ? 0.0 : 1e308);
  r.pass = std::abs(r.z) <= z_threshold;
  return r;
}

double t_variance_factor(double nu) { return nu / (nu - 2.0); }

double t_mardia_gamma2(int d, double nu) { return 2.0 * d * (d + 2.0) / (nu - 4.0); }

double orthant2(double rho) { return 0.25 + std::asin(rho) / (2.0 * kPi); }

MeanCov mc_mean_cov(const MatrixXd& draws) {
  const int n = static_cast<int>(draws.rows());
  const int d = static_cast<int>(draws.cols());
  MeanCov out;
  out.mean = draws.colwise().mean().transpose();
  out.cov = MatrixXd::Zero(d, d);
  for (int r = 0; r < n; ++r) {
    const VectorXd c = draws.row(r).transpose() - out.mean;
    out.cov += c * c.transpose();
  }
  out.cov /= (n - 1.0);
  out.mean_se = 3.0 * (out.cov.diagonal() / n).cwiseSqrt();
  return out;
}

ThirdMoments mc_third_central(const MatrixXd& draws) {
  const int n = static_cast<int>(draws.rows());
  const int d = static_cast<int>(draws.cols());
  const VectorXd mean = draws.colwise().mean().transpose();
  const int nb = 20, bs = n / nb;
  MatrixXd blocks(nb, d);
  for (int b = 0; b < nb; ++b) {
    VectorXd acc = VectorXd::Zero(d);
    for (int r = b * bs; r < (b + 1) * bs; ++r) {
      const VectorXd c = draws.row(r).transpose() - mean;
      acc += c.array().cube().matrix();
    }
    blocks.row(b) = (acc / bs).transpose();
  }
  ThirdMoments out;
  out.m3 = blocks.colwise().mean().transpose();
  out.se.resize(d);
  for (int j = 0; j < d; ++j) {
    double ss = 0.0;
    for (int b = 0; b < nb; ++b) ss += std::pow(blocks(b, j) - out.m3[j], 2);
    out.se[j] = 3.0 * std::sqrt(ss / (nb * (nb - 1.0)));
  }
  return out;
}

KsResult ks_two_sample(VectorXd a, VectorXd b) {
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
  double stat = 0.0;
  int i = 0, j = 0;
  while (i < na && j < nb) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    stat = std::max(stat, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult out;
  out.stat = stat;
  // c(0.01) = sqrt(-ln(0.005)/2)
  out.critical = 1.62762 * std::sqrt((na + nb) / (static_cast<double>(na) * nb));
  out.pass = stat <= out.critical;
  return out;
}

KsResult ks_vs_cdf(VectorXd sample, const std::function<double(double)>& cdf) {
  std::sort(sample.data(), sample.data() + sample.size());
  const int n = static_cast<int>(sample.size());
  double stat = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = cdf(sample[i]);
    stat = std::max(stat, std::abs(c - static_cast<double>(i) / n));
    stat = std::max(stat, std::abs(c - static_cast<double>(i + 1) / n));
  }
  KsResult out;
  out.stat = stat;
  out.critical = 1.62762 / std::sqrt(static_cast<double>(n));
  out.pass = stat <= out.critical;
  return out;
}

double empirical_cdf_at(const VectorXd& sample, double x) {
  long c = 0;
  for (int i = 0; i < sample.size(); ++i)
    if (sample[i] <= x) ++c;
  return static_cast<double>(c) / sample.size();
}

}  // namespace oracle
