#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "sut/errors.hpp"
#include "sut/quadform.hpp"
#include "sut/rng.hpp"
#include "sut/sampling.hpp"

using namespace sut;

namespace {

// bin-count comparison of the estimated density against draws of Q
void check_against_histogram(const SutParams& p, const QuadFormEstimate& est,
                             const MatrixXd& draws) {
  const int n = static_cast<int>(draws.rows());
  const MatrixXd om_inv = p.omega.inverse();
  VectorXd q(n);
  for (int i = 0; i < n; ++i) {
    const VectorXd c = draws.row(i).transpose() - p.xi;
    q[i] = c.dot(om_inv * c);
  }
  const int nb = 30;
  const double lo = est.grid[10], hi = est.grid[est.grid.size() - 11];
  const double h = (hi - lo) / nb;
  for (int b = 0; b < nb; ++b) {
    const double a = lo + b * h, z = a + h;
    long cnt = 0;
    for (int i = 0; i < n; ++i)
      if (q[i] >= a && q[i] < z) ++cnt;
    const double phat = static_cast<double>(cnt) / n;
    // integrate the estimated density over the bin by the trapezoid rule
    double mass = 0.0, err = 0.0;
    int used = 0;
    for (int g = 0; g + 1 < est.grid.size(); ++g) {
      const double x0 = est.grid[g], x1 = est.grid[g + 1];
      if (x1 < a || x0 > z) continue;
      const double w = std::min(x1, z) - std::max(x0, a);
      mass += 0.5 * (est.density[g] + est.density[g + 1]) * w;
      err += 0.5 * (est.se[g] + est.se[g + 1]) * w;
      ++used;
    }
    if (used == 0) continue;
    const double se = 4.0 * std::sqrt(std::max(phat, mass) * (1.0) / n) + err + 0.02 * mass;
    CHECK(std::abs(phat - mass) <= se);
  }
}

}  // namespace

TEST_CASE("symmetric univariate case is the squared t, an F(1, nu) law") {
  const double nu = 7.0;
  const SutParams p = make_t(VectorXd::Zero(1), MatrixXd::Identity(1, 1), nu);
  // central 98% mass grid
  VectorXd grid(150);
  const double lo = fisher_f_quantile(0.01, 1, nu), hi = fisher_f_quantile(0.99, 1, nu);
  for (int i = 0; i < 150; ++i) grid[i] = lo + (hi - lo) * i / 149.0;
  const QuadFormEstimate est = quadform_pdf(p, grid);
  for (int i = 0; i < grid.size(); ++i) {
    const double want = fisher_f_pdf(grid[i], 1, nu);
    CHECK(std::abs(est.density[i] - want) <= 0.02 * want + 1e-12);
  }
}

TEST_CASE("symmetric bivariate case matches simulated quadratic forms") {
  Rng rng(3);
  MatrixXd om(2, 2);
  om << 1.4, 0.5, 0.5, 1.0;
  const SutParams p = make_t(VectorXd::Zero(2), om, 6.0);
  const QuadFormEstimate est = quadform_pdf(p, VectorXd());
  const SampleBatch b = sample_convolution(p, 300000, 71);
  check_against_histogram(p, est, b.draws);
  // the default grid covers the central mass
  CHECK(est.grid[0] == doctest::Approx(2.0 * fisher_f_quantile(0.001, 2, 6.0)));
}

TEST_CASE("skewed case matches simulated quadratic forms") {
  SutParams p;
  p.xi = (VectorXd(2) << 0.3, -0.2).finished();
  p.omega = (MatrixXd(2, 2) << 1.0, 0.2, 0.2, 1.0).finished();
  p.delta = (MatrixXd(2, 1) << 0.6, 0.25).finished();
  p.tau = VectorXd::Constant(1, 0.5);
  p.gamma_bar = MatrixXd::Identity(1, 1);
  p.nu = 6.0;
  require_valid(p);
  const QuadFormEstimate est = quadform_pdf(p, VectorXd());
  const SampleBatch b = sample_selection(p, 300000, 72);
  check_against_histogram(p, est, b.draws);
}

TEST_CASE("normalization of the estimated density") {
  SutParams p;
  p.xi = VectorXd::Zero(2);
  p.omega = MatrixXd::Identity(2, 2);
  p.delta = (MatrixXd(2, 1) << 0.5, -0.3).finished();
  p.tau = VectorXd::Constant(1, 0.2);
  p.gamma_bar = MatrixXd::Identity(1, 1);
  p.nu = 5.0;
  require_valid(p);
  // extend the default grid: [q_0.0005, q_0.9995] captures ~99.9% of the mass
  VectorXd grid(400);
  const double lo = 2.0 * fisher_f_quantile(5e-4, 2, 5.0);
  const double hi = 2.0 * fisher_f_quantile(1.0 - 5e-4, 2, 5.0);
  for (int i = 0; i < 400; ++i) grid[i] = lo + (hi - lo) * i / 399.0;
  const QuadFormEstimate est = quadform_pdf(p, grid);
  double mass = 0.0;
  for (int g = 0; g + 1 < grid.size(); ++g)
    mass += 0.5 * (est.density[g] + est.density[g + 1]) * (grid[g + 1] - grid[g]);
  CHECK(mass == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("skewed density approaches the symmetric one as delta shrinks") {
  const SutParams sym = make_t(VectorXd::Zero(2), MatrixXd::Identity(2, 2), 6.0);
  VectorXd grid(100);
  const double lo = 2.0 * fisher_f_quantile(0.01, 2, 6.0);
  const double hi = 2.0 * fisher_f_quantile(0.99, 2, 6.0);
  for (int i = 0; i < 100; ++i) grid[i] = lo + (hi - lo) * i / 99.0;
  const QuadFormEstimate base = quadform_pdf(sym, grid);
  double prev = 1e9;
  for (double scale : {0.6, 0.2, 0.066}) {
    SutParams p = sym;
    p.delta = (MatrixXd(2, 1) << scale, 0.5 * scale).finished();
    p.tau = VectorXd::Constant(1, 0.5 * scale);
    p.gamma_bar = MatrixXd::Identity(1, 1);
    require_valid(p);
    const QuadFormEstimate e = quadform_pdf(p, grid);
    const double sup = (e.density - base.density).cwiseAbs().maxCoeff();
    CHECK(sup < prev);
    prev = sup;
  }
}

TEST_CASE("invariance report") {
  const SutParams sym = make_t(VectorXd::Zero(2), MatrixXd::Identity(2, 2), 6.0);
  const InvarianceReport r0 = invariance_check(sym);
  CHECK(r0.invariant);

  SutParams p = sym;
  p.delta = (MatrixXd(2, 1) << 0.4, 0.1).finished();
  p.tau = VectorXd::Zero(1);
  p.gamma_bar = MatrixXd::Identity(1, 1);
  require_valid(p);
  const InvarianceReport r1 = invariance_check(p);
  CHECK(!r1.invariant);
  CHECK(r1.cov_witness.isApprox(MatrixXd(-p.delta)));

  // delta = 0 with m = 2 and tau = 0: the chi-square radial condition
  SutParams q = sym;
  q.delta = MatrixXd::Zero(2, 2);
  q.tau = VectorXd::Zero(2);
  q.gamma_bar = MatrixXd::Identity(2, 2);
  require_valid(q);
  const InvarianceReport r2 = invariance_check(q);
  CHECK(r2.chi_square_radial);

  // and the scaled-F radial law is confirmed on draws: Q/d ~ F(d, nu)
  const SampleBatch b = sample_selection(q, 100000, 73);
  const MatrixXd om_inv = q.omega.inverse();
  VectorXd qs(b.draws.rows());
  for (int i = 0; i < b.draws.rows(); ++i) {
    const VectorXd c = b.draws.row(i).transpose() - q.xi;
    qs[i] = c.dot(om_inv * c) / 2.0;
  }
  const auto ks =
      oracle::ks_vs_cdf(qs, [&](double x) { return fisher_f_cdf(x, 2.0, 6.0); });
  CHECK(ks.pass);
}
