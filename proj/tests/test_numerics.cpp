#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "sut/errors.hpp"
#include "sut/linalg.hpp"
#include "sut/qmc.hpp"
#include "sut/rng.hpp"
#include "sut/special.hpp"

using namespace sut;

namespace {

MatrixXd random_spd(int d, Rng& rng, double diag_boost = 1.0) {
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  MatrixXd s = a * a.transpose();
  s.diagonal().array() += diag_boost * d;
  return s;
}

MatrixXd random_correlation(int d, Rng& rng) {
  const MatrixXd s = random_spd(d, rng);
  const VectorXd inv = s.diagonal().cwiseSqrt().cwiseInverse();
  MatrixXd c = inv.asDiagonal() * s * inv.asDiagonal();
  c.diagonal().setOnes();
  return c;
}

}  // namespace

TEST_CASE("cholesky basics") {
  CHECK(cholesky(MatrixXd::Identity(3, 3)).isApprox(MatrixXd::Identity(3, 3), 1e-14));

  MatrixXd a(2, 2);
  a << 4.0, 2.0, 2.0, 3.0;
  const MatrixXd l = cholesky(a);
  CHECK(l(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(l(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(l(0, 1) == 0.0);

  MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(cholesky(bad), NotPositiveDefinite);
}

TEST_CASE("cholesky reconstruction on random SPD") {
  Rng rng(11);
  for (int d = 1; d <= 6; ++d) {
    for (int rep = 0; rep < 5; ++rep) {
      const MatrixXd a = random_spd(d, rng);
      const MatrixXd l = cholesky(a);
      const double err = (l * l.transpose() - a).cwiseAbs().maxCoeff();
      CHECK(err <= 1e-10 * a.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("cov_to_cor") {
  const auto id = cov_to_cor(MatrixXd::Identity(3, 3));
  CHECK(id.omega_bar.isApprox(MatrixXd::Identity(3, 3), 1e-14));
  CHECK(id.omega_diag.isApprox(VectorXd::Ones(3), 1e-14));

  MatrixXd dg = VectorXd((VectorXd(2) << 4.0, 9.0).finished()).asDiagonal();
  const auto dd = cov_to_cor(dg);
  CHECK(dd.omega_bar.isApprox(MatrixXd::Identity(2, 2), 1e-14));
  CHECK(dd.omega_diag[0] == doctest::Approx(2.0));
  CHECK(dd.omega_diag[1] == doctest::Approx(3.0));

  MatrixXd a(2, 2);
  a << 4.0, 3.0, 3.0, 9.0;
  const auto cc = cov_to_cor(a);
  CHECK(cc.omega_bar(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  const MatrixXd back =
      cc.omega_diag.asDiagonal() * cc.omega_bar * cc.omega_diag.asDiagonal();
  CHECK((back - a).cwiseAbs().maxCoeff() <= 1e-12 * 9.0);
}

TEST_CASE("kron, vec, commutation") {
  CHECK(commutation(1)(0, 0) == 1.0);
  CHECK(kron(MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3))
            .isApprox(MatrixXd::Identity(6, 6), 1e-15));
  MatrixXd a(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  CHECK((commutation(2) * vec(a)).isApprox(vec(a.transpose()), 1e-15));
  Rng rng(5);
  for (int d = 2; d <= 4; ++d) {
    MatrixXd b(d, d);
    for (int i = 0; i < d * d; ++i) b(i / d, i % d) = rng.normal();
    CHECK((commutation(d) * vec(b)).isApprox(vec(b.transpose()), 1e-14));
  }
}

TEST_CASE("scalar special functions") {
  constexpr double pi = 3.14159265358979323846;
  CHECK(t_pdf_1d(0.0, 1.0) == doctest::Approx(1.0 / pi).epsilon(1e-12));
  CHECK(c_const(1.0, 1.0) == doctest::Approx(1.0 / pi).epsilon(1e-12));
  CHECK(c_const(5.0, 2.0) == doctest::Approx(0.5 / pi).epsilon(1e-12));

  // elliptical symmetry of the density
  CHECK(t_pdf_1d(1.3, 7.0) == doctest::Approx(t_pdf_1d(-1.3, 7.0)).epsilon(1e-15));

  // c ratio finite and positive for nu > k
  for (double nu : {3.0, 5.0, 9.0})
    for (double k : {1.0, 2.0})
      CHECK(c_const(nu, 2.0) / c_const(nu - k, 2.0) > 0.0);

  // 1-d t cdf against the quadrature oracle
  for (double nu : {1.0, 4.0, 12.0})
    for (double x : {-2.5, -0.3, 0.0, 1.7})
      CHECK(t_cdf_1d(x, nu) == doctest::Approx(oracle::t_cdf(x, nu)).epsilon(1e-8));

  // quantile round trips
  for (double p : {1e-6, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-9}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    CHECK(t_cdf_1d(t_quantile_1d(p, 6.0), 6.0) == doctest::Approx(p).epsilon(1e-10));
  }

  // P(1/2, x) = erf(sqrt(x))
  for (double x : {0.1, 1.0, 4.0})
    CHECK(gammap(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));

  for (double nu : {1.0, 3.0, 40.0, 350.0, 1e6})
    for (double p : {0.001, 0.2, 0.5, 0.8, 0.999}) {
      const double q = chisq_quantile(p, nu);
      CHECK(gammap(0.5 * nu, 0.5 * q) == doctest::Approx(p).epsilon(1e-9));
    }

  // F distribution round trips and pdf normalization
  CHECK(fisher_f_cdf(fisher_f_quantile(0.3, 3, 7), 3, 7) == doctest::Approx(0.3).epsilon(1e-10));
  const double mass =
      oracle::integrate([](double x) { return fisher_f_pdf(x, 2.0, 9.0); }, 1e-12, 400.0, 1e-10);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

  // gamma inverse moments
  CHECK(gamma_inverse_moment(5.0, 2) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
  CHECK(gamma_inverse_moment(4.0, 1) == doctest::Approx(1.2533141373155003).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_inverse_moment(4.0, 4), DofTooSmall);
}

TEST_CASE("mvt_cdf trivial and derived values") {
  const QmcConfig cfg;
  CHECK(mvt_cdf(VectorXd::Constant(1, 0.0), MatrixXd::Identity(1, 1), 5.0, cfg).value ==
        doctest::Approx(0.5).epsilon(1e-12));

  for (double nu : {3.0, 11.0, kInf}) {
    const CdfResult q =
        mvt_cdf(VectorXd::Zero(2), MatrixXd::Identity(2, 2), nu, cfg);
    CHECK(std::abs(q.value - 0.25) <= std::max(q.error_estimate, 1e-5));
  }

  MatrixXd c(2, 2);
  c << 1.0, 0.5, 0.5, 1.0;
  const CdfResult q = mvt_cdf(VectorXd::Zero(2), c, 7.0, cfg);
  CHECK(std::abs(q.value - 1.0 / 3.0) <= std::max(3.0 * q.error_estimate, 2e-5));

  // elliptical quadrant rule at a second correlation
  MatrixXd c2(2, 2);
  c2 << 1.0, -0.35, -0.35, 1.0;
  const CdfResult q2 = mvt_cdf(VectorXd::Zero(2), c2, 4.0, cfg);
  CHECK(std::abs(q2.value - oracle::orthant2(-0.35)) <= std::max(3.0 * q2.error_estimate, 2e-5));

  // limits
  Rng rng(3);
  const MatrixXd s = random_spd(3, rng);
  CHECK(mvt_cdf(VectorXd::Constant(3, kInf), s, 5.0, cfg).value == 1.0);
  const VectorXd low = -10.0 * s.diagonal().cwiseSqrt();
  CHECK(mvt_cdf(low, s, 5.0, cfg).value < 1e-3);
  VectorXd mixed(3);
  mixed << kInf, 0.0, -kInf;
  CHECK(mvt_cdf(mixed, s, 5.0, cfg).value == 0.0);

  // d = 0 convention used by the m = 0 paths
  CHECK(mvt_cdf(VectorXd(0), MatrixXd(0, 0), 5.0, cfg).value == 1.0);

  CHECK_THROWS_AS(mvt_cdf(VectorXd::Zero(2), MatrixXd::Ones(2, 2), 5.0, cfg),
                  NotPositiveDefinite);
}

TEST_CASE("mvt_cdf determinism and monotone behavior") {
  const QmcConfig cfg;
  MatrixXd c(3, 3);
  c << 1.0, 0.4, 0.2, 0.4, 1.0, -0.1, 0.2, -0.1, 1.0;
  VectorXd b(3);
  b << 0.3, -0.2, 0.9;
  const CdfResult r1 = mvt_cdf(b, c, 6.0, cfg);
  const CdfResult r2 = mvt_cdf(b, c, 6.0, cfg);
  CHECK(r1.value == r2.value);
  // monotone nondecreasing in each coordinate, statistically
  for (int j = 0; j < 3; ++j) {
    VectorXd b2 = b;
    b2[j] += 0.5;
    const CdfResult r3 = mvt_cdf(b2, c, 6.0, cfg);
    CHECK(r3.value + r3.error_estimate + r1.error_estimate >= r1.value);
  }
}

TEST_CASE("quadrant factorization for block-diagonal sigma") {
  // T_{m+d}((0, y); diag(Gb, Om), nu) = T_m(0; Gb, nu) T_d(y; Om, nu)
  const QmcConfig cfg;
  Rng rng(17);
  for (int rep = 0; rep < 4; ++rep) {
    const int m = 1 + (rep % 2), d = 2;
    const MatrixXd gb = random_correlation(m, rng);
    const MatrixXd om = random_spd(d, rng);
    MatrixXd joint = MatrixXd::Zero(m + d, m + d);
    joint.topLeftCorner(m, m) = gb;
    joint.bottomRightCorner(d, d) = om;
    VectorXd y(d);
    y << 0.4 * rng.normal(), 0.4 * rng.normal();
    VectorXd upper = VectorXd::Zero(m + d);
    upper.tail(d) = y;
    const double nu = 4.0 + rep;
    const CdfResult lhs = mvt_cdf(upper, joint, nu, cfg);
    const CdfResult f1 = mvt_cdf(VectorXd::Zero(m), gb, nu, cfg);
    const CdfResult f2 = mvt_cdf(y, om, nu, cfg);
    const double rhs = f1.value * f2.value;
    const double tol = 3.0 * (lhs.error_estimate + f1.error_estimate + f2.error_estimate + 1e-7);
    CHECK(std::abs(lhs.value - rhs) <= tol);
  }
}

TEST_CASE("quadrature reductions agree with the lattice engine") {
  Rng rng(29);
  const QmcConfig cfg;
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 2 + rep % 2;
    const MatrixXd c = random_correlation(d, rng);
    VectorXd b(d);
    for (int j = 0; j < d; ++j) b[j] = 2.0 * rng.normal();
    const double nu = (rep % 5 == 0) ? kInf : 2.5 + 4.0 * rng.uniform();
    const CdfResult quad = mvt_cdf(b, c, nu, cfg);
    const CdfResult lattice = mvt_cdf_qmc(b, c, nu, cfg);
    CHECK(std::abs(quad.value - lattice.value) <=
          3.0 * lattice.error_estimate + quad.error_estimate + 2e-6);
    CHECK(quad.error_estimate < 1e-6);
  }
}

TEST_CASE("QMC error estimate consistency under point doubling") {
  Rng rng(23);
  int ok = 0;
  const int cases = 100;
  for (int rep = 0; rep < cases; ++rep) {
    const int d = 2 + rep % 3;
    const MatrixXd c = random_correlation(d, rng);
    VectorXd b(d);
    for (int j = 0; j < d; ++j) b[j] = 1.5 * rng.normal();
    const double nu = 3.0 + 5.0 * rng.uniform();
    const QmcConfig base(1 << 11, 8, 1234 + rep);
    const QmcConfig twice(1 << 12, 8, 1234 + rep);
    const CdfResult r1 = mvt_cdf_qmc(b, c, nu, base);
    const CdfResult r2 = mvt_cdf_qmc(b, c, nu, twice);
    if (std::abs(r2.value - r1.value) <= 2.0 * (r1.error_estimate + 1e-12)) ++ok;
  }
  CHECK(ok >= 95);
}

TEST_CASE("truncated moment engine against exact product moments") {
  // nu = inf with diagonal correlation factorizes into 1-d truncated normals
  const QmcConfig cfg;
  VectorXd tau(2);
  tau << 0.6, -0.4;
  const TruncMomentsRaw tm =
      trunc_raw_moments(tau, MatrixXd::Identity(2, 2), kInf, cfg, 4);
  auto tn = [](double a) {  // E[(Z|Z>a)^k]
    const double ph = std::exp(-0.5 * a * a) / std::sqrt(2.0 * 3.14159265358979323846);
    const double p0 = 0.5 * std::erfc(a / std::sqrt(2.0));
    return std::array<double, 5>{1.0, ph / p0, (a * ph + p0) / p0, (a * a + 2.0) * ph / p0,
                                 ((a * a * a + 3.0 * a) * ph + 3.0 * p0) / p0};
  };
  const auto r0 = tn(-0.6), r1 = tn(0.4);
  CHECK(std::abs(tm.m1[0] - r0[1]) <= std::max(tm.m1_se[0], 1e-4));
  CHECK(std::abs(tm.m1[1] - r1[1]) <= std::max(tm.m1_se[1], 1e-4));
  CHECK(std::abs(tm.m2(0, 0) - r0[2]) <= std::max(tm.m2_se(0, 0), 3e-4));
  CHECK(std::abs(tm.m2(0, 1) - r0[1] * r1[1]) <= std::max(tm.m2_se(0, 1), 3e-4));
  CHECK(std::abs(tm.m4(0, 0) - r0[4]) <= std::max(tm.m4_se(0, 0), 3e-3));
  // m4 entry E(U0^2 U1^2) sits at (0*2+1, 0*2+1)
  CHECK(std::abs(tm.m4(1, 1) - r0[2] * r1[2]) <= std::max(tm.m4_se(1, 1), 3e-3));
  // truncation probability = product of tail masses
  const double p_exact = 0.5 * std::erfc(-0.6 / std::sqrt(2.0)) * 0.5 *
                         std::erfc(0.4 / std::sqrt(2.0));
  CHECK(std::abs(tm.prob - p_exact) <= std::max(tm.prob_se, 1e-5));
}

TEST_CASE("truncated moment engine, t cases") {
  const QmcConfig cfg;
  // m=1, tau=0: symmetric half-t, E(U*^2) = nu/(nu-2)
  const TruncMomentsRaw half =
      trunc_raw_moments(VectorXd::Zero(1), MatrixXd::Identity(1, 1), 5.0, cfg, 2);
  CHECK(std::abs(half.m2(0, 0) - 5.0 / 3.0) <= std::max(3.0 * half.m2_se(0, 0), 5e-3));
  // half-t mean against the quadrature oracle
  const double num = oracle::integrate(
      [](double u) { return u * oracle::t_pdf(u, 5.0); }, 0.0, 60.0, 1e-11);
  CHECK(std::abs(half.m1[0] - 2.0 * num) <= std::max(3.0 * half.m1_se[0], 2e-3));

  // far truncation: moments revert to the untruncated t
  VectorXd tau10 = VectorXd::Constant(2, 10.0);
  MatrixXd gb(2, 2);
  gb << 1.0, 0.3, 0.3, 1.0;
  const TruncMomentsRaw far = trunc_raw_moments(tau10, gb, 6.0, cfg, 2);
  CHECK(std::abs(far.m1[0]) <= std::max(3.0 * far.m1_se[0], 5e-3));
  CHECK(std::abs(far.m2(0, 1) - 6.0 / 4.0 * 0.3) <= std::max(3.0 * far.m2_se(0, 1), 2e-2));
  CHECK(far.prob == doctest::Approx(1.0).epsilon(1e-4));

  // exchangeable symmetry
  const TruncMomentsRaw sym =
      trunc_raw_moments(VectorXd::Constant(2, 0.5), gb, 5.0, cfg, 1);
  CHECK(std::abs(sym.m1[0] - sym.m1[1]) <= 3.0 * (sym.m1_se[0] + sym.m1_se[1]) + 1e-3);
}

TEST_CASE("counter rng behaves") {
  Rng a(42), b(42);
  for (int i = 0; i < 5; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  Rng child = c.split();
  (void)child;
  // gamma mean sanity
  Rng g(7);
  double acc = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) acc += g.gamma(2.5, 2.5);
  CHECK(std::abs(acc / n - 1.0) < 0.03);
}
