#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sut/errors.hpp"
#include "sut/linalg.hpp"
#include "sut/params.hpp"
#include "sut/rng.hpp"

using namespace sut;

namespace {

SutParams random_valid(int d, int m, double nu, Rng& rng) {
  MatrixXd a(m + d, m + d);
  for (int i = 0; i < m + d; ++i)
    for (int j = 0; j < m + d; ++j) a(i, j) = rng.normal();
  MatrixXd s = a * a.transpose();
  s.diagonal().array() += (m + d) * 1.5;
  const VectorXd inv = s.diagonal().cwiseSqrt().cwiseInverse();
  MatrixXd corr = inv.asDiagonal() * s * inv.asDiagonal();
  corr.diagonal().setOnes();

  SutParams p;
  p.gamma_bar = corr.topLeftCorner(m, m);
  p.delta = corr.bottomLeftCorner(d, m);
  const MatrixXd ob = corr.bottomRightCorner(d, d);
  VectorXd w(d);
  for (int i = 0; i < d; ++i) w[i] = 0.5 + 2.0 * rng.uniform();
  p.omega = w.asDiagonal() * ob * w.asDiagonal();
  p.xi.resize(d);
  for (int i = 0; i < d; ++i) p.xi[i] = rng.normal();
  p.tau.resize(m);
  for (int i = 0; i < m; ++i) p.tau[i] = 0.7 * rng.normal();
  p.nu = nu;
  require_valid(p);
  return p;
}

}  // namespace

TEST_CASE("validation reports each violated invariant") {
  // Schur complement 1 - Delta^T Ob^{-1} Delta = 1 - 1.62 < 0
  SutParams p;
  p.xi = VectorXd::Zero(2);
  p.omega = MatrixXd::Identity(2, 2);
  p.delta = MatrixXd::Constant(2, 1, 0.9);
  p.tau = VectorXd::Zero(1);
  p.gamma_bar = MatrixXd::Identity(1, 1);
  p.nu = 5.0;
  auto v = validate(p);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("extended matrix") != std::string::npos);

  p.delta.setZero();
  CHECK(validate(p).empty());

  p.nu = -1.0;
  v = validate(p);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("nu") != std::string::npos);

  // several violations at once, all reported
  p.nu = -1.0;
  p.gamma_bar(0, 0) = 1.5;
  v = validate(p);
  CHECK(v.size() >= 2);
}

TEST_CASE("sub-model constructors") {
  const SutParams st = make_st(VectorXd::Zero(1), MatrixXd::Identity(1, 1),
                               VectorXd::Constant(1, 0.7), 5.0);
  CHECK(st.m() == 1);
  CHECK(st.tau[0] == 0.0);
  CHECK(st.gamma_bar(0, 0) == 1.0);

  const SutParams t2 = make_t(VectorXd::Zero(2), MatrixXd::Identity(2, 2), 5.0);
  CHECK(t2.m() == 0);
  CHECK(t2.delta.cols() == 0);

  const SutParams sun = make_sun(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                 MatrixXd::Constant(2, 1, 0.3), VectorXd::Zero(1),
                                 MatrixXd::Identity(1, 1));
  CHECK(std::isinf(sun.nu));

  CHECK_THROWS_AS(make_st(VectorXd::Zero(1), MatrixXd::Identity(1, 1),
                          VectorXd::Constant(1, 1.2), 5.0),
                  ValidationFailure);
}

TEST_CASE("identifiable families") {
  // kind 1: rho below the -1/(m-1) bound
  CHECK_THROWS_AS(identifiable_kind1(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                     VectorXd::Constant(2, 0.3), 0.0, -0.6, 3, 5.0),
                  ValidationFailure);
  const auto k1 = identifiable_kind1(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                     VectorXd::Constant(2, 0.3), 0.2, 0.4, 3, 5.0);
  CHECK(!k1.st_limit_advisory);
  CHECK(validate(k1.params).empty());
  CHECK(k1.params.gamma_bar(0, 1) == doctest::Approx(0.4));
  const auto k1hot = identifiable_kind1(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                        VectorXd::Constant(2, 0.1), 0.0, 0.97, 3, 5.0);
  CHECK(k1hot.st_limit_advisory);

  // kind 1 with rho = 0, m = 1 equals the ST parameters exactly
  const auto k1st = identifiable_kind1(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                       VectorXd::Constant(2, 0.3), 0.0, 0.0, 1, 5.0);
  const SutParams st = make_st(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                               VectorXd::Constant(2, 0.3), 5.0);
  CHECK(k1st.params.delta.isApprox(st.delta));
  CHECK(k1st.params.tau.isApprox(st.tau));
  CHECK(k1st.params.gamma_bar.isApprox(st.gamma_bar));

  // kind 2: tau = alpha 1 + beta (1..m)
  const SutParams k2 =
      identifiable_kind2(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                         MatrixXd::Constant(2, 3, 0.2), 0.0, 1.0,
                         MatrixXd::Identity(3, 3), 5.0);
  CHECK(k2.tau[0] == doctest::Approx(1.0));
  CHECK(k2.tau[1] == doctest::Approx(2.0));
  CHECK(k2.tau[2] == doctest::Approx(3.0));
  CHECK_THROWS_AS(identifiable_kind2(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                     MatrixXd::Constant(2, 3, 0.2), 0.0, 0.0,
                                     MatrixXd::Identity(3, 3), 5.0),
                  ValidationFailure);

  // kind 3 validates and has gamma_bar = omega_bar
  MatrixXd ob(2, 2);
  ob << 1.0, 0.3, 0.3, 1.0;
  const SutParams k3 = identifiable_kind3(VectorXd::Zero(2), 1.0, 0.8, ob, 6.0);
  CHECK(k3.m() == 2);
  CHECK(k3.gamma_bar.isApprox(ob));
  CHECK(validate(k3).empty());

  // kind 4 with delta = 0 reduces to the multivariate t (zero skew matrix)
  MatrixXd om(2, 2);
  om << 2.0, 0.4, 0.4, 1.5;
  const SutParams k4 = identifiable_kind4(VectorXd::Zero(2), om, 0.0, 5.0);
  CHECK(k4.delta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(k4.gamma_bar.isApprox(MatrixXd::Identity(2, 2)));
  const SutParams k4s = identifiable_kind4(VectorXd::Zero(2), om, 0.4, 5.0);
  CHECK(validate(k4s).empty());
  // delta Omega^{1/2} is symmetric
  CHECK(is_symmetric(k4s.delta, 1e-10));
}

TEST_CASE("latent permutations are a group action") {
  Rng rng(31);
  const SutParams p = random_valid(2, 3, 5.0, rng);
  const SutParams same = permute_latent(p, {0, 1, 2});
  CHECK(same.delta.isApprox(p.delta));
  CHECK(same.tau.isApprox(p.tau));
  CHECK(same.gamma_bar.isApprox(p.gamma_bar));

  SutParams q = p;
  q.tau << 1.0, 2.0, 3.0;
  require_valid(q);
  const SutParams sw = permute_latent(q, {1, 0, 2});
  CHECK(sw.tau[0] == 2.0);
  CHECK(sw.tau[1] == 1.0);

  // composition equals permuting by the composition, exactly
  const std::vector<int> s1 = {2, 0, 1}, s2 = {1, 2, 0};
  const SutParams lhs = permute_latent(permute_latent(p, s1), s2);
  std::vector<int> comp(3);
  for (int j = 0; j < 3; ++j) comp[j] = s1[s2[j]];
  const SutParams rhs = permute_latent(p, comp);
  CHECK(lhs.delta == rhs.delta);
  CHECK(lhs.tau == rhs.tau);
  CHECK(lhs.gamma_bar == rhs.gamma_bar);

  // inverse returns the base exactly
  const std::vector<int> inv = {1, 2, 0};  // inverse of s1
  const SutParams back = permute_latent(permute_latent(p, s1), inv);
  CHECK(back.delta == p.delta);
  CHECK(back.tau == p.tau);
  CHECK(back.gamma_bar == p.gamma_bar);

  CHECK_THROWS_AS(permute_latent(p, {0, 0, 1}), ValidationFailure);
}

TEST_CASE("H/Psi reparameterization") {
  // Delta = 0: H = 0, Psi = Omega
  const SutParams t2 = make_sut(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                MatrixXd::Zero(2, 1), VectorXd::Zero(1),
                                MatrixXd::Identity(1, 1), 5.0);
  const HPsiParams h0 = to_hpsi(t2);
  CHECK(h0.h.cwiseAbs().maxCoeff() == 0.0);
  CHECK(h0.psi.isApprox(t2.omega));

  // m=1, gamma_bar = 1: H = omega delta
  const SutParams st = make_st(VectorXd::Zero(2),
                               (MatrixXd(2, 2) << 4.0, 0.6, 0.6, 1.0).finished(),
                               VectorXd::Constant(2, 0.5), 5.0);
  const HPsiParams h1 = to_hpsi(st);
  CHECK(h1.h.col(0).isApprox(
      VectorXd(st.omega_scale().cwiseProduct(st.delta.col(0))), 1e-12));

  // round trip on random valid parameters
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const SutParams p = random_valid(2 + rep % 2, 1 + rep % 3, 4.0 + rep, rng);
    const SutParams back = from_hpsi(to_hpsi(p));
    CHECK((back.omega - p.omega).cwiseAbs().maxCoeff() <=
          1e-10 * p.omega.cwiseAbs().maxCoeff());
    CHECK((back.delta - p.delta).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("params json wire format") {
  Rng rng(13);
  const SutParams p = random_valid(2, 2, 7.5, rng);
  const SutParams q = params_from_json_text(params_to_json_text(p));
  CHECK(q.xi.isApprox(p.xi, 1e-12));
  CHECK(q.omega.isApprox(p.omega, 1e-12));
  CHECK(q.delta.isApprox(p.delta, 1e-12));
  CHECK(q.gamma_bar.isApprox(p.gamma_bar, 1e-12));
  CHECK(q.nu == doctest::Approx(p.nu));

  // nu = "inf" round trip
  SutParams s = p;
  s.nu = kInf;
  const SutParams s2 = params_from_json_text(params_to_json_text(s));
  CHECK(std::isinf(s2.nu));

  // strict unknown-key rejection
  CHECK_THROWS_AS(params_from_json_text(R"({"xi":[0],"omega":[[1]],"delta":[[]],
    "tau":[],"gamma_bar":[],"nu":5,"extra":1})"),
                  Error);
  CHECK_THROWS_AS(params_from_json_text("{not json"), Error);
  CHECK_THROWS_AS(params_from_json_text(R"({"xi":[0],"omega":[[1]],"delta":[[]],
    "tau":[],"gamma_bar":[],"nu":"infinity"})"),
                  Error);
  // m = 0 accepted
  const SutParams m0 = params_from_json_text(
      R"({"xi":[0.5],"omega":[[2.0]],"delta":[[]],"tau":[],"gamma_bar":[],"nu":"inf"})");
  CHECK(m0.m() == 0);
  CHECK(m0.d() == 1);

  // gamma_bar unit diagonal is enforced, not renormalized
  CHECK_THROWS_AS(params_from_json_text(
                      R"({"xi":[0],"omega":[[1]],"delta":[[0.2]],"tau":[0],
                          "gamma_bar":[[1.2]],"nu":5})"),
                  ValidationFailure);
}
