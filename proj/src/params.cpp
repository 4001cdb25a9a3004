#include "sut/params.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "sut/errors.hpp"
#include "sut/linalg.hpp"

namespace sut {

using nlohmann::json;

MatrixXd SutParams::omega_bar() const {
  const VectorXd w = omega_scale();
  const VectorXd inv = w.cwiseInverse();
  MatrixXd ob = inv.asDiagonal() * omega * inv.asDiagonal();
  ob.diagonal().setOnes();
  return ob;
}

MatrixXd SutParams::extended_corr() const {
  const int dd = d(), mm = m();
  MatrixXd ext(mm + dd, mm + dd);
  ext.topLeftCorner(mm, mm) = gamma_bar;
  ext.topRightCorner(mm, dd) = delta.transpose();
  ext.bottomLeftCorner(dd, mm) = delta;
  ext.bottomRightCorner(dd, dd) = omega_bar();
  return ext;
}

std::vector<std::string> validate(const SutParams& p) {
  std::vector<std::string> v;
  const int d = p.d(), m = p.m();
  if (d < 1) v.push_back("d must be >= 1");
  if (p.omega.rows() != d || p.omega.cols() != d)
    v.push_back("omega must be d x d");
  if (p.delta.rows() != d || p.delta.cols() != m)
    v.push_back("delta must be d x m");
  if (p.gamma_bar.rows() != m || p.gamma_bar.cols() != m)
    v.push_back("gamma_bar must be m x m");
  if (!v.empty()) return v;  // shape errors make the rest meaningless

  bool finite = true;
  if (!p.xi.allFinite()) v.push_back("xi has non-finite entries");
  if (!p.omega.allFinite()) v.push_back("omega has non-finite entries");
  if (!p.delta.allFinite()) v.push_back("delta has non-finite entries");
  if (!p.tau.allFinite()) v.push_back("tau has non-finite entries");
  if (!p.gamma_bar.allFinite()) v.push_back("gamma_bar has non-finite entries");
  if (!v.empty()) finite = false;
  if (!(p.nu > 0.0)) v.push_back("nu must be positive (or inf)");
  if (!finite) return v;  // the numeric checks below need finite entries

  if (!is_symmetric(p.omega)) v.push_back("omega is not symmetric");
  bool omega_pd = true;
  for (int i = 0; i < d; ++i)
    if (!(p.omega(i, i) > 0.0)) {
      v.push_back("omega diagonal entry " + std::to_string(i) + " not positive");
      omega_pd = false;
    }
  if (omega_pd) {
    try {
      cholesky(p.omega);
    } catch (const NotPositiveDefinite& e) {
      v.push_back(std::string("omega not positive definite: ") + e.what());
      omega_pd = false;
    } catch (const NonFiniteInput& e) {
      v.push_back(e.what());
      omega_pd = false;
    }
  }
  if (m > 0) {
    if (!is_symmetric(p.gamma_bar)) v.push_back("gamma_bar is not symmetric");
    for (int i = 0; i < m; ++i)
      if (std::abs(p.gamma_bar(i, i) - 1.0) > 1e-12) {
        v.push_back("gamma_bar diagonal must be 1 (entry " + std::to_string(i) + ")");
        break;
      }
  }
  // Extended correlation PD is the load-bearing check: it covers gamma_bar PD,
  // omega_bar PD, and the conditional covariance gamma_bar - D^T Ob^{-1} D at once.
  if (omega_pd && is_symmetric(p.gamma_bar)) {
    try {
      cholesky(p.extended_corr());
    } catch (const NotPositiveDefinite& e) {
      v.push_back(std::string("extended matrix [[gamma_bar, delta^T],[delta, omega_bar]] "
                              "not positive definite: ") + e.what());
    } catch (const NonFiniteInput& e) {
      v.push_back(e.what());
    }
  }
  return v;
}

void require_valid(const SutParams& p) {
  auto v = validate(p);
  if (!v.empty()) throw ValidationFailure(std::move(v));
}

SutParams make_sut(VectorXd xi, MatrixXd omega, MatrixXd delta, VectorXd tau,
                   MatrixXd gamma_bar, double nu) {
  SutParams p;
  p.xi = std::move(xi);
  p.omega = std::move(omega);
  p.delta = std::move(delta);
  p.tau = std::move(tau);
  p.gamma_bar = std::move(gamma_bar);
  p.nu = nu;
  require_valid(p);
  return p;
}

SutParams make_sun(VectorXd xi, MatrixXd omega, MatrixXd delta, VectorXd tau,
                   MatrixXd gamma_bar) {
  return make_sut(std::move(xi), std::move(omega), std::move(delta), std::move(tau),
                  std::move(gamma_bar), kInf);
}

SutParams make_est(VectorXd xi, MatrixXd omega, VectorXd delta_col, double tau, double nu) {
  const int d = static_cast<int>(xi.size());
  MatrixXd delta(d, 1);
  delta.col(0) = delta_col;
  return make_sut(std::move(xi), std::move(omega), std::move(delta),
                  VectorXd::Constant(1, tau), MatrixXd::Identity(1, 1), nu);
}

SutParams make_esn(VectorXd xi, MatrixXd omega, VectorXd delta_col, double tau) {
  return make_est(std::move(xi), std::move(omega), std::move(delta_col), tau, kInf);
}

SutParams make_st(VectorXd xi, MatrixXd omega, VectorXd delta_col, double nu) {
  return make_est(std::move(xi), std::move(omega), std::move(delta_col), 0.0, nu);
}

SutParams make_sn(VectorXd xi, MatrixXd omega, VectorXd delta_col) {
  return make_st(std::move(xi), std::move(omega), std::move(delta_col), kInf);
}

SutParams make_t(VectorXd xi, MatrixXd omega, double nu) {
  const int d = static_cast<int>(xi.size());
  return make_sut(std::move(xi), std::move(omega), MatrixXd(d, 0), VectorXd(0),
                  MatrixXd(0, 0), nu);
}

SutParams make_normal(VectorXd xi, MatrixXd omega) {
  return make_t(std::move(xi), std::move(omega), kInf);
}

Kind1Result identifiable_kind1(VectorXd xi, MatrixXd omega, VectorXd delta, double tau0,
                               double rho, int m, double nu) {
  if (m < 1) throw ValidationFailure({"kind 1: m must be >= 1"});
  if (m > 1 && !(rho > -1.0 / (m - 1) && rho < 1.0))
    throw ValidationFailure({"kind 1: rho must lie in (-1/(m-1), 1)"});
  const int d = static_cast<int>(xi.size());
  MatrixXd gb = MatrixXd::Constant(m, m, rho);
  gb.diagonal().setOnes();
  MatrixXd dl(d, m);
  for (int j = 0; j < m; ++j) dl.col(j) = delta;
  Kind1Result out{make_sut(std::move(xi), std::move(omega), std::move(dl),
                           VectorXd::Constant(m, tau0), std::move(gb), nu),
                  rho > 0.95};
  return out;
}

SutParams identifiable_kind2(VectorXd xi, MatrixXd omega, MatrixXd delta, double alpha,
                             double beta, MatrixXd gamma_bar, double nu) {
  if (beta == 0.0) throw ValidationFailure({"kind 2: beta must be nonzero"});
  const int m = static_cast<int>(gamma_bar.rows());
  VectorXd tau(m);
  for (int j = 0; j < m; ++j) tau[j] = alpha + beta * (j + 1);
  return make_sut(std::move(xi), std::move(omega), std::move(delta), std::move(tau),
                  std::move(gamma_bar), nu);
}

SutParams identifiable_kind3(VectorXd xi, double w, double delta, MatrixXd omega_bar, double nu) {
  const int d = static_cast<int>(xi.size());
  if (omega_bar.rows() != d) throw DimensionMismatch("kind 3: omega_bar must be d x d");
  const double c = w * delta / std::sqrt(1.0 + delta * delta);
  return make_sut(std::move(xi), w * w * omega_bar, c * omega_bar, VectorXd::Zero(d),
                  omega_bar, nu);
}

SutParams identifiable_kind4(VectorXd xi, MatrixXd omega, double delta, double nu) {
  const int d = static_cast<int>(xi.size());
  const MatrixXd root = sqrtm_spd(omega);
  return make_sut(std::move(xi), std::move(omega), delta * root, VectorXd::Zero(d),
                  MatrixXd::Identity(d, d), nu);
}

SutParams permute_latent(const SutParams& p, const std::vector<int>& perm) {
  const int m = p.m();
  if (static_cast<int>(perm.size()) != m)
    throw ValidationFailure({"permute_latent: permutation length must equal m"});
  std::vector<bool> seen(m, false);
  for (int j : perm) {
    if (j < 0 || j >= m || seen[j])
      throw ValidationFailure({"permute_latent: not a permutation of 0..m-1"});
    seen[j] = true;
  }
  SutParams out = p;
  for (int j = 0; j < m; ++j) {
    out.tau[j] = p.tau[perm[j]];
    out.delta.col(j) = p.delta.col(perm[j]);
    for (int k = 0; k < m; ++k) out.gamma_bar(j, k) = p.gamma_bar(perm[j], perm[k]);
  }
  require_valid(out);
  return out;
}

HPsiParams to_hpsi(const SutParams& p) {
  require_valid(p);
  HPsiParams hp;
  hp.xi = p.xi;
  hp.tau = p.tau;
  hp.gamma_bar = p.gamma_bar;
  hp.nu = p.nu;
  const VectorXd w = p.omega_scale();
  if (p.m() == 0) {
    hp.h = MatrixXd(p.d(), 0);
    hp.psi = p.omega;
    return hp;
  }
  hp.h = w.asDiagonal() * p.delta * p.gamma_bar.inverse();
  hp.psi = p.omega - hp.h * p.gamma_bar * hp.h.transpose();
  hp.psi = 0.5 * (hp.psi + hp.psi.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(hp.psi);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw PsiNotPSD("to_hpsi: Omega - H gamma_bar H^T is not PSD");
  return hp;
}

SutParams from_hpsi(const HPsiParams& hp) {
  SutParams p;
  p.xi = hp.xi;
  p.tau = hp.tau;
  p.gamma_bar = hp.gamma_bar;
  p.nu = hp.nu;
  p.omega = hp.psi;
  if (hp.h.cols() > 0) p.omega += hp.h * hp.gamma_bar * hp.h.transpose();
  p.omega = 0.5 * (p.omega + p.omega.transpose());
  const VectorXd winv = p.omega.diagonal().cwiseSqrt().cwiseInverse();
  p.delta = winv.asDiagonal() * hp.h * hp.gamma_bar;
  require_valid(p);
  return p;
}

namespace {

MatrixXd matrix_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw Error("params json: " + key + " must be an array of rows");
  const int rows = static_cast<int>(j.size());
  int cols = -1;
  for (const auto& row : j) {
    if (!row.is_array()) throw Error("params json: " + key + " rows must be arrays");
    if (cols < 0)
      cols = static_cast<int>(row.size());
    else if (static_cast<int>(row.size()) != cols)
      throw Error("params json: " + key + " rows have unequal lengths");
  }
  if (cols < 0) cols = 0;
  MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) out(i, c) = j[i][c].get<double>();
  return out;
}

VectorXd vector_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw Error("params json: " + key + " must be an array");
  VectorXd out(j.size());
  for (int i = 0; i < static_cast<int>(j.size()); ++i) out[i] = j[i].get<double>();
  return out;
}

}  // namespace

SutParams params_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("params json: parse failure: ") + e.what());
  }
  if (!j.is_object()) throw Error("params json: top level must be an object");
  static const std::set<std::string> allowed = {"xi", "omega", "delta", "tau", "gamma_bar", "nu"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw Error("params json: unknown key '" + it.key() + "'");
  for (const auto& k : allowed)
    if (!j.contains(k)) throw Error("params json: missing key '" + k + "'");

  SutParams p;
  p.xi = vector_from_json(j["xi"], "xi");
  p.omega = matrix_from_json(j["omega"], "omega");
  p.delta = matrix_from_json(j["delta"], "delta");
  p.tau = vector_from_json(j["tau"], "tau");
  p.gamma_bar = matrix_from_json(j["gamma_bar"], "gamma_bar");
  if (j["nu"].is_string()) {
    if (j["nu"].get<std::string>() != "inf")
      throw Error("params json: nu must be a positive number or \"inf\"");
    p.nu = kInf;
  } else if (j["nu"].is_number()) {
    p.nu = j["nu"].get<double>();
  } else {
    throw Error("params json: nu must be a positive number or \"inf\"");
  }
  if (p.m() == 0 && p.delta.size() == 0 && p.delta.rows() != p.d())
    p.delta = MatrixXd(p.d(), 0);  // accept "delta": [] for m = 0
  require_valid(p);
  return p;
}

std::string params_to_json_text(const SutParams& p, int indent) {
  json j;
  j["xi"] = std::vector<double>(p.xi.data(), p.xi.data() + p.xi.size());
  auto mat = [](const MatrixXd& m) {
    std::vector<std::vector<double>> rows(m.rows());
    for (int i = 0; i < m.rows(); ++i) {
      rows[i].resize(m.cols());
      for (int c = 0; c < m.cols(); ++c) rows[i][c] = m(i, c);
    }
    return rows;
  };
  j["omega"] = mat(p.omega);
  j["delta"] = mat(p.delta);
  j["tau"] = std::vector<double>(p.tau.data(), p.tau.data() + p.tau.size());
  j["gamma_bar"] = mat(p.gamma_bar);
  if (is_inf_dof(p.nu))
    j["nu"] = "inf";
  else
    j["nu"] = p.nu;
  return j.dump(indent);
}

}  // namespace sut
