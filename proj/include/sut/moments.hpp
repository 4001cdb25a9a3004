#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sut/params.hpp"
#include "sut/qmc.hpp"

namespace sut {

// Moments of the truncated latent vector U* = (U0 | U0 + tau > 0),
// U0 ~ T_m(0, gamma_bar, nu), plus the Lemma-weighted expectations that the
// convolution-route moment formulas consume. Fields are absent when the dof
// does not support them (mean nu>1, cov nu>2, mu3 nu>3, mu4 and mu2_vstar
// nu>4). All _se fields are 3-sigma bounds from the QMC randomizations.
struct TruncatedMoments {
  int m = 0;
  double nu = kInf;
  std::optional<VectorXd> mean;
  std::optional<MatrixXd> cov;
  std::optional<MatrixXd> mu3;  // raw, m^2 x m
  std::optional<MatrixXd> mu4;  // raw, m^2 x m^2
  std::optional<double> eta_q;  // E{(nu+Q)/(nu+m)}
  std::optional<double> e_q;    // E(Q_{U*})
  std::optional<VectorXd> weighted_mean;    // E(V* U*)
  std::optional<MatrixXd> weighted_second;  // E(V* U* U*^T)
  std::optional<double> mu2_vstar;          // E(V*^2)
  VectorXd mean_se;
  MatrixXd cov_se, mu3_se, mu4_se;
};

TruncatedMoments truncated_t_moments(const VectorXd& tau, const MatrixXd& gamma_bar,
                                     double nu, const QmcConfig& cfg = {});

enum class LemmaH { one, u, uuT, u_kron_uuT, uuT_kron_uuT };

// E{ V*^{k/2} h(U*) }, k in {2,4}; scalars come back as 1x1.
MatrixXd lemma1_expectation(int k, LemmaH h, const VectorXd& tau, const MatrixXd& gamma_bar,
                            double nu, const QmcConfig& cfg = {});

struct MeanVar {
  VectorXd mean;
  MatrixXd cov;
  VectorXd mean_se;
  MatrixXd cov_se;
};
MeanVar mean_var(const SutParams& p, const QmcConfig& cfg = {});

struct MomentSet {
  enum class Kind { raw, central };
  Kind kind = Kind::raw;
  int d = 0;
  std::optional<VectorXd> mu1;
  std::optional<MatrixXd> mu2;
  std::optional<MatrixXd> mu3;  // d^2 x d
  std::optional<MatrixXd> mu4;  // d^2 x d^2
  VectorXd mu1_se;
  MatrixXd mu2_se, mu3_se, mu4_se;
};

// Convolution-route moments (raw about the origin, shift expansion applied).
MomentSet moments_34(const SutParams& p, const QmcConfig& cfg = {});
// SUN-scale-mixture route; requires tau = 0.
MomentSet moments_via_mixture(const SutParams& p, const QmcConfig& cfg = {});
MomentSet to_central(const MomentSet& raw);

struct MardiaMeasures {
  double beta1 = 0.0, beta2 = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;
  double se_gamma1 = 0.0, se_gamma2 = 0.0;
};
enum class MomentRoute { convolution, mixture };
MardiaMeasures mardia(const SutParams& p, const QmcConfig& cfg = {},
                      MomentRoute route = MomentRoute::convolution);

// Raw sample moments (about the origin) and sample Mardia measures; the CLI's
// Monte-Carlo route. Standard errors are batch-means over 16 blocks.
MomentSet sample_moments_raw(const MatrixXd& draws);
MardiaMeasures sample_mardia(const MatrixXd& draws);

// Correlation of Y across a family of H/Psi parameterizations indexed by m:
// Var(Y) = H Var(U*) H^T + eta * Psi (with the t second-moment factor).
struct CorrelationSweepRow {
  int m = 0;
  MatrixXd corr;
};
enum class CorrelationTrend { to_one, to_zero, mixed };
struct CorrelationSweep {
  std::vector<CorrelationSweepRow> rows;
  CorrelationTrend trend = CorrelationTrend::mixed;
};
CorrelationSweep correlation_vs_latent_dim(const std::function<HPsiParams(int)>& generator,
                                           int m_max, const QmcConfig& cfg = {});

}  // namespace sut
