#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sut/params.hpp"
#include "sut/qmc.hpp"
#include "sut/rng.hpp"

namespace sut {

struct SampleBatch {
  MatrixXd draws;  // n x d
  std::string method;
  std::uint64_t seed = 0;
  int n = 0;
  double acceptance_rate = 1.0;
};

struct LatentDraws {
  MatrixXd u_star;   // n x m, rows satisfy u + tau > 0
  VectorXd q_ustar;  // u^T gamma_bar^{-1} u per row
  double acceptance_rate = 1.0;
};

struct MixtureDraws {
  VectorXd v;   // Gamma(nu/2, nu/2) variates
  MatrixXd z0;  // n x d SUN draws
};

// Plain rejection against the orthant event; exact. Throws AcceptanceTooLow
// when T_m(tau; gamma_bar, nu) < 1e-6.
LatentDraws sample_truncated_t(const VectorXd& tau, const MatrixXd& gamma_bar, double nu,
                               int n, Rng& rng, const QmcConfig& cfg = {});

SampleBatch sample_selection(const SutParams& p, int n, std::uint64_t seed,
                             const QmcConfig& cfg = {});
SampleBatch sample_convolution(const SutParams& p, int n, std::uint64_t seed,
                               const QmcConfig& cfg = {});
// Requires tau = 0 exactly and finite nu. Also returns the mixing draws
// through *mix when given.
SampleBatch sample_sun_mixture(const SutParams& p, int n, std::uint64_t seed,
                               const QmcConfig& cfg = {}, MixtureDraws* mix = nullptr);

// Header comment lines carry method/seed/n; columns y1..yd.
void write_csv(const SampleBatch& batch, std::ostream& os);

}  // namespace sut
