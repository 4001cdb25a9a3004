#pragma once

#include <cstdint>

#include "sut/params.hpp"

// Canned parameterizations for the contour panels and the sweep studies.
// The skew-direction construction follows the convolution rule: columns of
// omega Delta gamma_bar^{-1} are proportional to the requested directions,
// scaled to 0.8 of the positive-definiteness boundary.

namespace sut {

// Bivariate contour presets: m in {1,2,3}, directions (-1,2), (1,2), (1,-6);
// sut = false selects the nu = inf (skew-normal family) panel.
SutParams contour_preset(bool sut, int m);

// Direction sum of the active columns (the documented skew direction).
VectorXd contour_skew_direction(int m);

// Mardia sweep family: d = 2, nu = 5, tau = 0, net skew direction (1,1).
// Loadings fan out of (1,1)/sqrt(2) in symmetric +/- 30 degree steps with
// Psi = I, which makes the measures rise and then fall with m.
HPsiParams mardia_sweep_family(int m);

// Correlation sweep families (d = 2, nu = 5, tau = 0, gamma_bar = I):
// identical loadings along (1,1) drive |rho| -> 1; antithetic uniform
// directions drive rho -> 0.
HPsiParams parallel_loading_family(int m);
HPsiParams spherical_loading_family(int m, std::uint64_t seed);

}  // namespace sut
