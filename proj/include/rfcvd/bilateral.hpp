#pragma once

#include "rfcvd/param_net.hpp"
#include "rfcvd/plane.hpp"
#include "rfcvd/pyramid.hpp"

#include <array>

namespace rfcvd {

// Bilateral filter with per-pixel sigmas; sigma_d(p) == 0 or sigma_r(p) == 0
// makes pixel p an exact passthrough.
Plane bilateral_varying(const Plane& band, const Plane& sigma_d, const Plane& sigma_r, int radius);

struct SpatialResult {
    Frame frame;
    // partial collapses of the filtered pyramid at full, half and quarter
    // resolution (luma), for the per-level reconstruction loss
    std::array<Plane, 3> luma_levels;
};

// per-level bilateral radii
constexpr std::array<int, 3> kBilateralRadii = {2, 2, 3};

SpatialResult spatial_denoise(const Frame& frame, const ParamMaps& maps);

struct BilateralSigmaGrads {
    Plane d_sigma_d;
    Plane d_sigma_r;
};

// Analytic gradients of bilateral_varying w.r.t. both sigma maps, contracted
// with upstream_grad. Defined only for strictly positive sigmas.
BilateralSigmaGrads d_bilateral_d_sigma(const Plane& band, const Plane& sigma_d,
                                        const Plane& sigma_r, int radius,
                                        const Plane& upstream_grad);

// sum over pixels of weights * bilateral_varying(band, sigma_d, sigma_r),
// evaluated entirely in double precision (no per-pixel float rounding). This
// is the scalar whose sigma gradients d_bilateral_d_sigma computes;
// finite-difference verification and loss evaluation should use this path.
double bilateral_weighted_sum(const Plane& band, const Plane& sigma_d, const Plane& sigma_r,
                              int radius, const Plane& weights);

} // namespace rfcvd
