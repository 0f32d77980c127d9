#pragma once

#include "rfcvd/plane.hpp"

#include <vector>

namespace rfcvd {

// Bilinear resampling with the half-pixel-center mapping; constants are
// preserved exactly.
Plane resize_bilinear(const Plane& src, int out_w, int out_h);

// 5-tap binomial [1,4,6,4,1]/16, reflected borders.
Plane binomial_blur(const Plane& p);

// level 0 = input; each next level is blur + keep-even-index decimation,
// dimensions halve with ceiling.
std::vector<Plane> build_gaussian_pyramid(const Plane& p, int levels);

int max_pyramid_levels(int w, int h);

struct LaplacianPyramid {
    std::vector<Plane> bands; // 3 band-pass planes at scales 1, 1/2, 1/4
    Plane residual;           // low-pass at 1/8
};

LaplacianPyramid build_laplacian(const Plane& p);
Plane collapse_laplacian(const LaplacianPyramid& pyr);

} // namespace rfcvd
