#pragma once

#include "rfcvd/flow.hpp"
#include "rfcvd/param_net.hpp"
#include "rfcvd/plane.hpp"

#include <array>
#include <complex>

namespace rfcvd {

// unitary-normalized 2D DFT of an 8x8 tile (DC of a constant c is 8c)
using Tile8 = std::array<double, 64>;
using Spectrum8 = std::array<std::complex<double>, 64>;

Spectrum8 dft8x8(const Tile8& tile);
Tile8 idft8x8(const Spectrum8& spec);

// Per-frequency shrinkage A_z = |D_z|^2 / (|D_z|^2 + c*sigma2) with
// D_z = T0 - T_z; merged = (1/5) sum_z [T_z + A_z (T0 - T_z)], A_0 = 1.
// A rejected alternate (use_alt false) is pinned to A_z = 1.
Spectrum8 wiener_merge_tile(const Spectrum8& t0, const std::array<Spectrum8, 4>& alts,
                            const std::array<bool, 4>& use_alt, double sigma2, double c);

struct MergeInput {
    const Plane* target;
    std::array<const Plane*, 4> alts;
    std::array<const Plane*, 4> masks;
};

// Overlapped 8x8 tiles, stride 4, raised-cosine window applied before the
// transform and after the inverse; sigma2 looked up by bilinear sampling the
// 1/8-resolution map at tile centers.
Plane merge_plane(const MergeInput& in, const Plane& sigma2_map, double c);

Frame merge_frame(const AlignedSet& aligned, const ParamMaps& maps, double c = 8.0);

// Analytic gradient of merge_plane w.r.t. the sigma2 map, contracted with
// upstream_grad (defined on the output plane).
Plane d_merge_d_sigma2(const MergeInput& in, const Plane& sigma2_map, double c,
                       const Plane& upstream_grad);

// sum over pixels of weights * merge_plane(in, sigma2_map, c), evaluated
// entirely in double precision (no per-pixel float rounding). This is the
// scalar whose sigma2 gradient d_merge_d_sigma2 computes; finite-difference
// verification and loss evaluation should use this path.
double merge_weighted_sum(const MergeInput& in, const Plane& sigma2_map, double c,
                          const Plane& weights);

} // namespace rfcvd
