#pragma once

#include "rfcvd/plane.hpp"

#include <array>

namespace rfcvd {

struct FlowField {
    Plane u; // horizontal displacement, pixels
    Plane v; // vertical displacement, pixels
};

// 1 = bilinear footprint fully in bounds
struct ValidityMask {
    Plane m;
};

struct AlignedSet {
    Frame target;
    std::array<Frame, 4> neighbors; // warped, ordered (t-2, t-1, t+1, t+2)
    std::array<ValidityMask, 4> masks;
    std::array<FlowField, 4> flows;
};

// Pyramidal Lucas-Kanade on luma at quarter input resolution: 3 levels,
// 7x7 window, 3 Gauss-Newton iterations per level. The result is upscaled
// back to full resolution.
FlowField estimate_flow(const Frame& target, const Frame& neighbor);

std::pair<Frame, ValidityMask> warp_backward(const Frame& src, const FlowField& flow);

AlignedSet align_neighbors(const Clip& clip, int t);

} // namespace rfcvd
