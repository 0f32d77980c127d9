#pragma once

namespace rfcvd {

// BT.601 full-range, fixed for the whole pipeline.
struct YCbCr {
    float y, cb, cr;
};
struct Rgb {
    float r, g, b;
};

YCbCr rgb_to_ycbcr(float r, float g, float b);
Rgb ycbcr_to_rgb(float y, float cb, float cr);

} // namespace rfcvd
