#include "rfcvd/color.hpp"

#include <algorithm>

namespace rfcvd {

namespace {
inline float clamp01(double v) { return float(std::clamp(v, 0.0, 1.0)); }
}

YCbCr rgb_to_ycbcr(float r, float g, float b) {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    const double cb = 0.5 + (b - y) * 0.564;
    const double cr = 0.5 + (r - y) * 0.713;
    return {clamp01(y), clamp01(cb), clamp01(cr)};
}

Rgb ycbcr_to_rgb(float y, float cb, float cr) {
    const double b = y + (cb - 0.5) / 0.564;
    const double r = y + (cr - 0.5) / 0.713;
    const double g = (y - 0.299 * r - 0.114 * b) / 0.587;
    return {clamp01(r), clamp01(g), clamp01(b)};
}

} // namespace rfcvd
