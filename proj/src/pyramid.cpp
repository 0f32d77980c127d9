#include "rfcvd/pyramid.hpp"

#include <algorithm>
#include <cmath>

namespace rfcvd {

Plane resize_bilinear(const Plane& src, int out_w, int out_h) {
    if (src.w == out_w && src.h == out_h) return src;
    Plane out(out_w, out_h);
    const double sx = double(src.w) / out_w;
    const double sy = double(src.h) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = int(std::floor(fy));
        const float wy = float(fy - y0);
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = int(std::floor(fx));
            const float wx = float(fx - x0);
            const float a = src.at_clamp(x0, y0);
            const float b = src.at_clamp(x0 + 1, y0);
            const float c = src.at_clamp(x0, y0 + 1);
            const float d = src.at_clamp(x0 + 1, y0 + 1);
            out.at(x, y) = (a * (1 - wx) + b * wx) * (1 - wy) + (c * (1 - wx) + d * wx) * wy;
        }
    }
    return out;
}

Plane binomial_blur(const Plane& p) {
    static const float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
    Plane tmp(p.w, p.h);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            float acc = 0;
            for (int t = -2; t <= 2; ++t) acc += k[t + 2] * p.at(reflect_index(x + t, p.w), y);
            tmp.at(x, y) = acc;
        }
    Plane out(p.w, p.h);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            float acc = 0;
            for (int t = -2; t <= 2; ++t) acc += k[t + 2] * tmp.at(x, reflect_index(y + t, p.h));
            out.at(x, y) = acc;
        }
    return out;
}

int max_pyramid_levels(int w, int h) {
    return int(std::floor(std::log2(double(std::min(w, h))))) - 1;
}

std::vector<Plane> build_gaussian_pyramid(const Plane& p, int levels) {
    if (levels < 1) fail(ErrorKind::Usage, "pyramid needs >= 1 level");
    if (levels > max_pyramid_levels(p.w, p.h))
        fail(ErrorKind::Data, "too many pyramid levels for " + std::to_string(p.w) + "x" + std::to_string(p.h));
    std::vector<Plane> pyr;
    pyr.reserve(levels);
    pyr.push_back(p);
    for (int l = 1; l < levels; ++l) {
        const Plane blurred = binomial_blur(pyr.back());
        Plane next((blurred.w + 1) / 2, (blurred.h + 1) / 2);
        for (int y = 0; y < next.h; ++y)
            for (int x = 0; x < next.w; ++x)
                next.at(x, y) = blurred.at(2 * x, 2 * y);
        pyr.push_back(std::move(next));
    }
    return pyr;
}

LaplacianPyramid build_laplacian(const Plane& p) {
    if (p.w < 32 || p.h < 32) fail(ErrorKind::Data, "plane too small for laplacian pyramid");
    const auto gauss = build_gaussian_pyramid(p, 4);
    LaplacianPyramid pyr;
    pyr.bands.reserve(3);
    for (int l = 0; l < 3; ++l) {
        const Plane up = resize_bilinear(gauss[l + 1], gauss[l].w, gauss[l].h);
        Plane band(gauss[l].w, gauss[l].h);
        for (std::size_t i = 0; i < band.size(); ++i)
            band.data[i] = gauss[l].data[i] - up.data[i];
        pyr.bands.push_back(std::move(band));
    }
    pyr.residual = gauss[3];
    return pyr;
}

Plane collapse_laplacian(const LaplacianPyramid& pyr) {
    if (pyr.bands.size() != 3) fail(ErrorKind::Data, "laplacian pyramid must have 3 bands");
    Plane acc = pyr.residual;
    for (int l = 2; l >= 0; --l) {
        const Plane& band = pyr.bands[l];
        Plane up = resize_bilinear(acc, band.w, band.h);
        for (std::size_t i = 0; i < up.size(); ++i) up.data[i] += band.data[i];
        acc = std::move(up);
    }
    return acc;
}

} // namespace rfcvd
