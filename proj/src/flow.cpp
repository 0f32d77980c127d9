#include "rfcvd/flow.hpp"

#include "rfcvd/pyramid.hpp"

#include <algorithm>
#include <cmath>

namespace rfcvd {

namespace {

constexpr int kLkLevels = 3;
constexpr int kLkRadius = 3; // 7x7 window
constexpr int kLkIters = 3;
constexpr float kLkRegularizer = 1e-4f;

float sample_bilinear_clamp(const Plane& p, float fx, float fy) {
    const int x0 = int(std::floor(fx));
    const int y0 = int(std::floor(fy));
    const float wx = fx - x0;
    const float wy = fy - y0;
    const float a = p.at_clamp(x0, y0);
    const float b = p.at_clamp(x0 + 1, y0);
    const float c = p.at_clamp(x0, y0 + 1);
    const float d = p.at_clamp(x0 + 1, y0 + 1);
    return (a * (1 - wx) + b * wx) * (1 - wy) + (c * (1 - wx) + d * wx) * wy;
}

Plane warp_plane(const Plane& src, const Plane& u, const Plane& v) {
    Plane out(src.w, src.h);
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x)
            out.at(x, y) = sample_bilinear_clamp(src, x + u.at(x, y), y + v.at(x, y));
    return out;
}

void gradients_central(const Plane& p, Plane& gx, Plane& gy) {
    gx = Plane(p.w, p.h);
    gy = Plane(p.w, p.h);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            gx.at(x, y) = 0.5f * (p.at_clamp(x + 1, y) - p.at_clamp(x - 1, y));
            gy.at(x, y) = 0.5f * (p.at_clamp(x, y + 1) - p.at_clamp(x, y - 1));
        }
}

// one Gauss-Newton refinement pass at a single pyramid level; gradients are
// averaged between the template and the warped neighbor (symmetric KLT step),
// and window taps outside the plane are dropped rather than clamped so border
// pixels are not double-counted in the normal equations
void lk_refine(const Plane& target, const Plane& neighbor, const Plane& tgx, const Plane& tgy,
               Plane& u, Plane& v) {
    const Plane warped = warp_plane(neighbor, u, v);
    Plane gx, gy;
    gradients_central(warped, gx, gy);
    for (std::size_t i = 0; i < gx.size(); ++i) {
        gx.data[i] = 0.5f * (gx.data[i] + tgx.data[i]);
        gy.data[i] = 0.5f * (gy.data[i] + tgy.data[i]);
    }
    Plane du(target.w, target.h), dv(target.w, target.h);
    for (int y = 0; y < target.h; ++y) {
        for (int x = 0; x < target.w; ++x) {
            double axx = 0, axy = 0, ayy = 0, bx = 0, by = 0;
            for (int dy = -kLkRadius; dy <= kLkRadius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= target.h) continue;
                for (int dx = -kLkRadius; dx <= kLkRadius; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= target.w) continue;
                    const double ix = gx.at(xx, yy);
                    const double iy = gy.at(xx, yy);
                    const double it = warped.at(xx, yy) - target.at(xx, yy);
                    axx += ix * ix;
                    axy += ix * iy;
                    ayy += iy * iy;
                    bx += ix * it;
                    by += iy * it;
                }
            }
            axx += kLkRegularizer;
            ayy += kLkRegularizer;
            const double det = axx * ayy - axy * axy;
            du.at(x, y) = float((-bx * ayy + by * axy) / det);
            dv.at(x, y) = float((bx * axy - by * axx) / det);
        }
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
        u.data[i] += du.data[i];
        v.data[i] += dv.data[i];
    }
}

Plane quarter_res(const Plane& p) {
    return build_gaussian_pyramid(p, 3)[2];
}

} // namespace

FlowField estimate_flow(const Frame& target, const Frame& neighbor) {
    if (!target.same_dims(neighbor)) fail(ErrorKind::Data, "estimate_flow: dimension mismatch");
    if (std::min(target.width(), target.height()) < 32)
        fail(ErrorKind::Data, "estimate_flow: frames must be at least 32px");

    const Plane tq = quarter_res(target.y);
    const Plane nq = quarter_res(neighbor.y);
    const int levels = std::min(kLkLevels, max_pyramid_levels(tq.w, tq.h));
    const auto tpyr = build_gaussian_pyramid(tq, std::max(levels, 1));
    const auto npyr = build_gaussian_pyramid(nq, std::max(levels, 1));

    Plane u(tpyr.back().w, tpyr.back().h);
    Plane v(tpyr.back().w, tpyr.back().h);
    for (int l = int(tpyr.size()) - 1; l >= 0; --l) {
        if (l != int(tpyr.size()) - 1) {
            u = resize_bilinear(u, tpyr[l].w, tpyr[l].h);
            v = resize_bilinear(v, tpyr[l].w, tpyr[l].h);
            for (std::size_t i = 0; i < u.size(); ++i) {
                u.data[i] *= 2.0f;
                v.data[i] *= 2.0f;
            }
        }
        Plane tgx, tgy;
        gradients_central(tpyr[std::size_t(l)], tgx, tgy);
        for (int it = 0; it < kLkIters; ++it) {
            lk_refine(tpyr[std::size_t(l)], npyr[std::size_t(l)], tgx, tgy, u, v);
            // smooth the field between passes: per-pixel normal-equation solves
            // are noisy on rough texture, and warping with a rough field feeds
            // that noise back into the next linearization
            u = binomial_blur(u);
            v = binomial_blur(v);
        }
    }

    FlowField flow;
    flow.u = resize_bilinear(u, target.width(), target.height());
    flow.v = resize_bilinear(v, target.width(), target.height());
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        flow.u.data[i] *= 4.0f;
        flow.v.data[i] *= 4.0f;
    }
    return flow;
}

std::pair<Frame, ValidityMask> warp_backward(const Frame& src, const FlowField& flow) {
    if (!src.y.same_dims(flow.u) || !src.y.same_dims(flow.v))
        fail(ErrorKind::Data, "warp_backward: dimension mismatch");
    Frame out;
    out.index = src.index;
    out.y = Plane(src.width(), src.height());
    out.cb = Plane(src.width(), src.height());
    out.cr = Plane(src.width(), src.height());
    ValidityMask mask{Plane(src.width(), src.height())};
    const int w = src.width(), h = src.height();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float fx = x + flow.u.at(x, y);
            const float fy = y + flow.v.at(x, y);
            out.y.at(x, y) = sample_bilinear_clamp(src.y, fx, fy);
            out.cb.at(x, y) = sample_bilinear_clamp(src.cb, fx, fy);
            out.cr.at(x, y) = sample_bilinear_clamp(src.cr, fx, fy);
            const bool inside = fx >= 0.0f && fx <= float(w - 1) && fy >= 0.0f && fy <= float(h - 1);
            mask.m.at(x, y) = inside ? 1.0f : 0.0f;
        }
    return {std::move(out), std::move(mask)};
}

AlignedSet align_neighbors(const Clip& clip, int t) {
    if (t < 0 || std::size_t(t) >= clip.size())
        fail(ErrorKind::Usage, "align_neighbors: frame index out of range");
    AlignedSet set;
    set.target = clip.frames[t];
    static const int offsets[4] = {-2, -1, 1, 2};
    for (int i = 0; i < 4; ++i) {
        const int n = t + offsets[i];
        if (n < 0 || std::size_t(n) >= clip.size()) {
            // missing neighbor at a clip boundary: duplicate the target
            set.neighbors[i] = set.target;
            set.masks[i] = ValidityMask{Plane(clip.width(), clip.height(), 1.0f)};
            set.flows[i] = FlowField{Plane(clip.width(), clip.height()), Plane(clip.width(), clip.height())};
        } else {
            set.flows[i] = estimate_flow(set.target, clip.frames[n]);
            auto [warped, mask] = warp_backward(clip.frames[n], set.flows[i]);
            set.neighbors[i] = std::move(warped);
            set.masks[i] = std::move(mask);
        }
    }
    return set;
}

} // namespace rfcvd
