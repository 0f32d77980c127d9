#include "rfcvd/param_net.hpp"

#include "rfcvd/pyramid.hpp"

#include <cmath>

namespace rfcvd {

void Knobs::validate() const {
    for (float k : as_array())
        if (!(k >= 0.0f) || !std::isfinite(k)) fail(ErrorKind::Usage, "knobs must be non-negative");
}

void sobel_gradients(const Plane& p, Plane& gx, Plane& gy) {
    gx = Plane(p.w, p.h);
    gy = Plane(p.w, p.h);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            const float tl = p.at_reflect(x - 1, y - 1), tc = p.at_reflect(x, y - 1), tr = p.at_reflect(x + 1, y - 1);
            const float ml = p.at_reflect(x - 1, y), mr = p.at_reflect(x + 1, y);
            const float bl = p.at_reflect(x - 1, y + 1), bc = p.at_reflect(x, y + 1), br = p.at_reflect(x + 1, y + 1);
            gx.at(x, y) = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
            gy.at(x, y) = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
        }
}

ChannelGrid conv2d_s2(const ChannelGrid& input, const Tensor& kernel, const Tensor& bias) {
    if (kernel.dims.size() != 4 || kernel.dims[2] != 3 || kernel.dims[3] != 3)
        fail(ErrorKind::Data, "conv2d_s2: kernel must be OxIx3x3");
    const int out_ch = int(kernel.dims[0]);
    const int in_ch = int(kernel.dims[1]);
    if (in_ch != input.channels) fail(ErrorKind::Data, "conv2d_s2: channel mismatch");
    if (int(bias.count()) != out_ch) fail(ErrorKind::Data, "conv2d_s2: bias size mismatch");

    const int ow = (input.w + 1) / 2;
    const int oh = (input.h + 1) / 2;
    ChannelGrid out(out_ch, ow, oh);
    for (int oc = 0; oc < out_ch; ++oc) {
        const float* kbase = kernel.data.data() + std::size_t(oc) * in_ch * 9;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias.data[oc];
                for (int ic = 0; ic < in_ch; ++ic) {
                    const float* k = kbase + std::size_t(ic) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = 2 * oy + ky - 1;
                        if (iy < 0 || iy >= input.h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = 2 * ox + kx - 1;
                            if (ix < 0 || ix >= input.w) continue;
                            acc += double(k[ky * 3 + kx]) * input.at(ic, ix, iy);
                        }
                    }
                }
                out.at(oc, ox, oy) = float(acc);
            }
    }
    return out;
}

ChannelGrid assemble_net_input(const AlignedSet& aligned) {
    const int w = aligned.target.width();
    const int h = aligned.target.height();
    ChannelGrid grid(25, w, h);

    const Frame* frames[5] = {&aligned.target, &aligned.neighbors[0], &aligned.neighbors[1],
                              &aligned.neighbors[2], &aligned.neighbors[3]};
    const std::size_t n = std::size_t(w) * h;
    for (int i = 0; i < 5; ++i) {
        // channel i: luma
        std::copy(frames[i]->y.data.begin(), frames[i]->y.data.end(), grid.channel(i));
        // channel 5+i: chroma energy
        float* ce = grid.channel(5 + i);
        for (std::size_t j = 0; j < n; ++j) {
            const float db = frames[i]->cb.data[j] - 0.5f;
            const float dr = frames[i]->cr.data[j] - 0.5f;
            ce[j] = db * db + dr * dr;
        }
        // channels 10+2i, 11+2i: sobel of luma
        Plane gx, gy;
        sobel_gradients(frames[i]->y, gx, gy);
        std::copy(gx.data.begin(), gx.data.end(), grid.channel(10 + 2 * i));
        std::copy(gy.data.begin(), gy.data.end(), grid.channel(11 + 2 * i));
    }
    // channels 20..24: masks, target first (all ones)
    std::fill(grid.channel(20), grid.channel(20) + n, 1.0f);
    for (int i = 0; i < 4; ++i)
        std::copy(aligned.masks[i].m.data.begin(), aligned.masks[i].m.data.end(), grid.channel(21 + i));
    return grid;
}

namespace {

void prelu_inplace(ChannelGrid& g, float slope) {
    for (float& v : g.data) v = prelu(v, slope);
}

// 1x1 head + softplus, one output plane per head channel
std::vector<Plane> apply_head(const ChannelGrid& features, const Tensor& kernel, const Tensor& bias) {
    const int out_ch = int(kernel.dims[0]);
    const int in_ch = int(kernel.dims[1]);
    if (in_ch != features.channels) fail(ErrorKind::Data, "head: channel mismatch");
    std::vector<Plane> out;
    out.reserve(out_ch);
    for (int oc = 0; oc < out_ch; ++oc) {
        Plane p(features.w, features.h);
        const float* k = kernel.data.data() + std::size_t(oc) * in_ch;
        for (int y = 0; y < features.h; ++y)
            for (int x = 0; x < features.w; ++x) {
                double acc = bias.data[oc];
                for (int ic = 0; ic < in_ch; ++ic) acc += double(k[ic]) * features.at(ic, x, y);
                p.at(x, y) = float(softplus(acc));
            }
        out.push_back(std::move(p));
    }
    return out;
}

std::array<Plane, 3> upsample_pyramid_heads(std::vector<Plane>&& channels, int full_w, int full_h) {
    std::array<Plane, 3> levels;
    for (int k = 0; k < 3; ++k) {
        const int lw = k == 0 ? full_w : (k == 1 ? (full_w + 1) / 2 : ((full_w + 1) / 2 + 1) / 2);
        const int lh = k == 0 ? full_h : (k == 1 ? (full_h + 1) / 2 : ((full_h + 1) / 2 + 1) / 2);
        levels[k] = resize_bilinear(channels[k], lw, lh);
    }
    return levels;
}

} // namespace

ParamMaps predict_param_maps(const AlignedSet& aligned, const NetWeights& theta) {
    if (aligned.target.width() < 32 || aligned.target.height() < 32)
        fail(ErrorKind::Data, "predict_param_maps: target must be at least 32px");
    theta.check_shapes();

    ChannelGrid x = assemble_net_input(aligned);
    x = conv2d_s2(x, theta.require("conv1.weight"), theta.require("conv1.bias"));
    prelu_inplace(x, theta.require("prelu1.slope").data[0]);
    x = conv2d_s2(x, theta.require("conv2.weight"), theta.require("conv2.bias"));
    prelu_inplace(x, theta.require("prelu2.slope").data[0]);
    x = conv2d_s2(x, theta.require("conv3.weight"), theta.require("conv3.bias"));

    const int w = aligned.target.width();
    const int h = aligned.target.height();
    ParamMaps maps;
    maps.sigma2_luma = std::move(apply_head(x, theta.require("head_sigma2_luma.weight"),
                                            theta.require("head_sigma2_luma.bias"))[0]);
    maps.sigma2_chroma = std::move(apply_head(x, theta.require("head_sigma2_chroma.weight"),
                                              theta.require("head_sigma2_chroma.bias"))[0]);
    maps.sigmad_luma = upsample_pyramid_heads(
        apply_head(x, theta.require("head_sigmad_luma.weight"), theta.require("head_sigmad_luma.bias")), w, h);
    maps.sigmad_chroma = upsample_pyramid_heads(
        apply_head(x, theta.require("head_sigmad_chroma.weight"), theta.require("head_sigmad_chroma.bias")), w, h);
    maps.sigmar_luma = upsample_pyramid_heads(
        apply_head(x, theta.require("head_sigmar_luma.weight"), theta.require("head_sigmar_luma.bias")), w, h);
    maps.sigmar_chroma = upsample_pyramid_heads(
        apply_head(x, theta.require("head_sigmar_chroma.weight"), theta.require("head_sigmar_chroma.bias")), w, h);
    return maps;
}

ParamMaps apply_knobs(const ParamMaps& maps, const Knobs& k) {
    k.validate();
    ParamMaps out = maps;
    auto scale = [](Plane& p, float s) {
        for (float& v : p.data) v *= s;
    };
    scale(out.sigma2_luma, k.sigma2_luma);
    scale(out.sigma2_chroma, k.sigma2_chroma);
    for (int l = 0; l < 3; ++l) {
        scale(out.sigmad_luma[l], k.sigmad_luma);
        scale(out.sigmad_chroma[l], k.sigmad_chroma);
        scale(out.sigmar_luma[l], k.sigmar_luma);
        scale(out.sigmar_chroma[l], k.sigmar_chroma);
    }
    return out;
}

} // namespace rfcvd
