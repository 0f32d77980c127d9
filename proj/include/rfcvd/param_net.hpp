#pragma once

#include "rfcvd/flow.hpp"
#include "rfcvd/plane.hpp"
#include "rfcvd/weights.hpp"

#include <array>
#include <vector>

namespace rfcvd {

// CHW multi-channel grid for the small prediction network
struct ChannelGrid {
    int channels = 0;
    int w = 0;
    int h = 0;
    std::vector<float> data;

    ChannelGrid() = default;
    ChannelGrid(int c, int width, int height)
        : channels(c), w(width), h(height), data(std::size_t(c) * width * height, 0.0f) {}

    float* channel(int c) { return data.data() + std::size_t(c) * w * h; }
    const float* channel(int c) const { return data.data() + std::size_t(c) * w * h; }
    float& at(int c, int x, int y) { return data[(std::size_t(c) * h + y) * w + x]; }
    float at(int c, int x, int y) const { return data[(std::size_t(c) * h + y) * w + x]; }
};

// Spatially-varying denoising parameters: noise variance maps at 1/8 target
// resolution plus 3-level sigma pyramids matched to the Laplacian bands.
struct ParamMaps {
    Plane sigma2_luma, sigma2_chroma;
    std::array<Plane, 3> sigmad_luma, sigmad_chroma;
    std::array<Plane, 3> sigmar_luma, sigmar_chroma;
};

struct Knobs {
    float sigma2_luma = 1.0f;
    float sigma2_chroma = 1.0f;
    float sigmad_luma = 1.0f;
    float sigmad_chroma = 1.0f;
    float sigmar_luma = 1.0f;
    float sigmar_chroma = 1.0f;

    void validate() const;
    std::array<float, 6> as_array() const {
        return {sigma2_luma, sigma2_chroma, sigmad_luma, sigmad_chroma, sigmar_luma, sigmar_chroma};
    }
    static Knobs from_array(const std::array<float, 6>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }
};

void sobel_gradients(const Plane& p, Plane& gx, Plane& gy);

// 3x3 cross-correlation, stride 2, zero padding 1; output dims ceil(in/2)
ChannelGrid conv2d_s2(const ChannelGrid& input, const Tensor& kernel, const Tensor& bias);

// fixed 25-channel layout: 5 luma, 5 chroma energy, 10 sobel, 5 masks
ChannelGrid assemble_net_input(const AlignedSet& aligned);

ParamMaps predict_param_maps(const AlignedSet& aligned, const NetWeights& theta);

ParamMaps apply_knobs(const ParamMaps& maps, const Knobs& k);

} // namespace rfcvd
