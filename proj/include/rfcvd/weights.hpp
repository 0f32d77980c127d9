#pragma once

#include "rfcvd/plane.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rfcvd {

struct Tensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
    bool same_shape(const Tensor& o) const { return dims == o.dims; }
};

// The full weight set of the parameter-prediction network:
//   conv1..conv3: 3x3 stride-2 kernels (25->32, 32->32, 32->32) + biases
//   prelu1, prelu2: scalar negative slopes
//   six 1x1 heads on conv3's output:
//     head_sigma2_{luma,chroma}: 1 channel each
//     head_sigmad_{luma,chroma}, head_sigmar_{luma,chroma}: 3 channels each
struct NetWeights {
    std::vector<Tensor> tensors;

    Tensor* find(const std::string& name);
    const Tensor* find(const std::string& name) const;
    const Tensor& require(const std::string& name) const;
    void check_shapes() const;
};

// conv kernel layout: dims = {out_ch, in_ch, kh, kw}, bias dims = {out_ch}
NetWeights zero_weights();

// shipped default theta0: deterministic small random conv weights, zero head
// kernels, head biases at inverse_softplus of neutral parameter values
NetWeights default_theta0();

NetWeights add_weights(const NetWeights& a, const NetWeights& b);

// RFCW1 little-endian container
void save_weights(const NetWeights& w, const std::string& path);
NetWeights load_weights(const std::string& path);

double softplus(double x);
double inverse_softplus(double y);
float prelu(float x, float slope);

} // namespace rfcvd
