#pragma once

#include "rfcvd/plane.hpp"
#include "rfcvd/weights.hpp"

namespace rfcvd {

// theta = theta0 + delta
struct NoiseProfile {
    NetWeights theta0;
    NetWeights delta;
    NetWeights composed;

    static NoiseProfile compose(NetWeights theta0, NetWeights delta);
};

struct NoiseStats {
    float sigma_hat_luma = 0.0f;
    float sigma_hat_chroma = 0.0f;
    float temporal_rho = 0.0f; // lag-1 correlation of frame-difference residuals
};

// wavelet-MAD estimator: sigma = median(|HH|) / 0.6745 after a one-level
// Haar decomposition
float estimate_noise_mad(const Plane& p);

NoiseStats estimate_noise_stats(const Clip& clip, int anchor);

// Bias-only delta: the six head biases are set so softplus of the composed
// bias hits the classical estimates; everything else stays at theta0.
NoiseProfile classical_profile(const Clip& clip, int anchor = 0);

NoiseProfile load_profile(const NetWeights& theta0, const std::string& path);

// Euclidean norm over all elements of (delta_a - delta_b)
double consistency_loss(const NetWeights& delta_a, const NetWeights& delta_b);

} // namespace rfcvd
