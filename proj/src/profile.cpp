#include "rfcvd/profile.hpp"

#include "rfcvd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rfcvd {

NoiseProfile NoiseProfile::compose(NetWeights theta0, NetWeights delta) {
    NoiseProfile p;
    p.composed = add_weights(theta0, delta);
    p.theta0 = std::move(theta0);
    p.delta = std::move(delta);
    return p;
}

float estimate_noise_mad(const Plane& p) {
    if (p.w < 16 || p.h < 16) fail(ErrorKind::Data, "estimate_noise_mad: plane too small");
    std::vector<float> hh;
    hh.reserve(std::size_t(p.w / 2) * (p.h / 2));
    for (int y = 0; y + 1 < p.h; y += 2)
        for (int x = 0; x + 1 < p.w; x += 2) {
            // orthonormal Haar HH coefficient
            const float c = 0.5f * (p.at(x, y) - p.at(x + 1, y) - p.at(x, y + 1) + p.at(x + 1, y + 1));
            hh.push_back(std::fabs(c));
        }
    const std::size_t mid = hh.size() / 2;
    std::nth_element(hh.begin(), hh.begin() + mid, hh.end());
    return hh[mid] / 0.6745f;
}

namespace {

Plane box3_highpass(const Plane& p) {
    Plane out(p.w, p.h);
    for (int y = 0; y < p.h; ++y)
        for (int x = 0; x < p.w; ++x) {
            float acc = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) acc += p.at_reflect(x + dx, y + dy);
            out.at(x, y) = p.at(x, y) - acc / 9.0f;
        }
    return out;
}

Plane diff_planes(const Plane& a, const Plane& b) {
    Plane d(a.w, a.h);
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] = a.data[i] - b.data[i];
    return d;
}

double pearson(const Plane& a, const Plane& b) {
    const auto& k = kern::active();
    const std::size_t n = a.size();
    const double ma = k.sum(a.data.data(), n) / double(n);
    const double mb = k.sum(b.data.data(), n) / double(n);
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a.data[i] - ma;
        const double db = b.data[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va <= 0 || vb <= 0) return 0.0;
    return cov / std::sqrt(va * vb);
}

} // namespace

NoiseStats estimate_noise_stats(const Clip& clip, int anchor) {
    if (anchor < 0 || std::size_t(anchor) >= clip.size())
        fail(ErrorKind::Usage, "anchor out of range");
    const Frame& f = clip.frames[anchor];
    NoiseStats stats;
    stats.sigma_hat_luma = estimate_noise_mad(f.y);
    stats.sigma_hat_chroma = 0.5f * (estimate_noise_mad(f.cb) + estimate_noise_mad(f.cr));

    // lag-1 correlation of high-passed consecutive frame differences around
    // the anchor; needs three frames, otherwise falls back to 0
    int base = anchor;
    if (std::size_t(base + 2) >= clip.size()) base = int(clip.size()) - 3;
    if (base >= 0) {
        const Plane d1 = box3_highpass(diff_planes(clip.frames[base + 1].y, clip.frames[base].y));
        const Plane d2 = box3_highpass(diff_planes(clip.frames[base + 2].y, clip.frames[base + 1].y));
        stats.temporal_rho = float(std::clamp(pearson(d1, d2), 0.0, 0.9));
    }
    return stats;
}

NoiseProfile classical_profile(const Clip& clip, int anchor) {
    clip.check_valid();
    const NoiseStats stats = estimate_noise_stats(clip, anchor);
    NetWeights theta0 = default_theta0();
    NetWeights delta = zero_weights();

    auto set_bias = [&](const char* name, int channel, double target) {
        const float base = theta0.require(name).data[std::size_t(channel)];
        delta.find(name)->data[std::size_t(channel)] = float(inverse_softplus(target)) - base;
    };

    const double var_luma = double(stats.sigma_hat_luma) * stats.sigma_hat_luma * (1.0 + stats.temporal_rho);
    const double var_chroma = double(stats.sigma_hat_chroma) * stats.sigma_hat_chroma * (1.0 + stats.temporal_rho);
    set_bias("head_sigma2_luma.bias", 0, var_luma);
    set_bias("head_sigma2_chroma.bias", 0, var_chroma);

    static const double sigmad_levels[3] = {1.5, 1.5, 2.0};
    for (int k = 0; k < 3; ++k) {
        set_bias("head_sigmad_luma.bias", k, sigmad_levels[k]);
        set_bias("head_sigmad_chroma.bias", k, sigmad_levels[k]);
        set_bias("head_sigmar_luma.bias", k, 2.0 * stats.sigma_hat_luma);
        set_bias("head_sigmar_chroma.bias", k, 2.0 * stats.sigma_hat_chroma);
    }
    return NoiseProfile::compose(std::move(theta0), std::move(delta));
}

NoiseProfile load_profile(const NetWeights& theta0, const std::string& path) {
    NetWeights delta = load_weights(path);
    if (delta.tensors.size() != theta0.tensors.size())
        fail(ErrorKind::Data, path + ": tensor count mismatch");
    for (std::size_t i = 0; i < delta.tensors.size(); ++i) {
        if (delta.tensors[i].name != theta0.tensors[i].name || !delta.tensors[i].same_shape(theta0.tensors[i]))
            fail(ErrorKind::Data, path + ": shape mismatch for tensor " + theta0.tensors[i].name);
    }
    return NoiseProfile::compose(theta0, std::move(delta));
}

double consistency_loss(const NetWeights& delta_a, const NetWeights& delta_b) {
    if (delta_a.tensors.size() != delta_b.tensors.size())
        fail(ErrorKind::Data, "consistency_loss: tensor count mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < delta_a.tensors.size(); ++i) {
        const Tensor& a = delta_a.tensors[i];
        const Tensor& b = delta_b.tensors[i];
        if (!a.same_shape(b)) fail(ErrorKind::Data, "consistency_loss: shape mismatch for " + a.name);
        acc += kern::active().sum_sq_diff(a.data.data(), b.data.data(), a.data.size());
    }
    return std::sqrt(acc);
}

} // namespace rfcvd
