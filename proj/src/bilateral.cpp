#include "rfcvd/bilateral.hpp"

#include <cmath>

namespace rfcvd {

namespace {

double bilateral_pixel(const Plane& band, const Plane& sigma_d, const Plane& sigma_r, int radius,
                       int x, int y) {
    const double sd = sigma_d.at(x, y);
    const double sr = sigma_r.at(x, y);
    if (sd < 0 || sr < 0) fail(ErrorKind::Data, "bilateral_varying: negative sigma");
    const double center = band.at(x, y);
    if (sd == 0.0 || sr == 0.0) return center;
    const double inv2sd2 = 1.0 / (2.0 * sd * sd);
    const double inv2sr2 = 1.0 / (2.0 * sr * sr);
    double wsum = 0.0, vsum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double v = band.at_reflect(x + dx, y + dy);
            const double dr = v - center;
            const double w = std::exp(-(dx * dx + dy * dy) * inv2sd2 - dr * dr * inv2sr2);
            wsum += w;
            vsum += w * v;
        }
    return vsum / wsum;
}

void check_bilateral_args(const Plane& band, const Plane& sigma_d, const Plane& sigma_r,
                          int radius) {
    if (!band.same_dims(sigma_d) || !band.same_dims(sigma_r))
        fail(ErrorKind::Data, "bilateral_varying: dimension mismatch");
    if (radius < 1) fail(ErrorKind::Usage, "bilateral_varying: radius must be >= 1");
}

} // namespace

Plane bilateral_varying(const Plane& band, const Plane& sigma_d, const Plane& sigma_r, int radius) {
    check_bilateral_args(band, sigma_d, sigma_r, radius);
    Plane out(band.w, band.h);
    for (int y = 0; y < band.h; ++y)
        for (int x = 0; x < band.w; ++x)
            out.at(x, y) = float(bilateral_pixel(band, sigma_d, sigma_r, radius, x, y));
    return out;
}

double bilateral_weighted_sum(const Plane& band, const Plane& sigma_d, const Plane& sigma_r,
                              int radius, const Plane& weights) {
    check_bilateral_args(band, sigma_d, sigma_r, radius);
    if (!band.same_dims(weights)) fail(ErrorKind::Data, "bilateral_weighted_sum: weight dimension mismatch");
    double acc = 0.0;
    for (int y = 0; y < band.h; ++y)
        for (int x = 0; x < band.w; ++x)
            acc += bilateral_pixel(band, sigma_d, sigma_r, radius, x, y) * double(weights.at(x, y));
    return acc;
}

BilateralSigmaGrads d_bilateral_d_sigma(const Plane& band, const Plane& sigma_d,
                                        const Plane& sigma_r, int radius,
                                        const Plane& upstream_grad) {
    if (!band.same_dims(upstream_grad))
        fail(ErrorKind::Data, "d_bilateral_d_sigma: upstream gradient dimension mismatch");
    BilateralSigmaGrads g{Plane(band.w, band.h), Plane(band.w, band.h)};
    for (int y = 0; y < band.h; ++y) {
        for (int x = 0; x < band.w; ++x) {
            const double sd = sigma_d.at(x, y);
            const double sr = sigma_r.at(x, y);
            if (sd <= 0 || sr <= 0)
                fail(ErrorKind::Data, "d_bilateral_d_sigma: sigmas must be strictly positive");
            const double inv2sd2 = 1.0 / (2.0 * sd * sd);
            const double inv2sr2 = 1.0 / (2.0 * sr * sr);
            const double center = band.at(x, y);
            double wsum = 0.0, vsum = 0.0;
            double dwd_sum = 0.0, dvd_sum = 0.0; // d/d sigma_d
            double dwr_sum = 0.0, dvr_sum = 0.0; // d/d sigma_r
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const double v = band.at_reflect(x + dx, y + dy);
                    const double dr = v - center;
                    const double spatial2 = dx * dx + dy * dy;
                    const double w = std::exp(-spatial2 * inv2sd2 - dr * dr * inv2sr2);
                    // dw/dsd = w * spatial2 / sd^3, dw/dsr = w * dr^2 / sr^3
                    const double dwd = w * spatial2 / (sd * sd * sd);
                    const double dwr = w * dr * dr / (sr * sr * sr);
                    wsum += w;
                    vsum += w * v;
                    dwd_sum += dwd;
                    dvd_sum += dwd * v;
                    dwr_sum += dwr;
                    dvr_sum += dwr * v;
                }
            const double outv = vsum / wsum;
            const double u = upstream_grad.at(x, y);
            g.d_sigma_d.at(x, y) = float(u * (dvd_sum - outv * dwd_sum) / wsum);
            g.d_sigma_r.at(x, y) = float(u * (dvr_sum - outv * dwr_sum) / wsum);
        }
    }
    return g;
}

namespace {

struct ChannelSpec {
    const std::array<Plane, 3>* sigma_d;
    const std::array<Plane, 3>* sigma_r;
};

Plane denoise_channel(const Plane& p, const ChannelSpec& spec, std::array<Plane, 3>* partials) {
    LaplacianPyramid pyr = build_laplacian(p);
    for (int l = 0; l < 3; ++l) {
        const Plane& sd = (*spec.sigma_d)[l];
        const Plane& sr = (*spec.sigma_r)[l];
        if (!pyr.bands[l].same_dims(sd) || !pyr.bands[l].same_dims(sr))
            fail(ErrorKind::Data, "spatial_denoise: sigma map / band dimension mismatch at level " + std::to_string(l));
        pyr.bands[l] = bilateral_varying(pyr.bands[l], sd, sr, kBilateralRadii[l]);
    }
    // fold from the residual upward, recording the partial collapse per level
    Plane acc = pyr.residual;
    for (int l = 2; l >= 0; --l) {
        const Plane& band = pyr.bands[l];
        Plane up = resize_bilinear(acc, band.w, band.h);
        for (std::size_t i = 0; i < up.size(); ++i) up.data[i] += band.data[i];
        acc = std::move(up);
        if (partials) (*partials)[l] = acc;
    }
    return acc;
}

} // namespace

SpatialResult spatial_denoise(const Frame& frame, const ParamMaps& maps) {
    SpatialResult res;
    res.frame.index = frame.index;
    const ChannelSpec luma{&maps.sigmad_luma, &maps.sigmar_luma};
    const ChannelSpec chroma{&maps.sigmad_chroma, &maps.sigmar_chroma};
    res.frame.y = denoise_channel(frame.y, luma, &res.luma_levels);
    res.frame.cb = denoise_channel(frame.cb, chroma, nullptr);
    res.frame.cr = denoise_channel(frame.cr, chroma, nullptr);
    return res;
}

} // namespace rfcvd
