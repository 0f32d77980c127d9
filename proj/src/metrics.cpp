#include "rfcvd/metrics.hpp"

#include "rfcvd/kernels.hpp"
#include "rfcvd/pyramid.hpp"

#include <cmath>

namespace rfcvd {

namespace {

double frame_mse(const Frame& a, const Frame& b) {
    const auto& k = kern::active();
    double acc = 0.0;
    std::size_t n = 0;
    for (auto [pa, pb] : {std::pair{&a.y, &b.y}, {&a.cb, &b.cb}, {&a.cr, &b.cr}}) {
        acc += k.sum_sq_diff(pa->data.data(), pb->data.data(), pa->size());
        n += pa->size();
    }
    return acc / double(n);
}

} // namespace

double psnr(const Frame& a, const Frame& b) {
    if (!a.same_dims(b)) fail(ErrorKind::Data, "psnr: dimension mismatch");
    const double mse = frame_mse(a, b);
    if (mse == 0.0) return kPsnrInfinite;
    return 10.0 * std::log10(1.0 / mse);
}

double psnr(const Clip& a, const Clip& b) {
    if (a.size() != b.size()) fail(ErrorKind::Data, "psnr: frame count mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = psnr(a.frames[i], b.frames[i]);
        if (v == kPsnrInfinite) return kPsnrInfinite;
        acc += v;
    }
    return acc / double(a.size());
}

double ssim(const Plane& a, const Plane& b) {
    if (!a.same_dims(b)) fail(ErrorKind::Data, "ssim: dimension mismatch");
    if (a.w < 11 || a.h < 11) fail(ErrorKind::Data, "ssim: plane smaller than the 11x11 window");

    constexpr int kRadius = 5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    static const auto window = [] {
        std::array<double, 121> w{};
        double sum = 0;
        for (int y = -kRadius; y <= kRadius; ++y)
            for (int x = -kRadius; x <= kRadius; ++x) {
                const double v = std::exp(-(x * x + y * y) / (2.0 * 1.5 * 1.5));
                w[std::size_t((y + kRadius) * 11 + x + kRadius)] = v;
                sum += v;
            }
        for (double& v : w) v /= sum;
        return w;
    }();

    double acc = 0.0;
    std::size_t count = 0;
    for (int y = kRadius; y < a.h - kRadius; ++y)
        for (int x = kRadius; x < a.w - kRadius; ++x) {
            double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
            for (int dy = -kRadius; dy <= kRadius; ++dy)
                for (int dx = -kRadius; dx <= kRadius; ++dx) {
                    const double w = window[std::size_t((dy + kRadius) * 11 + dx + kRadius)];
                    const double va = a.at(x + dx, y + dy);
                    const double vb = b.at(x + dx, y + dy);
                    mu_a += w * va;
                    mu_b += w * vb;
                    aa += w * va * va;
                    bb += w * vb * vb;
                    ab += w * va * vb;
                }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            acc += ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                   ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
            ++count;
        }
    return acc / double(count);
}

MetricReport compare_clips(const Clip& reference, const Clip& test) {
    if (reference.size() != test.size()) fail(ErrorKind::Data, "compare_clips: frame count mismatch");
    MetricReport report;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        report.per_frame_psnr.push_back(psnr(reference.frames[i], test.frames[i]));
        report.per_frame_ssim.push_back(ssim(reference.frames[i].y, test.frames[i].y));
    }
    double psum = 0, ssum = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        psum += report.per_frame_psnr[i];
        ssum += report.per_frame_ssim[i];
    }
    report.psnr = psum / double(reference.size());
    report.ssim = ssum / double(reference.size());
    return report;
}

double rec_loss(const Frame& temporal, const std::array<Plane, 3>& spatial_levels, const Frame& gt) {
    if (!temporal.same_dims(gt)) fail(ErrorKind::Data, "rec_loss: dimension mismatch");
    const auto& k = kern::active();
    double loss = std::sqrt(k.sum_sq_diff(temporal.y.data.data(), gt.y.data.data(), gt.y.size()));
    const auto gt_pyr = build_gaussian_pyramid(gt.y, 3);
    for (int l = 0; l < 3; ++l) {
        if (!spatial_levels[l].same_dims(gt_pyr[l]))
            fail(ErrorKind::Data, "rec_loss: level " + std::to_string(l) + " dimension mismatch");
        loss += std::sqrt(k.sum_sq_diff(spatial_levels[l].data.data(), gt_pyr[l].data.data(),
                                        gt_pyr[l].size()));
    }
    return loss;
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& point, const std::vector<double>& analytic_grad,
                  double h) {
    if (point.size() != analytic_grad.size()) fail(ErrorKind::Usage, "grad_check: size mismatch");
    std::vector<double> fd(point.size());
    std::vector<double> x = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        x[i] = point[i] + h;
        const double fp = f(x);
        x[i] = point[i] - h;
        const double fm = f(x);
        x[i] = point[i];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            fail(ErrorKind::Data, "grad_check: non-finite function value");
        fd[i] = (fp - fm) / (2.0 * h);
    }
    // deviation relative to the gradient's overall magnitude: central
    // differences carry an O(h^2 f''') truncation floor that is absolute, so
    // normalizing coordinates with near-zero gradients by their own magnitude
    // would report the floor, not the quality of the analytic gradient
    double scale = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) {
        scale = std::max({scale, std::fabs(fd[i]), std::fabs(analytic_grad[i])});
        max_abs = std::max(max_abs, std::fabs(fd[i] - analytic_grad[i]));
    }
    return scale > 1e-8 ? max_abs / scale : max_abs;
}

} // namespace rfcvd
