#pragma once

#include "rfcvd/plane.hpp"

#include <array>
#include <functional>
#include <limits>
#include <vector>

namespace rfcvd {

constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    std::vector<double> per_frame_psnr;
    std::vector<double> per_frame_ssim;
};

double psnr(const Frame& a, const Frame& b);
double psnr(const Clip& a, const Clip& b);

// single-scale SSIM, 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03,
// dynamic range 1.0, mean over fully-valid window positions
double ssim(const Plane& a, const Plane& b);

MetricReport compare_clips(const Clip& reference, const Clip& test);

// L = ||temporal - gt||_2 + sum_l ||spatial_l - gt_l||_2, the per-level gt
// produced by the shared Gaussian pyramid
double rec_loss(const Frame& temporal, const std::array<Plane, 3>& spatial_levels, const Frame& gt);

// central finite differences against an analytic gradient; returns the max
// per-coordinate deviation relative to the gradient's overall magnitude
// (absolute if both gradients are near zero)
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& point, const std::vector<double>& analytic_grad,
                  double h);

} // namespace rfcvd
