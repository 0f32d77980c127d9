#include "rfcvd/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace rfcvd::kern {

#if defined(RFCVD_HAVE_AVX2_TU)
const Kernels& avx2_kernels();
#endif

namespace {

double s_sum(const float* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double s_sum_sq(const float* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += double(a[i]) * a[i];
    return acc;
}

double s_sum_abs_diff(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(double(a[i]) - b[i]);
    return acc;
}

double s_sum_sq_diff(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = double(a[i]) - b[i];
        acc += d * d;
    }
    return acc;
}

double s_dot(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += double(a[i]) * b[i];
    return acc;
}

void s_axpy(float* y, const float* x, float s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void s_scale_add(float* y, const float* x, float s, float t, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] * s + x[i] * t;
}

void s_mul_inplace(float* y, const float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

const Kernels kScalar = {
    s_sum, s_sum_sq, s_sum_abs_diff, s_sum_sq_diff,
    s_dot, s_axpy, s_scale_add, s_mul_inplace, "scalar",
};

const Kernels& pick() {
    const char* env = std::getenv("RFCVD_SIMD");
    const bool force_scalar = env && std::strcmp(env, "scalar") == 0;
#if defined(RFCVD_HAVE_AVX2_TU)
    const bool force_avx2 = env && std::strcmp(env, "avx2") == 0;
    if (!force_scalar && (force_avx2 || __builtin_cpu_supports("avx2")))
        return avx2_kernels();
#endif
    (void)force_scalar;
    return kScalar;
}

} // namespace

const Kernels& scalar() { return kScalar; }

const Kernels& active() {
    static const Kernels& k = pick();
    return k;
}

} // namespace rfcvd::kern
