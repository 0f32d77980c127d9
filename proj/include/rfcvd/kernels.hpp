#pragma once

#include <cstddef>

// Data-parallel inner loops used across the pipeline. Scalar reference
// implementations always exist; on x86 an AVX2 variant of each kernel is
// selected at runtime. The environment variable RFCVD_SIMD=scalar|avx2|auto
// overrides the selection (used by the equivalence tests).

namespace rfcvd::kern {

struct Kernels {
    // sum of a[i]
    double (*sum)(const float* a, std::size_t n);
    // sum of a[i]^2
    double (*sum_sq)(const float* a, std::size_t n);
    // sum of |a[i] - b[i]|
    double (*sum_abs_diff)(const float* a, const float* b, std::size_t n);
    // sum of (a[i] - b[i])^2
    double (*sum_sq_diff)(const float* a, const float* b, std::size_t n);
    // sum of a[i] * b[i]
    double (*dot)(const float* a, const float* b, std::size_t n);
    // y[i] += s * x[i]
    void (*axpy)(float* y, const float* x, float s, std::size_t n);
    // y[i] = y[i] * s + x[i] * t
    void (*scale_add)(float* y, const float* x, float s, float t, std::size_t n);
    // y[i] *= x[i]
    void (*mul_inplace)(float* y, const float* x, std::size_t n);
    const char* name;
};

const Kernels& scalar();
const Kernels& active();

} // namespace rfcvd::kern
