#include "rfcvd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace rfcvd::kern {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// float lanes widened to double before accumulation so the AVX2 path stays
// within test tolerance of the scalar reference on long spans
template <class Op>
double reduce2(const float* a, const float* b, std::size_t n, Op op, double (*tail)(const float*, const float*, std::size_t)) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
        acc = _mm256_add_pd(acc, op(va, vb));
    }
    double r = hsum(acc);
    if (i < n) r += tail(a + i, b + i, n - i);
    return r;
}

double a_sum(const float* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_cvtps_pd(_mm_loadu_ps(a + i)));
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i];
    return r;
}

double a_sum_sq(const float* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += double(a[i]) * a[i];
    return r;
}

double a_sum_abs_diff(const float* a, const float* b, std::size_t n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    return reduce2(a, b, n,
        [&](__m256d x, __m256d y) { return _mm256_andnot_pd(signmask, _mm256_sub_pd(x, y)); },
        [](const float* x, const float* y, std::size_t m) {
            double r = 0.0;
            for (std::size_t i = 0; i < m; ++i) r += std::fabs(double(x[i]) - y[i]);
            return r;
        });
}

double a_sum_sq_diff(const float* a, const float* b, std::size_t n) {
    return reduce2(a, b, n,
        [](__m256d x, __m256d y) { __m256d d = _mm256_sub_pd(x, y); return _mm256_mul_pd(d, d); },
        [](const float* x, const float* y, std::size_t m) {
            double r = 0.0;
            for (std::size_t i = 0; i < m; ++i) { double d = double(x[i]) - y[i]; r += d * d; }
            return r;
        });
}

double a_dot(const float* a, const float* b, std::size_t n) {
    return reduce2(a, b, n,
        [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
        [](const float* x, const float* y, std::size_t m) {
            double r = 0.0;
            for (std::size_t i = 0; i < m; ++i) r += double(x[i]) * y[i];
            return r;
        });
}

void a_axpy(float* y, const float* x, float s, std::size_t n) {
    const __m256 vs = _mm256_set1_ps(s);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_fmadd_ps(vs, _mm256_loadu_ps(x + i), vy);
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] += s * x[i];
}

void a_scale_add(float* y, const float* x, float s, float t, std::size_t n) {
    const __m256 vs = _mm256_set1_ps(s);
    const __m256 vt = _mm256_set1_ps(t);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_mul_ps(_mm256_loadu_ps(y + i), vs);
        vy = _mm256_fmadd_ps(vt, _mm256_loadu_ps(x + i), vy);
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] = y[i] * s + x[i] * t;
}

void a_mul_inplace(float* y, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(y + i), _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) y[i] *= x[i];
}

const Kernels kAvx2 = {
    a_sum, a_sum_sq, a_sum_abs_diff, a_sum_sq_diff,
    a_dot, a_axpy, a_scale_add, a_mul_inplace, "avx2",
};

} // namespace

const Kernels& avx2_kernels() { return kAvx2; }

} // namespace rfcvd::kern
