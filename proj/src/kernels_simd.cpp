// AVX2 kernel variant. Built in every x86-64 binary via the target attribute
// and selected at runtime, so the same executable runs on CPUs without AVX2.
// Lane j of the 4-wide accumulator reproduces scalar stripe j exactly; see
// the contract in kernels.hpp.

#include "lexpred/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace lexpred::kernels {

namespace {

__attribute__((target("avx2"))) double dot_avx2(const double* a, const double* b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    switch (n - n4) {
        case 3: s[2] += a[n4 + 2] * b[n4 + 2]; [[fallthrough]];
        case 2: s[1] += a[n4 + 1] * b[n4 + 1]; [[fallthrough]];
        case 1: s[0] += a[n4] * b[n4];
    }
    return (s[0] + s[1]) + (s[2] + s[3]);
}

__attribute__((target("avx2"))) void axpy_avx2(double* y, double alpha, const double* x, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (size_t i = n4; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2"))) void add_avx2(double* y, const double* x, size_t n) {
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    }
    for (size_t i = n4; i < n; ++i) y[i] += x[i];
}

__attribute__((target("avx2"))) void scale_avx2(double* x, double alpha, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (size_t i = n4; i < n; ++i) x[i] *= alpha;
}

const KernelTable kAvx2{"avx2", dot_avx2, axpy_avx2, add_avx2, scale_avx2};

}  // namespace

const KernelTable* avx2_table() {
    return __builtin_cpu_supports("avx2") ? &kAvx2 : nullptr;
}

const KernelTable* neon_table() { return nullptr; }

}  // namespace lexpred::kernels

#elif defined(__aarch64__)

#include <arm_neon.h>

namespace lexpred::kernels {

namespace {

// Two float64x2 accumulators give the same 4 stripes as the scalar reference:
// acc01 holds stripes {0,1}, acc23 holds stripes {2,3}.
double dot_neon(const double* a, const double* b, size_t n) {
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    double s[4] = {vgetq_lane_f64(acc01, 0), vgetq_lane_f64(acc01, 1),
                   vgetq_lane_f64(acc23, 0), vgetq_lane_f64(acc23, 1)};
    switch (n - n4) {
        case 3: s[2] += a[n4 + 2] * b[n4 + 2]; [[fallthrough]];
        case 2: s[1] += a[n4 + 1] * b[n4 + 1]; [[fallthrough]];
        case 1: s[0] += a[n4] * b[n4];
    }
    return (s[0] + s[1]) + (s[2] + s[3]);
}

void axpy_neon(double* y, double alpha, const double* x, size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    const size_t n2 = n & ~size_t(1);
    for (size_t i = 0; i < n2; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    if (n2 < n) y[n2] += alpha * x[n2];
}

void add_neon(double* y, const double* x, size_t n) {
    const size_t n2 = n & ~size_t(1);
    for (size_t i = 0; i < n2; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
    }
    if (n2 < n) y[n2] += x[n2];
}

void scale_neon(double* x, double alpha, size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    const size_t n2 = n & ~size_t(1);
    for (size_t i = 0; i < n2; i += 2) {
        vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    }
    if (n2 < n) x[n2] *= alpha;
}

const KernelTable kNeon{"neon", dot_neon, axpy_neon, add_neon, scale_neon};

}  // namespace

// NEON is baseline on aarch64; no runtime probe needed.
const KernelTable* neon_table() { return &kNeon; }
const KernelTable* avx2_table() { return nullptr; }

}  // namespace lexpred::kernels

#else

namespace lexpred::kernels {
const KernelTable* avx2_table() { return nullptr; }
const KernelTable* neon_table() { return nullptr; }
}  // namespace lexpred::kernels

#endif
