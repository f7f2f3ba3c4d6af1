#include "lexpred/kernels.hpp"

#include <atomic>

namespace lexpred::kernels {

namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const size_t n4 = n & ~size_t(3);
    for (size_t i = 0; i < n4; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    switch (n - n4) {
        case 3: s2 += a[n4 + 2] * b[n4 + 2]; [[fallthrough]];
        case 2: s1 += a[n4 + 1] * b[n4 + 1]; [[fallthrough]];
        case 1: s0 += a[n4] * b[n4];
    }
    return (s0 + s1) + (s2 + s3);
}

void axpy_scalar(double* y, double alpha, const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar(double* y, const double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += x[i];
}

void scale_scalar(double* x, double alpha, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

const KernelTable kScalar{"scalar", dot_scalar, axpy_scalar, add_scalar, scale_scalar};

std::atomic<const KernelTable*> g_forced{nullptr};

const KernelTable* pick_best() {
    if (const KernelTable* t = avx2_table()) return t;
    if (const KernelTable* t = neon_table()) return t;
    return &kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable& active() {
    if (const KernelTable* f = g_forced.load(std::memory_order_relaxed)) return *f;
    static const KernelTable* best = pick_best();
    return *best;
}

void force_table(const KernelTable* t) { g_forced.store(t, std::memory_order_relaxed); }

void gemm_accum(double* c, const double* a, const double* b, size_t m, size_t k, size_t n) {
    const KernelTable& kt = active();
    for (size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (size_t p = 0; p < k; ++p) {
            kt.axpy(crow, arow[p], b + p * n, n);
        }
    }
}

}  // namespace lexpred::kernels
