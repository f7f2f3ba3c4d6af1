#pragma once

#include <cstddef>
#include <string>

namespace lexpred::kernels {

// Double-precision primitives behind the autodiff layers and the embedding
// trainer. Each operation has a scalar reference implementation and SIMD
// variants selected once at runtime from CPU capabilities.
//
// All variants are bit-identical by contract, not merely close:
//   - dot() accumulates into 4 stripes (lane j sums elements i with i%4==j,
//     tail elements extend stripes 0..2) and reduces as
//     (s0+s1)+(s2+s3). A 4-lane vector register reproduces exactly the same
//     additions in the same order.
//   - axpy/add/scale are per-element and carry no ordering freedom.
// No FMA anywhere (the build also disables contraction), so every variant
// performs the identical sequence of IEEE-754 mul/add per output.
struct KernelTable {
    const char* name;
    double (*dot)(const double* a, const double* b, size_t n);
    void (*axpy)(double* y, double alpha, const double* x, size_t n);  // y += alpha*x
    void (*add)(double* y, const double* x, size_t n);                 // y += x
    void (*scale)(double* x, double alpha, size_t n);                  // x *= alpha
};

const KernelTable& scalar_table();

// nullptr when the build target has no such variant or the CPU lacks support.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Best supported variant; resolved once. force_table(nullptr) restores auto.
const KernelTable& active();
void force_table(const KernelTable* t);

inline double dot(const double* a, const double* b, size_t n) { return active().dot(a, b, n); }
inline void axpy(double* y, double alpha, const double* x, size_t n) { active().axpy(y, alpha, x, n); }
inline void add(double* y, const double* x, size_t n) { active().add(y, x, n); }
inline void scale(double* x, double alpha, size_t n) { active().scale(x, alpha, n); }

// C[m,n] += A[m,k] * B[k,n], all row-major. Inner loops run on the active
// kernel's axpy, so results are bit-identical across variants too.
void gemm_accum(double* c, const double* a, const double* b, size_t m, size_t k, size_t n);

}  // namespace lexpred::kernels
