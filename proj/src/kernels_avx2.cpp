// AVX2 variants. Compiled with -mavx2 only; callers reach these through the
// dispatch table after a CPUID check. No FMA: a*b+c stays two roundings so the
// results match the scalar reference exactly.
#include <immintrin.h>

#include "dcgcn/kernels.hpp"

namespace dcgcn::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void axpy(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void add(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_acc(std::size_t n, const double* x, const double* z, double* y) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(z + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += x[i] * z[i];
}

void relu(std::size_t n, const double* x, double* out) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d pos = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(pos, vx));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* g, double* gx) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d pass = _mm256_and_pd(pos, _mm256_loadu_pd(g + i));
        _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), pass));
    }
    for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void leaky_relu(std::size_t n, double slope, const double* x, double* out) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d vs = _mm256_set1_pd(slope);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d pos = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(vs, vx), vx, pos));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::size_t n, double slope, const double* x, const double* g,
                         double* gx) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d vs = _mm256_set1_pd(slope);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        const __m256d pos = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d pass = _mm256_blendv_pd(_mm256_mul_pd(vs, vg), vg, pos);
        _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), pass));
    }
    for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy(n, a[i * k + p], b + p * n, crow);
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t r = 0; r < m; ++r) {
        const double* brow = b + r * n;
        for (std::size_t p = 0; p < k; ++p) axpy(n, a[r * k + p], brow, c + p * n);
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{Isa::avx2, axpy,    add,  mul,
                                   mul_acc,   relu,    relu_backward,
                                   leaky_relu, leaky_relu_backward,
                                   gemm_nn,   gemm_tn};
    return table;
}

}  // namespace dcgcn::kernels
