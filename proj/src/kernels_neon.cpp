// NEON (aarch64) variants, two doubles per register. Same ordering rules as
// the AVX2 file: lanes run over independent outputs, no fused multiply-add.
#include <arm_neon.h>

#include "dcgcn/kernels.hpp"

namespace dcgcn::kernels {
namespace {

constexpr std::size_t kLanes = 2;

void axpy(std::size_t n, double a, const double* x, double* y) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    for (; i < n; ++i) y[i] += a * x[i];
}

void add(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const double* x, const double* y, double* out) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_acc(std::size_t n, const double* x, const double* z, double* y) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes)
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(vld1q_f64(x + i), vld1q_f64(z + i))));
    for (; i < n; ++i) y[i] += x[i] * z[i];
}

void relu(std::size_t n, const double* x, double* out) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t vx = vld1q_f64(x + i);
        vst1q_f64(out + i, vbslq_f64(vcgtq_f64(vx, zero), vx, zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* g, double* gx) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t pass = vbslq_f64(vcgtq_f64(vld1q_f64(x + i), zero), vld1q_f64(g + i), zero);
        vst1q_f64(gx + i, vaddq_f64(vld1q_f64(gx + i), pass));
    }
    for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void leaky_relu(std::size_t n, double slope, const double* x, double* out) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    const float64x2_t vs = vdupq_n_f64(slope);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t vx = vld1q_f64(x + i);
        vst1q_f64(out + i, vbslq_f64(vcgtq_f64(vx, zero), vx, vmulq_f64(vs, vx)));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::size_t n, double slope, const double* x, const double* g,
                         double* gx) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    const float64x2_t vs = vdupq_n_f64(slope);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t vg = vld1q_f64(g + i);
        const float64x2_t pass = vbslq_f64(vcgtq_f64(vld1q_f64(x + i), zero), vg, vmulq_f64(vs, vg));
        vst1q_f64(gx + i, vaddq_f64(vld1q_f64(gx + i), pass));
    }
    for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) axpy(n, a[i * k + p], b + p * n, c + i * n);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t p = 0; p < k; ++p) axpy(n, a[r * k + p], b + r * n, c + p * n);
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{Isa::neon, axpy,    add,  mul,
                                   mul_acc,   relu,    relu_backward,
                                   leaky_relu, leaky_relu_backward,
                                   gemm_nn,   gemm_tn};
    return table;
}

}  // namespace dcgcn::kernels
