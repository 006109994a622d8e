#include "dcgcn/kernels.hpp"

namespace dcgcn::kernels {
namespace {

void axpy(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_acc(std::size_t n, const double* x, const double* z, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i] * z[i];
}

void relu(std::size_t n, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* g, double* gx) {
    for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void leaky_relu(std::size_t n, double slope, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::size_t n, double slope, const double* x, const double* g,
                         double* gx) {
    for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : slope * g[i];
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    for (std::size_t r = 0; r < m; ++r) {
        const double* brow = b + r * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double arp = a[r * k + p];
            double* crow = c + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += arp * brow[j];
        }
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Isa::scalar, axpy,    add,  mul,
                                   mul_acc,     relu,    relu_backward,
                                   leaky_relu,  leaky_relu_backward,
                                   gemm_nn,     gemm_tn};
    return table;
}

}  // namespace dcgcn::kernels
