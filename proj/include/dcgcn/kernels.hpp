#pragma once
// Dense double-precision kernels behind the tape ops.
//
// Every kernel exists as a scalar reference and as SIMD variants (AVX2 on
// x86-64, NEON on aarch64). The variants vectorize across independent output
// elements only and never reorder a reduction or contract into FMA, so all
// variants produce bit-identical results. The active table is picked once at
// startup from the CPU features and can be overridden with DCGCN_SIMD
// (scalar | avx2 | neon) or select_isa().

#include <cstddef>
#include <string_view>
#include <vector>

namespace dcgcn::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
    Isa isa;
    // y[i] += a * x[i]
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // out[i] = x[i] + y[i]
    void (*add)(std::size_t n, const double* x, const double* y, double* out);
    // out[i] = x[i] * y[i]
    void (*mul)(std::size_t n, const double* x, const double* y, double* out);
    // y[i] += x[i] * z[i]
    void (*mul_acc)(std::size_t n, const double* x, const double* z, double* y);
    // out[i] = max(x[i], 0)
    void (*relu)(std::size_t n, const double* x, double* out);
    // gx[i] += x[i] > 0 ? g[i] : 0
    void (*relu_backward)(std::size_t n, const double* x, const double* g, double* gx);
    // out[i] = x[i] > 0 ? x[i] : slope * x[i]
    void (*leaky_relu)(std::size_t n, double slope, const double* x, double* out);
    // gx[i] += x[i] > 0 ? g[i] : slope * g[i]
    void (*leaky_relu_backward)(std::size_t n, double slope, const double* x, const double* g,
                                double* gx);
    // C(m x n) += A(m x k) * B(k x n), all row-major; each C entry sums over k
    // in ascending order.
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                    const double* b, double* c);
    // C(k x n) += A(m x k)^T * B(m x n); each C entry sums over rows of A in
    // ascending order.
    void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                    const double* b, double* c);
};

const KernelTable& scalar_table();
#if defined(DCGCN_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(DCGCN_HAVE_NEON)
const KernelTable& neon_table();
#endif

/// Active table (scalar reference unless a SIMD variant is supported).
const KernelTable& active();

bool isa_supported(Isa isa);
/// Switch the active table; returns false and leaves it unchanged when the
/// ISA is not compiled in or not supported by this CPU.
bool select_isa(Isa isa);
std::vector<Isa> supported_isas();
std::string_view isa_name(Isa isa);

/// C(m x n) += A(m x k) * B(n x k)^T via a transposed copy of B.
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);

}  // namespace dcgcn::kernels
