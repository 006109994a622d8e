#include "dcgcn/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace dcgcn::kernels {
namespace {

const KernelTable* table_for(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return &scalar_table();
        case Isa::avx2:
#if defined(DCGCN_HAVE_AVX2)
            return &avx2_table();
#else
            return nullptr;
#endif
        case Isa::neon:
#if defined(DCGCN_HAVE_NEON)
            return &neon_table();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable* detect() {
    if (const char* env = std::getenv("DCGCN_SIMD")) {
        const std::string want(env);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
            if (want == isa_name(isa) && isa_supported(isa)) return table_for(isa);
    }
    if (isa_supported(Isa::avx2)) return table_for(Isa::avx2);
    if (isa_supported(Isa::neon)) return table_for(Isa::neon);
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{detect()};
    return current;
}

}  // namespace

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(DCGCN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
#if defined(DCGCN_HAVE_NEON)
            return true;  // mandatory on aarch64
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select_isa(Isa isa) {
    if (!isa_supported(isa)) return false;
    slot().store(table_for(isa), std::memory_order_release);
    return true;
}

std::vector<Isa> supported_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
        if (isa_supported(isa)) out.push_back(isa);
    return out;
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
        case Isa::neon:
            return "neon";
    }
    return "unknown";
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
    thread_local std::vector<double> bt;
    bt.resize(k * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    active().gemm_nn(m, n, k, a, bt.data(), c);
}

}  // namespace dcgcn::kernels
