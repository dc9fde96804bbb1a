#include "boxflow/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace boxflow::simd {

#if defined(BOXFLOW_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(BOXFLOW_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* initial_choice() {
    if (const char* env = std::getenv("BOXFLOW_SIMD"); env && std::string_view(env) == "scalar")
        return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels())
        return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_choice()};
    return table;
}

} // namespace

const KernelTable* avx2_kernels() {
#if defined(BOXFLOW_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Backend active_backend() {
    return &active() == &scalar_kernels() ? Backend::Scalar : Backend::Avx2;
}

bool set_backend(Backend backend) {
    const KernelTable* t = backend == Backend::Scalar ? &scalar_kernels() : avx2_kernels();
    if (!t)
        return false;
    current().store(t, std::memory_order_release);
    return true;
}

} // namespace boxflow::simd
