#include <atomic>
#include <cstdlib>
#include <string>

#include "labelforge/kernels/kernels.hpp"

namespace labelforge::kernels {

#ifdef LABELFORGE_HAVE_AVX2
const KernelTable& avx2_table_impl();
#endif

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable* avx2_kernels() {
#ifdef LABELFORGE_HAVE_AVX2
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2_table_impl() : nullptr;
#else
    return nullptr;
#endif
}

namespace {

const KernelTable* initial_selection() {
    if (const char* env = std::getenv("LABELFORGE_ISA")) {
        const std::string v(env);
        if (v == "scalar") return &scalar_kernels();
        if (v == "avx2" && avx2_kernels()) return avx2_kernels();
    }
    if (const auto* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_selection()};
    return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) {
    const KernelTable* t = isa == Isa::Scalar ? &scalar_kernels() : avx2_kernels();
    if (!t) return false;
    current().store(t, std::memory_order_release);
    return true;
}

}  // namespace labelforge::kernels
