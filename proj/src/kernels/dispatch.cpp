#include "taskdenoise/kernels.hpp"

#include <cstdlib>
#include <string>

namespace tdn::kernels {

#if defined(TASKDENOISE_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif
#if defined(TASKDENOISE_HAVE_NEON)
namespace neon {
const KernelTable& table();
}
#endif

const KernelTable* avx2_table() {
#if defined(TASKDENOISE_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2::table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(TASKDENOISE_HAVE_NEON)
    return &neon::table();
#else
    return nullptr;
#endif
}

const KernelTable* table_for(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return &scalar_table();
        case Isa::Avx2: return avx2_table();
        case Isa::Neon: return neon_table();
    }
    return nullptr;
}

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

namespace {

const KernelTable& select() {
    const char* env = std::getenv("TASKDENOISE_SIMD");
    const std::string want = env ? env : "auto";
    if (want == "scalar") return scalar_table();
    if (want == "avx2" && avx2_table()) return *avx2_table();
    if (want == "neon" && neon_table()) return *neon_table();
    if (const auto* t = avx2_table()) return *t;
    if (const auto* t = neon_table()) return *t;
    return scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& chosen = select();
    return chosen;
}

}  // namespace tdn::kernels
