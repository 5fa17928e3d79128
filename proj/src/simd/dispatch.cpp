#include <atomic>
#include <cstdlib>
#include <string>
#include <string_view>

#include "wander/errors.hpp"
#include "wander/simd/kernels.hpp"

namespace wander::simd {

const KernelTable* avx2_table_unchecked() noexcept;
const KernelTable* neon_table_unchecked() noexcept;

namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* best_available() noexcept {
    if (const KernelTable* t = avx2_kernels()) return t;
    if (const KernelTable* t = neon_kernels()) return t;
    return &scalar_kernels();
}

const KernelTable* from_environment() noexcept {
    const char* env = std::getenv("WANDER_SIMD");
    if (env == nullptr) return best_available();
    const std::string_view want{env};
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
    if (want == "neon" && neon_kernels()) return neon_kernels();
    // Unknown or unsupported request: fall back rather than fail at first distance.
    return best_available();
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> table{from_environment()};
    return table;
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
    static const KernelTable* table = cpu_has_avx2_fma() ? avx2_table_unchecked() : nullptr;
    return table;
}

const KernelTable* neon_kernels() noexcept {
    // NEON is architectural on aarch64; no runtime probe needed.
    return neon_table_unchecked();
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

void force(Isa isa) {
    const KernelTable* table = nullptr;
    switch (isa) {
        case Isa::scalar: table = &scalar_kernels(); break;
        case Isa::avx2: table = avx2_kernels(); break;
        case Isa::neon: table = neon_kernels(); break;
    }
    if (table == nullptr) {
        throw ConfigError("SIMD variant '" + std::string(name(isa)) + "' is not available on this CPU");
    }
    slot().store(table, std::memory_order_release);
}

std::string_view name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

}  // namespace wander::simd
