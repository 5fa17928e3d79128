#pragma once

// Inner-product kernels behind every embedding distance in the engine.
//
// Each instruction set provides the same table of functions. The scalar table is the
// reference; vector variants accumulate in double like the reference but in a different
// summation order, so results agree to rounding (see tests/unit/test_simd.cpp).
// Selection happens once at first use: WANDER_SIMD=scalar|avx2|neon forces a variant,
// otherwise the best one the CPU supports is taken.

#include <cstddef>
#include <span>
#include <string_view>

namespace wander::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
    Isa isa;
    double (*dot)(const float* a, const float* b, std::size_t n);
    double (*squared_norm)(const float* a, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

const KernelTable& active() noexcept;

/// Overrides the runtime choice. Throws ConfigError if the variant is unavailable.
void force(Isa isa);

std::string_view name(Isa isa) noexcept;

inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
    return active().dot(a.data(), b.data(), a.size());
}

inline double squared_norm(std::span<const float> a) noexcept {
    return active().squared_norm(a.data(), a.size());
}

}  // namespace wander::simd
