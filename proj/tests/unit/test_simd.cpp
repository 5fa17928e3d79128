#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "wander/errors.hpp"
#include "wander/simd/kernels.hpp"

using namespace wander;

namespace {

std::vector<const simd::KernelTable*> variants() {
    std::vector<const simd::KernelTable*> out{&simd::scalar_kernels()};
    if (auto* t = simd::avx2_kernels()) out.push_back(t);
    if (auto* t = simd::neon_kernels()) out.push_back(t);
    return out;
}

}  // namespace

TEST_CASE("every kernel variant agrees with a long double reference") {
    Rng rng(17);
    for (std::size_t n = 0; n <= 131; ++n) {
        std::vector<float> a = oracle::random_vector(rng, n);
        std::vector<float> b = oracle::random_vector(rng, n);
        long double ref_dot = 0.0L, ref_sq = 0.0L, mag = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            ref_dot += static_cast<long double>(a[i]) * b[i];
            ref_sq += static_cast<long double>(a[i]) * a[i];
            mag += std::abs(static_cast<long double>(a[i]) * b[i]);
        }
        for (const auto* k : variants()) {
            CAPTURE(simd::name(k->isa));
            CAPTURE(n);
            CHECK(std::abs(k->dot(a.data(), b.data(), n) - static_cast<double>(ref_dot)) <=
                  1e-13 * static_cast<double>(mag) + 1e-300);
            CHECK(std::abs(k->squared_norm(a.data(), n) - static_cast<double>(ref_sq)) <=
                  1e-13 * static_cast<double>(ref_sq) + 1e-300);
        }
    }
}

TEST_CASE("vector variants match the scalar table on unaligned tails") {
    Rng rng(3);
    std::vector<float> buf = oracle::random_vector(rng, 300);
    for (const auto* k : variants()) {
        for (std::size_t off = 0; off < 8; ++off) {
            for (std::size_t n : {1u, 7u, 8u, 15u, 16u, 33u, 255u}) {
                const double s = simd::scalar_kernels().dot(buf.data() + off, buf.data() + off + 1, n);
                const double v = k->dot(buf.data() + off, buf.data() + off + 1, n);
                CHECK(v == doctest::Approx(s).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("dispatch can be forced to scalar and back") {
    const simd::Isa before = simd::active().isa;
    simd::force(simd::Isa::scalar);
    CHECK(simd::active().isa == simd::Isa::scalar);
    const std::vector<float> a{1, 2, 3};
    CHECK(simd::dot(a, a) == 14.0);
    if (simd::avx2_kernels() == nullptr) CHECK_THROWS_AS(simd::force(simd::Isa::avx2), ConfigError);
    if (simd::neon_kernels() == nullptr) CHECK_THROWS_AS(simd::force(simd::Isa::neon), ConfigError);
    simd::force(before);
    CHECK(simd::name(simd::Isa::avx2) == "avx2");
}
