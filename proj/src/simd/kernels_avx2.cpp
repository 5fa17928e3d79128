// Compiled with -mavx2 -mfma (see src/CMakeLists.txt). Nothing here may run before
// avx2_kernels() has confirmed CPU support.

#include "wander/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace wander::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d sum2 = _mm_add_pd(lo, hi);
    const __m128d swapped = _mm_unpackhi_pd(sum2, sum2);
    return _mm_cvtsd_f64(_mm_add_sd(sum2, swapped));
}

double dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        const __m256d a_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
        const __m256d a_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
        const __m256d b_lo = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
        const __m256d b_hi = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
        acc0 = _mm256_fmadd_pd(a_lo, b_lo, acc0);
        acc1 = _mm256_fmadd_pd(a_hi, b_hi, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double squared_norm_avx2(const float* a, std::size_t n) {
    return dot_avx2(a, a, n);
}

constexpr KernelTable kAvx2{Isa::avx2, &dot_avx2, &squared_norm_avx2};

}  // namespace

const KernelTable* avx2_table_unchecked() noexcept { return &kAvx2; }

}  // namespace wander::simd

#else

namespace wander::simd {
const KernelTable* avx2_table_unchecked() noexcept { return nullptr; }
}  // namespace wander::simd

#endif
