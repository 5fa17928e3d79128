#include "wander/simd/kernels.hpp"

namespace wander::simd {
namespace {

double dot_scalar(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double squared_norm_scalar(const float* a, std::size_t n) {
    return dot_scalar(a, a, n);
}

constexpr KernelTable kScalar{Isa::scalar, &dot_scalar, &squared_norm_scalar};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace wander::simd
