#include "wander/core/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wander/errors.hpp"
#include "wander/simd/kernels.hpp"

namespace wander {

EmbeddingVector::EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw StructuralError("embedding must have at least one dimension");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw DomainError("embedding entry " + std::to_string(i) + " is not finite");
        }
    }
}

EmbeddingVector EmbeddingVector::from_doubles(std::span<const double> values) {
    std::vector<float> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [](double v) { return static_cast<float>(v); });
    return EmbeddingVector(std::move(out));
}

double EmbeddingVector::squared_norm() const noexcept { return simd::squared_norm(values_); }

bool EmbeddingVector::is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](float v) { return v == 0.0f; });
}

std::vector<double> EmbeddingVector::to_doubles() const {
    return {values_.begin(), values_.end()};
}

void require_nonzero(const EmbeddingVector& v) {
    if (v.dim() == 0 || v.is_zero()) {
        throw DomainError("zero-norm embedding (broken embedder?)");
    }
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw StructuralError("embedding dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                              std::to_string(b.dim()));
    }
    const double na = a.squared_norm();
    const double nb = b.squared_norm();
    if (na == 0.0 || nb == 0.0) {
        throw DomainError("cosine of a zero-norm embedding");
    }
    // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): for a == b it is exactly na.
    const double sim = simd::dot(a.values(), b.values()) / std::sqrt(na * nb);
    return std::clamp(sim, -1.0, 1.0);
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    return 1.0 - cosine_similarity(a, b);
}

}  // namespace wander
