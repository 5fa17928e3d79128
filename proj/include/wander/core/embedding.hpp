#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wander {

/// A fixed-length vector of finite 32-bit values, as produced by an embedder.
/// Values are stored as received (no normalization); arithmetic on them is done in double.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// Throws StructuralError when empty, DomainError when any entry is non-finite.
    explicit EmbeddingVector(std::vector<float> values);

    /// Rounds each entry to float.
    static EmbeddingVector from_doubles(std::span<const double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const float> values() const noexcept { return values_; }
    float operator[](std::size_t i) const { return values_[i]; }

    double squared_norm() const noexcept;
    bool is_zero() const noexcept;

    std::vector<double> to_doubles() const;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<float> values_;
};

/// Throws DomainError if `v` is all-zero. Applied wherever embeddings enter the engine.
void require_nonzero(const EmbeddingVector& v);

/// a.b / (|a||b|), clamped to [-1, 1]. Identical inputs give exactly 1.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// 1 - cosine_similarity; symmetric, in [0, 2].
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace wander
