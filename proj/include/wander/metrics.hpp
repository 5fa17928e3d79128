#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wander/core/embedding.hpp"
#include "wander/core/pool.hpp"

namespace wander {

/// Row-major n x n cosine similarities in input order.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    explicit SimilarityMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    std::span<const double> data() const noexcept { return data_; }

    double mean_off_diagonal() const noexcept;

    /// Comma-separated rows, 17 significant digits.
    std::string to_csv() const;

    friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Needs at least two vectors of one dimension, none zero. Each unordered pair is
/// computed once, so the result is exactly symmetric with a unit diagonal.
SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> embeddings);

/// exp(-sum l log l) over the eigenvalues of K/n. Eigenvalues below 1e-12 count as zero;
/// one below -1e-9 raises NumericalError.
double vendi_score(std::span<const EmbeddingVector> embeddings);
double vendi_score(const SimilarityMatrix& k);

/// Mean cosine distance over unordered pairs.
double mean_pairwise_distance(std::span<const EmbeddingVector> embeddings);

/// Mean cosine similarity between the initial prompt's text embedding and each pool
/// prompt's text embedding.
double relevance(const EmbeddingVector& initial, std::span<const EmbeddingVector> prompts);

struct TokenCall {
    /// "mutation" or "crossover" (or "target_cell" in the baseline).
    std::string kind;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    bool estimated = false;
};

struct TokenTotals {
    std::uint64_t total = 0;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    std::uint64_t mutation = 0;
    std::uint64_t crossover = 0;
    std::uint64_t other = 0;
    /// Share of tokens (not calls) that were estimated; 0 for an empty input.
    double estimated_fraction = 0.0;

    friend bool operator==(const TokenTotals&, const TokenTotals&) = default;
};

TokenTotals token_totals(std::span<const TokenCall> calls);

struct MetricRecord {
    int generation = 0;
    double vendi = 1.0;
    double mean_pairwise_distance = 0.0;
    double min_novelty = 0.0;
    double relevance = 1.0;
    std::uint64_t cumulative_tokens = 0;
    std::uint64_t embed_calls = 0;
    std::size_t pool_size = 0;
    /// Filled only when an external perceptual-distance provider is configured.
    std::optional<double> perceptual_distance;

    friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

/// Pool diversity and relevance for one generation. Pools of one member report
/// vendi 1, distance 0 and min novelty 0. Members without a prompt embedding are skipped
/// for relevance.
MetricRecord compute_metrics(int generation, const Pool& pool, const EmbeddingVector& initial_prompt_embedding,
                             std::uint64_t cumulative_tokens, std::uint64_t embed_calls);

std::string metrics_csv_header();
std::string to_csv_row(const MetricRecord& record);

}  // namespace wander
