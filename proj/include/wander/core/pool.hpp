#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wander/core/embedding.hpp"

namespace wander {

struct IndividualId {
    std::string value;
    friend auto operator<=>(const IndividualId&, const IndividualId&) = default;
};

/// How a child came to be. Mutation: one parent and an emitter (absent under the
/// no-emitter strategy). Crossover: two parents, never an emitter.
struct Lineage {
    std::vector<IndividualId> parents;
    std::optional<int> emitter_id;
    bool crossover = false;

    friend bool operator==(const Lineage&, const Lineage&) = default;
};

struct Individual {
    IndividualId id;
    std::string prompt;
    std::string artifact_ref;
    /// Embedding of the generated artifact; drives novelty.
    EmbeddingVector embedding;
    /// Text embedding of `prompt`, kept for the relevance metric.
    std::optional<EmbeddingVector> prompt_embedding;
    /// Absent for generation-0 individuals.
    std::optional<Lineage> lineage;
    int born_generation = 0;

    friend bool operator==(const Individual&, const Individual&) = default;
};

/// Throws StructuralError if the lineage arity rules are broken.
void validate_lineage(const Individual& individual);

/// Fixed-capacity population. Member order is insertion order and only matters for
/// tie-breaking.
class Pool {
public:
    /// capacity >= 1 and k >= 1, else ConfigError.
    Pool(std::size_t capacity, std::size_t k);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t k() const noexcept { return k_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    bool full() const noexcept { return members_.size() >= capacity_; }

    /// Common embedding dimension, once the pool has a member.
    std::optional<std::size_t> dim() const noexcept;

    std::span<const Individual> members() const noexcept { return members_; }
    const Individual& operator[](std::size_t i) const { return members_[i]; }
    std::optional<std::size_t> index_of(const IndividualId& id) const;

    /// Appends without any novelty test. Throws DomainError when full, StructuralError on
    /// a dimension mismatch or duplicate id.
    void append(Individual individual);

    Individual remove_at(std::size_t index);

    friend bool operator==(const Pool&, const Pool&) = default;

private:
    std::vector<Individual> members_;
    std::size_t capacity_;
    std::size_t k_;
};

struct NoveltyReport {
    std::vector<std::pair<IndividualId, double>> per_member;
    std::size_t min_index = 0;
    double min_score = 0.0;
};

/// Mean cosine distance from `candidate` to its k' = min(k, available) nearest pool
/// members, skipping `exclude`. Neighbor-rank ties go to the earlier member.
/// Throws DomainError if no member remains, StructuralError on dimension mismatch.
double novelty_score(const EmbeddingVector& candidate, const Pool& pool,
                     const std::optional<IndividualId>& exclude = std::nullopt);

/// Scores every member against the rest of the pool. The minimum's ties go to the
/// earliest member. Throws DomainError for pools smaller than two.
NoveltyReport score_pool(const Pool& pool);

enum class InsertKind { filled, replaced, rejected };

struct InsertOutcome {
    InsertKind kind = InsertKind::rejected;
    /// Candidate novelty against the pool as it was; absent only when the pool was empty.
    std::optional<double> candidate_score;
    /// Lowest member score before insertion; absent while fewer than two members.
    std::optional<double> min_score;
    std::optional<IndividualId> evicted;
    /// Rejected although candidate_score > min_score: the swap would have lowered the
    /// pool minimum.
    bool blocked_by_guard = false;

    bool accepted() const noexcept { return kind != InsertKind::rejected; }
    friend bool operator==(const InsertOutcome&, const InsertOutcome&) = default;
};

struct InsertOptions {
    /// Score members against the pool with the candidate hypothetically included
    /// ("leave-one-in"). Off: members are scored against the pool as it is.
    bool leave_one_in = false;
    /// Reject replacements that would lower the pool's minimum novelty. Off reproduces
    /// the bare "beat the lowest scorer" rule, which is not monotone for k > 1.
    bool non_regression_guard = true;
};

/// Fill phase: append. Full pool: replace the lowest scorer iff the candidate's novelty
/// is strictly higher (and the guard, when on, agrees); otherwise reject.
InsertOutcome try_insert(Pool& pool, Individual candidate, const InsertOptions& options = {});

std::string_view to_string(InsertKind kind) noexcept;

}  // namespace wander
