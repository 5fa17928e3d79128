#include "wander/core/pool.hpp"

#include <algorithm>
#include <string>

#include "wander/errors.hpp"

namespace wander {
namespace {

using Neighbor = std::pair<double, std::size_t>;  // (distance, insertion index)

// Mean of the k smallest distances. Pair ordering puts the earlier member first on ties;
// summation runs in rank order so the result does not depend on input order.
double knn_mean(std::vector<Neighbor>& neighbors, std::size_t k) {
    const std::size_t kk = std::min(k, neighbors.size());
    std::partial_sort(neighbors.begin(), neighbors.begin() + static_cast<std::ptrdiff_t>(kk),
                      neighbors.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < kk; ++i) sum += neighbors[i].first;
    return sum / static_cast<double>(kk);
}

// Leave-self-out kNN score of every vector in `points`.
std::vector<double> member_scores(std::span<const EmbeddingVector* const> points, std::size_t k) {
    const std::size_t n = points.size();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = cosine_distance(*points[i], *points[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    std::vector<double> scores(n);
    std::vector<Neighbor> row;
    row.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) row.emplace_back(dist[i * n + j], j);
        }
        scores[i] = knn_mean(row, k);
    }
    return scores;
}

std::size_t argmin_first(std::span<const double> values, std::size_t count) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < count; ++i) {
        if (values[i] < values[best]) best = i;
    }
    return best;
}

std::vector<const EmbeddingVector*> embeddings_of(const Pool& pool) {
    std::vector<const EmbeddingVector*> out;
    out.reserve(pool.size() + 1);
    for (const Individual& m : pool.members()) out.push_back(&m.embedding);
    return out;
}

void check_dim(const Pool& pool, const EmbeddingVector& v) {
    if (const auto d = pool.dim(); d && *d != v.dim()) {
        throw StructuralError("candidate dimension " + std::to_string(v.dim()) +
                              " does not match pool dimension " + std::to_string(*d));
    }
}

}  // namespace

void validate_lineage(const Individual& individual) {
    if (!individual.lineage) return;
    const Lineage& l = *individual.lineage;
    if (l.crossover) {
        if (l.parents.size() != 2 || l.emitter_id) {
            throw StructuralError("crossover lineage of " + individual.id.value +
                                  " needs exactly two parents and no emitter");
        }
        if (l.parents[0] == l.parents[1]) {
            throw StructuralError("crossover parents of " + individual.id.value + " must differ");
        }
    } else if (l.parents.size() != 1) {
        throw StructuralError("mutation lineage of " + individual.id.value +
                              " needs exactly one parent");
    }
}

Pool::Pool(std::size_t capacity, std::size_t k) : capacity_(capacity), k_(k) {
    if (capacity == 0) throw ConfigError("pool capacity must be positive");
    if (k == 0) throw ConfigError("neighbor count k must be positive");
    members_.reserve(capacity);
}

std::optional<std::size_t> Pool::dim() const noexcept {
    if (members_.empty()) return std::nullopt;
    return members_.front().embedding.dim();
}

std::optional<std::size_t> Pool::index_of(const IndividualId& id) const {
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (members_[i].id == id) return i;
    }
    return std::nullopt;
}

void Pool::append(Individual individual) {
    if (full()) throw DomainError("pool is at capacity " + std::to_string(capacity_));
    check_dim(*this, individual.embedding);
    if (index_of(individual.id)) {
        throw StructuralError("duplicate individual id " + individual.id.value);
    }
    members_.push_back(std::move(individual));
}

Individual Pool::remove_at(std::size_t index) {
    if (index >= members_.size()) throw DomainError("pool index out of range");
    Individual out = std::move(members_[index]);
    members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(index));
    return out;
}

double novelty_score(const EmbeddingVector& candidate, const Pool& pool,
                     const std::optional<IndividualId>& exclude) {
    check_dim(pool, candidate);
    std::vector<Neighbor> neighbors;
    neighbors.reserve(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) {
        if (exclude && pool[j].id == *exclude) continue;
        neighbors.emplace_back(cosine_distance(candidate, pool[j].embedding), j);
    }
    if (neighbors.empty()) {
        throw DomainError("novelty of a candidate against an empty pool");
    }
    return knn_mean(neighbors, pool.k());
}

NoveltyReport score_pool(const Pool& pool) {
    if (pool.size() < 2) {
        throw DomainError("scoring a pool needs at least two members");
    }
    const auto points = embeddings_of(pool);
    const std::vector<double> scores = member_scores(points, pool.k());

    NoveltyReport report;
    report.per_member.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        report.per_member.emplace_back(pool[i].id, scores[i]);
    }
    report.min_index = argmin_first(scores, scores.size());
    report.min_score = scores[report.min_index];
    return report;
}

InsertOutcome try_insert(Pool& pool, Individual candidate, const InsertOptions& options) {
    check_dim(pool, candidate.embedding);
    validate_lineage(candidate);

    InsertOutcome outcome;
    if (pool.empty()) {
        pool.append(std::move(candidate));
        outcome.kind = InsertKind::filled;
        return outcome;
    }

    const double candidate_score = novelty_score(candidate.embedding, pool);
    outcome.candidate_score = candidate_score;

    if (!pool.full()) {
        if (pool.size() >= 2) outcome.min_score = score_pool(pool).min_score;
        pool.append(std::move(candidate));
        outcome.kind = InsertKind::filled;
        return outcome;
    }

    if (pool.size() < 2) {
        throw DomainError("a full pool of one member has no ranking to replace against");
    }

    const NoveltyReport report = score_pool(pool);
    std::size_t victim = report.min_index;
    double victim_score = report.min_score;
    if (options.leave_one_in) {
        auto points = embeddings_of(pool);
        points.push_back(&candidate.embedding);
        const std::vector<double> scores = member_scores(points, pool.k());
        victim = argmin_first(scores, pool.size());
        victim_score = scores[victim];
    }
    outcome.min_score = victim_score;

    if (!(candidate_score > victim_score)) {
        outcome.kind = InsertKind::rejected;
        return outcome;
    }

    if (options.non_regression_guard) {
        auto points = embeddings_of(pool);
        points.erase(points.begin() + static_cast<std::ptrdiff_t>(victim));
        points.push_back(&candidate.embedding);
        const std::vector<double> after = member_scores(points, pool.k());
        const double new_min = after[argmin_first(after, after.size())];
        if (new_min < report.min_score) {
            outcome.kind = InsertKind::rejected;
            outcome.blocked_by_guard = true;
            return outcome;
        }
    }

    outcome.evicted = pool.remove_at(victim).id;
    pool.append(std::move(candidate));
    outcome.kind = InsertKind::replaced;
    return outcome;
}

std::string_view to_string(InsertKind kind) noexcept {
    switch (kind) {
        case InsertKind::filled: return "filled";
        case InsertKind::replaced: return "replaced";
        case InsertKind::rejected: return "rejected";
    }
    return "unknown";
}

}  // namespace wander
