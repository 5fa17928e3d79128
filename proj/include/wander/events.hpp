#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wander/core/embedding.hpp"
#include "wander/core/pool.hpp"
#include "wander/providers/protocol.hpp"

namespace wander {

enum class EventKind { mutation, crossover };

std::string_view to_string(EventKind kind) noexcept;
EventKind parse_event_kind(std::string_view name);

/// One mutation attempt. Holds every decision and every provider output the pool update
/// depends on, so a run can be replayed from the log without calling providers. Wall
/// clock times are kept apart (EventTiming) so replays produce identical logs.
struct GenerationEvent {
    int generation = 0;
    int attempt = 0;
    EventKind kind = EventKind::mutation;
    std::vector<IndividualId> parents;
    std::optional<int> emitter_id;
    std::string instruction;
    IndividualId child_id;
    std::optional<std::string> child_prompt;
    std::optional<std::string> artifact_ref;
    std::optional<std::string> content_digest;
    /// Artifact embedding; present exactly when the candidate reached the pool update.
    std::optional<EmbeddingVector> child_embedding;
    std::optional<EmbeddingVector> prompt_embedding;
    std::optional<double> candidate_score;
    std::optional<double> min_score;
    InsertKind outcome = InsertKind::rejected;
    std::optional<IndividualId> evicted;
    bool blocked_by_guard = false;
    /// Reward credited to the emitter; absent when no emitter was credited.
    std::optional<double> reward;
    /// Why the attempt degraded to Rejected before reaching the pool (provider failure,
    /// empty mutator output, zero embedding).
    std::optional<std::string> error;
    protocol::TokenUsage token_usage;
    std::uint64_t embed_calls = 0;

    bool degraded() const noexcept { return error.has_value(); }
    friend bool operator==(const GenerationEvent&, const GenerationEvent&) = default;
};

struct EventTiming {
    int generation = 0;
    int attempt = 0;
    /// RFC 3339 UTC, millisecond precision.
    std::string started_at;
    std::string finished_at;
    double duration_ms = 0.0;

    friend bool operator==(const EventTiming&, const EventTiming&) = default;
};

}  // namespace wander
