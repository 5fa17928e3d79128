#pragma once

// JSON forms of everything the run directory holds. Embeddings are base64 strings of
// little-endian float32, so every record round-trips exactly. Parsers throw
// RunStoreError.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "wander/config.hpp"
#include "wander/core/pool.hpp"
#include "wander/emitters.hpp"
#include "wander/events.hpp"
#include "wander/evolve.hpp"
#include "wander/metrics.hpp"

namespace wander::records {

inline constexpr int kFormatVersion = 1;

struct RunManifest {
    int format_version = kFormatVersion;
    std::string run_id;
    std::string created_at;
    std::string engine_version;
    RunConfig config;
    /// Template name -> verbatim template text.
    std::map<std::string, std::string> templates;

    friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

/// State at the end of a generation (generation 0 = the initial pool).
struct Snapshot {
    std::string run_id;
    int generation = 0;
    Pool pool{2, 1};
    EmitterStats stats;
    EmbeddingVector initial_prompt_embedding;
    std::uint64_t cumulative_tokens = 0;
    std::uint64_t embed_calls = 0;
    MetricRecord metrics;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

/// First line of events.jsonl: the initial pool, so the log alone can replay the run.
struct InitRecord {
    EmbeddingVector initial_prompt_embedding;
    std::vector<Individual> members;
    std::uint64_t embed_calls = 0;

    friend bool operator==(const InitRecord&, const InitRecord&) = default;
};

std::string engine_version();
std::map<std::string, std::string> current_templates();
std::string new_run_id();

Snapshot snapshot_of(const std::string& run_id, const RunState& state);
/// Rebuilds loop state; `metrics` is left holding only the snapshot's own record.
RunState state_of(const Snapshot& snapshot);
InitRecord init_record_of(const RunState& state);
/// Generation-0 state from the init record (metric record recomputed).
RunState state_of(const InitRecord& init, const RunConfig& config);

std::string encode_embedding(const EmbeddingVector& v);
EmbeddingVector decode_embedding(const std::string& text);

nlohmann::json to_json(const EmbeddingVector& v);
nlohmann::json to_json(const Individual& v);
nlohmann::json to_json(const Pool& v);
nlohmann::json to_json(const EmitterStats& v);
nlohmann::json to_json(const MetricRecord& v);
nlohmann::json to_json(const GenerationEvent& v);
nlohmann::json to_json(const EventTiming& v);
nlohmann::json to_json(const Snapshot& v);
nlohmann::json to_json(const RunManifest& v);
nlohmann::json to_json(const InitRecord& v);

Individual parse_individual(const nlohmann::json& j);
Pool parse_pool(const nlohmann::json& j);
EmitterStats parse_emitter_stats(const nlohmann::json& j);
MetricRecord parse_metric_record(const nlohmann::json& j);
GenerationEvent parse_event(const nlohmann::json& j);
EventTiming parse_timing(const nlohmann::json& j);
Snapshot parse_snapshot(const nlohmann::json& j);
RunManifest parse_manifest(const nlohmann::json& j);
InitRecord parse_init_record(const nlohmann::json& j);

}  // namespace wander::records
