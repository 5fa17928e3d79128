#include "wander/runstore/records.hpp"

#include <chrono>
#include <random>

#include "json_fields.hpp"
#include "wander/encoding.hpp"
#include "wander/errors.hpp"
#include "wander/qdaif.hpp"

namespace wander::records {
namespace {

using nlohmann::json;

template <class T>
T req(const json& j, const char* key, const char* ctx) {
    return detail::required<RunStoreError, T>(j, key, ctx);
}

template <class T>
std::optional<T> opt(const json& j, const char* key, const char* ctx) {
    return detail::optional_field<RunStoreError, T>(j, key, ctx);
}

InsertKind parse_insert_kind(const std::string& s) {
    if (s == "filled") return InsertKind::filled;
    if (s == "replaced") return InsertKind::replaced;
    if (s == "rejected") return InsertKind::rejected;
    throw RunStoreError("unknown insert outcome '" + s + "'");
}

std::vector<IndividualId> ids_of(const json& j, const char* key, const char* ctx) {
    std::vector<IndividualId> out;
    for (const auto& s : req<std::vector<std::string>>(j, key, ctx)) out.push_back(IndividualId{s});
    return out;
}

json ids_json(const std::vector<IndividualId>& ids) {
    json a = json::array();
    for (const auto& id : ids) a.push_back(id.value);
    return a;
}

}  // namespace

std::string engine_version() { return "wander-cpp 1.0.0"; }

std::map<std::string, std::string> current_templates() {
    return {{"mutation", std::string(kMutationTemplate)},
            {"undirected_mutation", std::string(kUndirectedMutationTemplate)},
            {"crossover", std::string(kCrossoverTemplate)},
            {"cell", std::string(kCellTemplate)}};
}

std::string new_run_id() {
    std::random_device rd;
    std::mt19937_64 g((static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
                      static_cast<std::uint64_t>(std::chrono::high_resolution_clock::now().time_since_epoch().count()));
    std::uint8_t b[16];
    for (int i = 0; i < 16; i += 8) {
        const std::uint64_t x = g();
        for (int k = 0; k < 8; ++k) b[i + k] = static_cast<std::uint8_t>(x >> (8 * k));
    }
    b[6] = static_cast<std::uint8_t>((b[6] & 0x0f) | 0x40);
    b[8] = static_cast<std::uint8_t>((b[8] & 0x3f) | 0x80);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 16; ++i) {
        if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
        out.push_back(kHex[b[i] >> 4]);
        out.push_back(kHex[b[i] & 15]);
    }
    return out;
}

Snapshot snapshot_of(const std::string& run_id, const RunState& state) {
    Snapshot s;
    s.run_id = run_id;
    s.generation = state.generation;
    s.pool = state.pool;
    s.stats = state.stats;
    s.initial_prompt_embedding = state.initial_prompt_embedding;
    s.cumulative_tokens = state.cumulative_tokens;
    s.embed_calls = state.embed_calls;
    if (state.metrics.empty()) throw DomainError("snapshot of a state without metrics");
    s.metrics = state.metrics.back();
    return s;
}

RunState state_of(const Snapshot& s) {
    RunState state;
    state.pool = s.pool;
    state.stats = s.stats;
    state.initial_prompt_embedding = s.initial_prompt_embedding;
    state.generation = s.generation;
    state.next_attempt = 0;
    state.cumulative_tokens = s.cumulative_tokens;
    state.embed_calls = s.embed_calls;
    state.metrics = {s.metrics};
    return state;
}

InitRecord init_record_of(const RunState& state) {
    InitRecord r;
    r.initial_prompt_embedding = state.initial_prompt_embedding;
    r.members.assign(state.pool.members().begin(), state.pool.members().end());
    r.embed_calls = state.embed_calls;
    return r;
}

RunState state_of(const InitRecord& init, const RunConfig& config) {
    RunState state;
    state.pool = Pool(config.pool_capacity, config.k);
    for (const auto& m : init.members) state.pool.append(m);
    state.initial_prompt_embedding = init.initial_prompt_embedding;
    state.embed_calls = init.embed_calls;
    state.metrics.push_back(compute_metrics(0, state.pool, state.initial_prompt_embedding, 0, state.embed_calls));
    return state;
}

std::string encode_embedding(const EmbeddingVector& v) {
    return encoding::base64_encode(encoding::floats_to_le_bytes(v.values()));
}

EmbeddingVector decode_embedding(const std::string& text) {
    try {
        return EmbeddingVector(encoding::le_bytes_to_floats(encoding::base64_decode(text)));
    } catch (const std::invalid_argument& e) {
        throw RunStoreError(std::string("corrupt embedding: ") + e.what());
    } catch (const Error& e) {
        throw RunStoreError(std::string("invalid embedding: ") + e.what());
    }
}

json to_json(const EmbeddingVector& v) { return encode_embedding(v); }

json to_json(const Individual& v) {
    json j{{"id", v.id.value},
           {"prompt", v.prompt},
           {"artifact_ref", v.artifact_ref},
           {"embedding", encode_embedding(v.embedding)},
           {"born_generation", v.born_generation}};
    if (v.prompt_embedding) j["prompt_embedding"] = encode_embedding(*v.prompt_embedding);
    if (v.lineage) {
        json l{{"parents", ids_json(v.lineage->parents)}, {"crossover", v.lineage->crossover}};
        if (v.lineage->emitter_id) l["emitter_id"] = *v.lineage->emitter_id;
        j["lineage"] = l;
    }
    return j;
}

Individual parse_individual(const json& j) {
    constexpr const char* ctx = "individual";
    Individual v;
    v.id = IndividualId{req<std::string>(j, "id", ctx)};
    v.prompt = req<std::string>(j, "prompt", ctx);
    v.artifact_ref = req<std::string>(j, "artifact_ref", ctx);
    v.embedding = decode_embedding(req<std::string>(j, "embedding", ctx));
    v.born_generation = req<int>(j, "born_generation", ctx);
    if (const auto pe = opt<std::string>(j, "prompt_embedding", ctx)) v.prompt_embedding = decode_embedding(*pe);
    if (j.contains("lineage") && !j.at("lineage").is_null()) {
        const json& l = j.at("lineage");
        Lineage lineage;
        lineage.parents = ids_of(l, "parents", "individual.lineage");
        lineage.crossover = req<bool>(l, "crossover", "individual.lineage");
        lineage.emitter_id = opt<int>(l, "emitter_id", "individual.lineage");
        v.lineage = std::move(lineage);
    }
    try {
        validate_lineage(v);
    } catch (const Error& e) {
        throw RunStoreError(std::string("individual ") + v.id.value + ": " + e.what());
    }
    return v;
}

json to_json(const Pool& v) {
    json members = json::array();
    for (const auto& m : v.members()) members.push_back(to_json(m));
    return {{"capacity", v.capacity()}, {"k", v.k()}, {"members", members}};
}

Pool parse_pool(const json& j) {
    constexpr const char* ctx = "pool";
    try {
        Pool p(req<std::size_t>(j, "capacity", ctx), req<std::size_t>(j, "k", ctx));
        const json members = req<json>(j, "members", ctx);
        if (!members.is_array()) throw RunStoreError("pool: members must be an array");
        for (const auto& m : members) p.append(parse_individual(m));
        return p;
    } catch (const RunStoreError&) {
        throw;
    } catch (const Error& e) {
        throw RunStoreError(std::string("pool: ") + e.what());
    }
}

json to_json(const EmitterStats& v) {
    json arms = json::array();
    for (const auto& [id, a] : v.arms()) {
        arms.push_back({{"emitter_id", id},
                        {"pulls", a.pulls},
                        {"successes", a.successes},
                        {"cumulative_reward", a.cumulative_reward}});
    }
    return arms;
}

EmitterStats parse_emitter_stats(const json& j) {
    if (!j.is_array()) throw RunStoreError("emitter stats: expected an array");
    EmitterStats s;
    for (const auto& a : j) {
        constexpr const char* ctx = "emitter stats";
        ArmStats& arm = s.arm_mut(req<int>(a, "emitter_id", ctx));
        arm.pulls = req<std::uint64_t>(a, "pulls", ctx);
        arm.successes = req<std::uint64_t>(a, "successes", ctx);
        arm.cumulative_reward = req<double>(a, "cumulative_reward", ctx);
        if (arm.successes > arm.pulls) throw RunStoreError("emitter stats: successes exceed pulls");
    }
    return s;
}

json to_json(const MetricRecord& v) {
    json j{{"generation", v.generation},
           {"vendi", v.vendi},
           {"mean_pairwise_distance", v.mean_pairwise_distance},
           {"min_novelty", v.min_novelty},
           {"relevance", v.relevance},
           {"cumulative_tokens", v.cumulative_tokens},
           {"embed_calls", v.embed_calls},
           {"pool_size", v.pool_size}};
    if (v.perceptual_distance) j["perceptual_distance"] = *v.perceptual_distance;
    return j;
}

MetricRecord parse_metric_record(const json& j) {
    constexpr const char* ctx = "metric record";
    MetricRecord v;
    v.generation = req<int>(j, "generation", ctx);
    v.vendi = req<double>(j, "vendi", ctx);
    v.mean_pairwise_distance = req<double>(j, "mean_pairwise_distance", ctx);
    v.min_novelty = req<double>(j, "min_novelty", ctx);
    v.relevance = req<double>(j, "relevance", ctx);
    v.cumulative_tokens = req<std::uint64_t>(j, "cumulative_tokens", ctx);
    v.embed_calls = req<std::uint64_t>(j, "embed_calls", ctx);
    v.pool_size = req<std::size_t>(j, "pool_size", ctx);
    v.perceptual_distance = opt<double>(j, "perceptual_distance", ctx);
    return v;
}

json to_json(const GenerationEvent& v) {
    json j{{"type", "event"},
           {"generation", v.generation},
           {"attempt", v.attempt},
           {"kind", std::string(to_string(v.kind))},
           {"parents", ids_json(v.parents)},
           {"instruction", v.instruction},
           {"child_id", v.child_id.value},
           {"outcome", std::string(to_string(v.outcome))},
           {"blocked_by_guard", v.blocked_by_guard},
           {"token_usage",
            {{"prompt_tokens", v.token_usage.prompt_tokens},
             {"completion_tokens", v.token_usage.completion_tokens},
             {"estimated", v.token_usage.estimated}}},
           {"embed_calls", v.embed_calls}};
    if (v.emitter_id) j["emitter_id"] = *v.emitter_id;
    if (v.child_prompt) j["child_prompt"] = *v.child_prompt;
    if (v.artifact_ref) j["artifact_ref"] = *v.artifact_ref;
    if (v.content_digest) j["content_digest"] = *v.content_digest;
    if (v.child_embedding) j["child_embedding"] = encode_embedding(*v.child_embedding);
    if (v.prompt_embedding) j["prompt_embedding"] = encode_embedding(*v.prompt_embedding);
    if (v.candidate_score) j["candidate_score"] = *v.candidate_score;
    if (v.min_score) j["min_score"] = *v.min_score;
    if (v.evicted) j["evicted"] = v.evicted->value;
    if (v.reward) j["reward"] = *v.reward;
    if (v.error) j["error"] = *v.error;
    return j;
}

GenerationEvent parse_event(const json& j) {
    constexpr const char* ctx = "event";
    GenerationEvent v;
    v.generation = req<int>(j, "generation", ctx);
    v.attempt = req<int>(j, "attempt", ctx);
    try {
        v.kind = parse_event_kind(req<std::string>(j, "kind", ctx));
    } catch (const Error& e) {
        throw RunStoreError(std::string("event: ") + e.what());
    }
    v.parents = ids_of(j, "parents", ctx);
    v.emitter_id = opt<int>(j, "emitter_id", ctx);
    v.instruction = req<std::string>(j, "instruction", ctx);
    v.child_id = IndividualId{req<std::string>(j, "child_id", ctx)};
    v.child_prompt = opt<std::string>(j, "child_prompt", ctx);
    v.artifact_ref = opt<std::string>(j, "artifact_ref", ctx);
    v.content_digest = opt<std::string>(j, "content_digest", ctx);
    if (const auto e = opt<std::string>(j, "child_embedding", ctx)) v.child_embedding = decode_embedding(*e);
    if (const auto e = opt<std::string>(j, "prompt_embedding", ctx)) v.prompt_embedding = decode_embedding(*e);
    v.candidate_score = opt<double>(j, "candidate_score", ctx);
    v.min_score = opt<double>(j, "min_score", ctx);
    v.outcome = parse_insert_kind(req<std::string>(j, "outcome", ctx));
    if (const auto e = opt<std::string>(j, "evicted", ctx)) v.evicted = IndividualId{*e};
    v.blocked_by_guard = req<bool>(j, "blocked_by_guard", ctx);
    v.reward = opt<double>(j, "reward", ctx);
    v.error = opt<std::string>(j, "error", ctx);
    const json usage = req<json>(j, "token_usage", ctx);
    v.token_usage.prompt_tokens = req<std::uint64_t>(usage, "prompt_tokens", "event.token_usage");
    v.token_usage.completion_tokens = req<std::uint64_t>(usage, "completion_tokens", "event.token_usage");
    v.token_usage.estimated = req<bool>(usage, "estimated", "event.token_usage");
    v.embed_calls = req<std::uint64_t>(j, "embed_calls", ctx);
    return v;
}

json to_json(const EventTiming& v) {
    return {{"generation", v.generation},
            {"attempt", v.attempt},
            {"started_at", v.started_at},
            {"finished_at", v.finished_at},
            {"duration_ms", v.duration_ms}};
}

EventTiming parse_timing(const json& j) {
    constexpr const char* ctx = "timing";
    return {req<int>(j, "generation", ctx), req<int>(j, "attempt", ctx), req<std::string>(j, "started_at", ctx),
            req<std::string>(j, "finished_at", ctx), req<double>(j, "duration_ms", ctx)};
}

json to_json(const Snapshot& v) {
    return {{"run_id", v.run_id},
            {"generation", v.generation},
            {"pool", to_json(v.pool)},
            {"emitter_stats", to_json(v.stats)},
            {"initial_prompt_embedding", encode_embedding(v.initial_prompt_embedding)},
            {"cumulative_tokens", v.cumulative_tokens},
            {"embed_calls", v.embed_calls},
            {"metrics", to_json(v.metrics)}};
}

Snapshot parse_snapshot(const json& j) {
    constexpr const char* ctx = "snapshot";
    Snapshot v;
    v.run_id = req<std::string>(j, "run_id", ctx);
    v.generation = req<int>(j, "generation", ctx);
    v.pool = parse_pool(req<json>(j, "pool", ctx));
    v.stats = parse_emitter_stats(req<json>(j, "emitter_stats", ctx));
    v.initial_prompt_embedding = decode_embedding(req<std::string>(j, "initial_prompt_embedding", ctx));
    v.cumulative_tokens = req<std::uint64_t>(j, "cumulative_tokens", ctx);
    v.embed_calls = req<std::uint64_t>(j, "embed_calls", ctx);
    v.metrics = parse_metric_record(req<json>(j, "metrics", ctx));
    return v;
}

json to_json(const RunManifest& v) {
    return {{"format_version", v.format_version},
            {"run_id", v.run_id},
            {"created_at", v.created_at},
            {"engine_version", v.engine_version},
            {"seed", v.config.seed},
            {"config", wander::to_json(v.config)},
            {"templates", v.templates}};
}

RunManifest parse_manifest(const json& j) {
    constexpr const char* ctx = "manifest";
    RunManifest v;
    v.format_version = req<int>(j, "format_version", ctx);
    if (v.format_version != kFormatVersion) {
        throw RunStoreError("manifest format version " + std::to_string(v.format_version) +
                            " is not supported (expected " + std::to_string(kFormatVersion) + ")");
    }
    v.run_id = req<std::string>(j, "run_id", ctx);
    v.created_at = req<std::string>(j, "created_at", ctx);
    v.engine_version = req<std::string>(j, "engine_version", ctx);
    try {
        v.config = parse_run_config(req<json>(j, "config", ctx));
    } catch (const ConfigError& e) {
        throw RunStoreError(std::string("manifest config: ") + e.what());
    }
    v.templates = req<std::map<std::string, std::string>>(j, "templates", ctx);
    return v;
}

json to_json(const InitRecord& v) {
    json members = json::array();
    for (const auto& m : v.members) members.push_back(to_json(m));
    return {{"type", "init"},
            {"initial_prompt_embedding", encode_embedding(v.initial_prompt_embedding)},
            {"members", members},
            {"embed_calls", v.embed_calls}};
}

InitRecord parse_init_record(const json& j) {
    constexpr const char* ctx = "init record";
    InitRecord v;
    v.initial_prompt_embedding = decode_embedding(req<std::string>(j, "initial_prompt_embedding", ctx));
    const json members = req<json>(j, "members", ctx);
    if (!members.is_array()) throw RunStoreError("init record: members must be an array");
    for (const auto& m : members) v.members.push_back(parse_individual(m));
    v.embed_calls = req<std::uint64_t>(j, "embed_calls", ctx);
    return v;
}

}  // namespace wander::records
