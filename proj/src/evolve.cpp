#include "wander/evolve.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

#include "wander/errors.hpp"
#include "wander/rng.hpp"

namespace wander {

const std::string_view kMutationTemplate =
    "You are evolving text prompts for an image generation model.\n"
    "Rewrite the prompt below according to this directive: {directive}\n"
    "\n"
    "Prompt: {prompt}\n"
    "\n"
    "Reply with the new prompt only, without quotation marks or commentary.";

const std::string_view kUndirectedMutationTemplate =
    "You are evolving text prompts for an image generation model.\n"
    "Rewrite this prompt to produce a different image.\n"
    "\n"
    "Prompt: {prompt}\n"
    "\n"
    "Reply with the new prompt only, without quotation marks or commentary.";

const std::string_view kCrossoverTemplate =
    "You are evolving text prompts for an image generation model.\n"
    "Combine elements of the two prompts below into one new prompt.\n"
    "\n"
    "Prompt A: {prompt_a}\n"
    "Prompt B: {prompt_b}\n"
    "\n"
    "Reply with the merged prompt only, without quotation marks or commentary.";

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kDecisionStream = 1;
constexpr std::uint64_t kMutateStream = 2;
constexpr std::uint64_t kGenerateStream = 3;

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool strip_pair(std::string_view& s, std::string_view open, std::string_view close) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
        s.remove_prefix(open.size());
        s.remove_suffix(close.size());
        return true;
    }
    return false;
}

EmbeddingVector embed(const Providers& p, const RetryPolicy& retry, protocol::Modality modality,
                      const std::string& payload) {
    return with_retries(retry, [&] { return p.embedder->embed({modality, payload}).embedding; });
}

void check_dimension(const RunState& state, const EmbeddingVector& v, const char* what) {
    const auto d = state.pool.dim();
    if (d && *d != v.dim()) {
        throw ProtocolError(std::string("embedder returned a ") + std::to_string(v.dim()) + "-dimensional " + what +
                            " embedding; the pool is " + std::to_string(*d) + "-dimensional");
    }
}

void credit(RunState& state, const RunConfig& config, GenerationEvent& event, const InsertOutcome& outcome) {
    if (event.kind != EventKind::mutation || !event.emitter_id) return;
    const double before = state.stats.arm(*event.emitter_id).cumulative_reward;
    record_outcome(state.stats, *event.emitter_id, outcome, config.reward);
    event.reward = state.stats.arm(*event.emitter_id).cumulative_reward - before;
}

Individual child_of(const GenerationEvent& e) {
    Individual child;
    child.id = e.child_id;
    child.prompt = *e.child_prompt;
    child.artifact_ref = e.artifact_ref.value_or("");
    child.embedding = *e.child_embedding;
    child.prompt_embedding = e.prompt_embedding;
    child.lineage = Lineage{e.parents, e.emitter_id, e.kind == EventKind::crossover};
    child.born_generation = e.generation;
    return child;
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
    return kind == EventKind::mutation ? "mutation" : "crossover";
}

EventKind parse_event_kind(std::string_view name) {
    if (name == "mutation") return EventKind::mutation;
    if (name == "crossover") return EventKind::crossover;
    throw DomainError("unknown event kind '" + std::string(name) + "'");
}

std::string render_template(std::string_view tmpl,
                            std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const std::size_t open = tmpl.find('{', i);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(i));
            break;
        }
        const std::size_t close = tmpl.find('}', open);
        if (close == std::string_view::npos) throw std::invalid_argument("template has an unclosed '{'");
        out.append(tmpl.substr(i, open - i));
        const std::string_view name = tmpl.substr(open + 1, close - open - 1);
        bool found = false;
        for (const auto& [key, value] : values) {
            if (key == name) {
                out.append(value);
                found = true;
                break;
            }
        }
        if (!found) throw std::invalid_argument("template placeholder {" + std::string(name) + "} has no value");
        i = close + 1;
    }
    return out;
}

std::string render_mutation_instruction(std::string_view parent_prompt, const Emitter* emitter) {
    if (trim(parent_prompt).empty()) throw DomainError("cannot mutate an empty prompt");
    if (emitter == nullptr) return render_template(kUndirectedMutationTemplate, {{"prompt", parent_prompt}});
    return render_template(kMutationTemplate, {{"prompt", parent_prompt}, {"directive", emitter->directive}});
}

std::string render_crossover_instruction(std::string_view prompt_a, std::string_view prompt_b) {
    if (trim(prompt_a).empty() || trim(prompt_b).empty()) throw DomainError("cannot cross over an empty prompt");
    return render_template(kCrossoverTemplate, {{"prompt_a", prompt_a}, {"prompt_b", prompt_b}});
}

std::string clean_mutator_output(std::string_view text) {
    std::string_view s = trim(text);
    for (;;) {
        const bool stripped = strip_pair(s, "\"", "\"") || strip_pair(s, "'", "'") || strip_pair(s, "`", "`") ||
                              strip_pair(s, "“", "”") || strip_pair(s, "‘", "’");
        if (!stripped) break;
        s = trim(s);
    }
    return std::string(s);
}

std::string initial_id(std::size_t index) { return "g0.i" + std::to_string(index); }

std::string child_id(int generation, int attempt) {
    return "g" + std::to_string(generation) + ".a" + std::to_string(attempt);
}

RunState init_pool(const RunConfig& config, const Providers& providers) {
    validate(config);
    RunState state;
    state.pool = Pool(config.pool_capacity, config.k);
    state.initial_prompt_embedding = embed(providers, config.retry, protocol::Modality::text, config.initial_prompt);
    require_nonzero(state.initial_prompt_embedding);
    state.embed_calls = 1;

    for (std::size_t i = 0; i < config.initial_count; ++i) {
        protocol::GenerateRequest req{config.initial_prompt, config.generator.model_id, config.generator.image_size,
                                      derive_seed(config.seed, {kGenerateStream, 0, i})};
        const auto gen = with_retries(config.retry, [&] { return providers.generator->generate(req); });
        EmbeddingVector image = embed(providers, config.retry, protocol::Modality::image, gen.artifact_ref);
        ++state.embed_calls;
        require_nonzero(image);
        check_dimension(state, image, "image");

        Individual ind;
        ind.id = IndividualId{initial_id(i)};
        ind.prompt = config.initial_prompt;
        ind.artifact_ref = gen.artifact_ref;
        ind.embedding = std::move(image);
        ind.prompt_embedding = state.initial_prompt_embedding;
        state.pool.append(std::move(ind));
    }
    state.metrics.push_back(compute_metrics(0, state.pool, state.initial_prompt_embedding, 0, state.embed_calls));
    return state;
}

GenerationEvent evolve_step(RunState& state, const RunConfig& config, const Providers& providers) {
    GenerationEvent e;
    e.generation = state.generation + 1;
    e.attempt = state.next_attempt;
    e.child_id = IndividualId{child_id(e.generation, e.attempt)};
    const auto g = static_cast<std::uint64_t>(e.generation);
    const auto a = static_cast<std::uint64_t>(e.attempt);
    Rng rng(derive_seed(config.seed, {kDecisionStream, g, a}));

    const Pool& pool = state.pool;
    MutationContext ctx;
    ctx.seed = derive_seed(config.seed, {kMutateStream, g, a});
    const bool crossover = pool.size() >= 2 && rng.bernoulli(config.crossover_probability);
    if (crossover) {
        const std::size_t i = rng.uniform_index(pool.size());
        std::size_t j = rng.uniform_index(pool.size() - 1);
        if (j >= i) ++j;
        e.kind = EventKind::crossover;
        e.parents = {pool[i].id, pool[j].id};
        e.instruction = render_crossover_instruction(pool[i].prompt, pool[j].prompt);
        ctx.kind = MutationContext::Kind::crossover;
        ctx.parent_prompts = {pool[i].prompt, pool[j].prompt};
    } else {
        const std::size_t i = rng.uniform_index(pool.size());
        const auto emitter = select_emitter(config.strategy, config.emitters, state.stats, rng);
        e.kind = EventKind::mutation;
        e.parents = {pool[i].id};
        if (emitter) e.emitter_id = emitter->id;
        e.instruction = render_mutation_instruction(pool[i].prompt, emitter ? &*emitter : nullptr);
        ctx.kind = MutationContext::Kind::mutation;
        ctx.parent_prompts = {pool[i].prompt};
        ctx.emitter_id = e.emitter_id;
    }

    const auto degrade = [&](std::string cause) {
        e.error = std::move(cause);
        e.outcome = InsertKind::rejected;
        state.cumulative_tokens += e.token_usage.total();
        state.embed_calls += e.embed_calls;
        ++state.next_attempt;
        return e;
    };

    try {
        const protocol::MutateRequest req{e.instruction, config.mutator.model_id, config.mutator.temperature,
                                          config.mutator.max_output_length};
        auto reply = with_retries(config.retry, [&] { return providers.mutator->mutate(req, ctx); });
        e.token_usage = reply.token_usage.value_or(protocol::TokenUsage{
            protocol::estimate_tokens(e.instruction), protocol::estimate_tokens(reply.output_text), true});
        std::string prompt = clean_mutator_output(reply.output_text);
        if (prompt.empty()) return degrade("mutator returned an empty prompt");
        e.child_prompt = prompt;

        const protocol::GenerateRequest greq{prompt, config.generator.model_id, config.generator.image_size,
                                             derive_seed(config.seed, {kGenerateStream, g, a})};
        const auto gen = with_retries(config.retry, [&] { return providers.generator->generate(greq); });
        e.artifact_ref = gen.artifact_ref;
        e.content_digest = gen.content_digest;

        ++e.embed_calls;
        EmbeddingVector image = embed(providers, config.retry, protocol::Modality::image, gen.artifact_ref);
        ++e.embed_calls;
        EmbeddingVector text = embed(providers, config.retry, protocol::Modality::text, prompt);
        check_dimension(state, image, "image");
        if (image.is_zero()) return degrade("embedder returned a zero image embedding");
        if (text.is_zero() || text.dim() != state.initial_prompt_embedding.dim()) {
            return degrade("embedder returned an unusable text embedding");
        }
        e.child_embedding = std::move(image);
        e.prompt_embedding = std::move(text);
    } catch (const TransportError& err) {
        if (!err.retryable()) throw;
        return degrade(std::string("provider failed after retries: ") + err.what());
    }

    const InsertOutcome outcome = try_insert(state.pool, child_of(e), config.insert);
    e.outcome = outcome.kind;
    e.candidate_score = outcome.candidate_score;
    e.min_score = outcome.min_score;
    e.evicted = outcome.evicted;
    e.blocked_by_guard = outcome.blocked_by_guard;
    credit(state, config, e, outcome);

    state.cumulative_tokens += e.token_usage.total();
    state.embed_calls += e.embed_calls;
    ++state.next_attempt;
    return e;
}

void apply_event(RunState& state, const RunConfig& config, const GenerationEvent& e) {
    if (e.generation != state.generation + 1 || e.attempt != state.next_attempt) {
        throw RunStoreError("event g" + std::to_string(e.generation) + ".a" + std::to_string(e.attempt) +
                            " is out of sequence (expected g" + std::to_string(state.generation + 1) + ".a" +
                            std::to_string(state.next_attempt) + ")");
    }
    if (e.child_embedding) {
        if (!e.child_prompt) throw RunStoreError("event " + e.child_id.value + " has an embedding but no prompt");
        const InsertOutcome outcome = try_insert(state.pool, child_of(e), config.insert);
        if (outcome.kind != e.outcome || outcome.evicted != e.evicted) {
            throw RunStoreError("replaying event " + e.child_id.value + " gives " +
                                std::string(to_string(outcome.kind)) + ", the log says " +
                                std::string(to_string(e.outcome)));
        }
        GenerationEvent scratch = e;
        credit(state, config, scratch, outcome);
    } else if (e.outcome != InsertKind::rejected) {
        throw RunStoreError("event " + e.child_id.value + " was accepted without an embedding");
    }
    state.cumulative_tokens += e.token_usage.total();
    state.embed_calls += e.embed_calls;
    ++state.next_attempt;
}

void finish_generation(RunState& state, const RunConfig& config, const PerceptualDistance* perceptual) {
    if (static_cast<std::size_t>(state.next_attempt) != config.mutations_per_generation) {
        throw DomainError("finish_generation before all attempts of the generation were made");
    }
    ++state.generation;
    state.next_attempt = 0;
    MetricRecord r = compute_metrics(state.generation, state.pool, state.initial_prompt_embedding,
                                     state.cumulative_tokens, state.embed_calls);
    if (perceptual != nullptr) {
        protocol::PerceptualDistanceRequest req;
        for (const auto& m : state.pool.members()) req.artifact_refs.push_back(m.artifact_ref);
        r.perceptual_distance =
            with_retries(config.retry, [&] { return perceptual->measure(req); }).mean_distance;
    }
    state.metrics.push_back(r);
}

bool run_complete(const RunState& state, const RunConfig& config) noexcept {
    return static_cast<std::size_t>(state.generation) >= config.generations;
}

RunResult continue_run(RunState state, const RunConfig& config, const Providers& providers, RunObserver* observer,
                       RunControl control) {
    RunResult result;
    std::size_t made = 0;
    while (!run_complete(state, config)) {
        // A resumed run may stop right after the last attempt of a generation.
        if (static_cast<std::size_t>(state.next_attempt) == config.mutations_per_generation) {
            finish_generation(state, config, providers.perceptual.get());
            if (observer) observer->on_generation(state);
            continue;
        }
        if (control.stop_after_events && made >= *control.stop_after_events) {
            result.state = std::move(state);
            return result;
        }
        EventTiming timing;
        timing.generation = state.generation + 1;
        timing.attempt = state.next_attempt;
        timing.started_at = utc_now();
        const auto t0 = std::chrono::steady_clock::now();
        GenerationEvent event = evolve_step(state, config, providers);
        timing.duration_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        timing.finished_at = utc_now();
        if (observer) observer->on_event(event, timing);
        result.events.push_back(std::move(event));
        ++made;
    }
    result.state = std::move(state);
    result.complete = true;
    return result;
}

RunResult run(const RunConfig& config, const Providers& providers, RunObserver* observer, RunControl control) {
    RunState state = init_pool(config, providers);
    if (observer) observer->on_initialized(state);
    return continue_run(std::move(state), config, providers, observer, control);
}

}  // namespace wander
