#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wander/config.hpp"
#include "wander/core/pool.hpp"
#include "wander/emitters.hpp"
#include "wander/events.hpp"
#include "wander/metrics.hpp"
#include "wander/providers/provider.hpp"

namespace wander {

/// Instruction templates. Placeholders are {prompt}, {directive}, {prompt_a}, {prompt_b}.
/// They are written into the run manifest verbatim.
extern const std::string_view kMutationTemplate;
extern const std::string_view kUndirectedMutationTemplate;
extern const std::string_view kCrossoverTemplate;

/// Substitutes {name} placeholders in one pass; substituted text is never rescanned.
/// Throws std::invalid_argument on a placeholder with no value.
std::string render_template(std::string_view tmpl,
                            std::initializer_list<std::pair<std::string_view, std::string_view>> values);

/// Throws DomainError on an empty parent prompt.
std::string render_mutation_instruction(std::string_view parent_prompt, const Emitter* emitter);
std::string render_crossover_instruction(std::string_view prompt_a, std::string_view prompt_b);

/// Trims whitespace and any surrounding quote pairs LLMs like to add.
std::string clean_mutator_output(std::string_view text);

/// Everything the loop carries between steps.
struct RunState {
    Pool pool{2, 1};
    EmitterStats stats;
    EmbeddingVector initial_prompt_embedding;
    /// Last fully completed generation (0 = just initialized).
    int generation = 0;
    /// Attempts already made in generation + 1.
    int next_attempt = 0;
    std::uint64_t cumulative_tokens = 0;
    std::uint64_t embed_calls = 0;
    /// Records for generations 0..generation.
    std::vector<MetricRecord> metrics;

    friend bool operator==(const RunState&, const RunState&) = default;
};

/// Receives progress as it happens; the run store implements it.
class RunObserver {
public:
    virtual ~RunObserver() = default;
    virtual void on_initialized(const RunState& /*state*/) {}
    virtual void on_event(const GenerationEvent& /*event*/, const EventTiming& /*timing*/) {}
    /// After the generation's metric record has been appended.
    virtual void on_generation(const RunState& /*state*/) {}
};

struct RunControl {
    /// Stop after this many events in this call, leaving the run resumable.
    std::optional<std::size_t> stop_after_events;
};

struct RunResult {
    RunState state;
    std::vector<GenerationEvent> events;
    bool complete = false;
};

std::string initial_id(std::size_t index);
std::string child_id(int generation, int attempt);

/// n copies of the initial prompt, each with its own generated artifact. Provider
/// failures that survive the retry policy propagate.
RunState init_pool(const RunConfig& config, const Providers& providers);

/// One attempt of generation `state.generation + 1`: pick crossover or mutation, call
/// mutator, generator and embedder, update the pool and bandit statistics. Exhausted
/// retryable transport failures and empty or zero outputs become degraded Rejected
/// events; fatal provider errors propagate.
GenerationEvent evolve_step(RunState& state, const RunConfig& config, const Providers& providers);

/// Applies a logged event without calling providers. Throws RunStoreError when the
/// event is out of sequence or the replayed pool update disagrees with the log.
void apply_event(RunState& state, const RunConfig& config, const GenerationEvent& event);

/// Closes generation state.generation + 1 once all its attempts are in: computes its
/// metric record and advances the counters. `perceptual` may be null.
void finish_generation(RunState& state, const RunConfig& config, const PerceptualDistance* perceptual);

bool run_complete(const RunState& state, const RunConfig& config) noexcept;

RunResult run(const RunConfig& config, const Providers& providers, RunObserver* observer = nullptr,
              RunControl control = {});

/// Continues from `state` (freshly initialized or reloaded).
RunResult continue_run(RunState state, const RunConfig& config, const Providers& providers,
                       RunObserver* observer = nullptr, RunControl control = {});

}  // namespace wander
