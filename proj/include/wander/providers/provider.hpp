#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wander/errors.hpp"
#include "wander/providers/protocol.hpp"

namespace wander {

/// What the engine knows about a mutation beyond the instruction text. HTTP adapters
/// ignore it; the synthetic world uses it in place of language understanding.
struct MutationContext {
    enum class Kind { mutation, crossover, target_cell };

    Kind kind = Kind::mutation;
    std::vector<std::string> parent_prompts;
    std::optional<int> emitter_id;
    /// (axis1 bin, axis2 bin) and the bin counts, for cell-directed mutation.
    std::optional<std::pair<int, int>> target_cell;
    int axis1_bins = 0;
    int axis2_bins = 0;
    /// Per-call stream seed derived from (run seed, generation, attempt).
    std::uint64_t seed = 0;
};

// All provider calls are pure request -> response and must be safe to issue concurrently.

class Mutator {
public:
    virtual ~Mutator() = default;
    virtual protocol::MutateResponse mutate(const protocol::MutateRequest& request,
                                            const MutationContext& context) const = 0;
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual protocol::GenerateResponse generate(const protocol::GenerateRequest& request) const = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual protocol::EmbedResponse embed(const protocol::EmbedRequest& request) const = 0;
};

class Rater {
public:
    virtual ~Rater() = default;
    virtual protocol::RateResponse rate(const protocol::RateRequest& request) const = 0;
};

/// Optional external perceptual metric (LPIPS-style) over a set of artifacts.
class PerceptualDistance {
public:
    virtual ~PerceptualDistance() = default;
    virtual protocol::PerceptualDistanceResponse measure(
        const protocol::PerceptualDistanceRequest& request) const = 0;
};

struct Providers {
    std::shared_ptr<const Mutator> mutator;
    std::shared_ptr<const Generator> generator;
    std::shared_ptr<const Embedder> embedder;
    /// Only needed by the QDAIF baseline.
    std::shared_ptr<const Rater> rater;
    std::shared_ptr<const PerceptualDistance> perceptual;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
};

/// Calls `fn` up to policy.attempts times, sleeping with exponential backoff between
/// tries. Only retryable TransportErrors are retried; everything else propagates at once.
template <class Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError& e) {
            if (!e.retryable() || attempt >= policy.attempts) throw;
        }
        if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
}

}  // namespace wander
