#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wander/core/pool.hpp"
#include "wander/rng.hpp"

namespace wander {

/// A named mutation directive inserted verbatim into the mutator instruction.
struct Emitter {
    int id = 0;
    std::string directive;

    friend bool operator==(const Emitter&, const Emitter&) = default;
};

/// The ten default directives, ids 1-10.
std::vector<Emitter> builtin_emitters();

/// Assigns ids 1..n in list order. Throws ConfigError on an empty list or directive.
std::vector<Emitter> make_emitters(const std::vector<std::string>& directives);

const Emitter* find_emitter(std::span<const Emitter> registry, int id) noexcept;

struct ArmStats {
    std::uint64_t pulls = 0;
    std::uint64_t successes = 0;
    double cumulative_reward = 0.0;

    double mean_reward() const noexcept {
        return pulls == 0 ? 0.0 : cumulative_reward / static_cast<double>(pulls);
    }
    friend bool operator==(const ArmStats&, const ArmStats&) = default;
};

/// Per-emitter bandit statistics, keyed by emitter id. Arms never pulled may be absent.
class EmitterStats {
public:
    const ArmStats& arm(int emitter_id) const noexcept;
    ArmStats& arm_mut(int emitter_id) { return arms_[emitter_id]; }
    std::uint64_t total_pulls() const noexcept;
    const std::map<int, ArmStats>& arms() const noexcept { return arms_; }

    friend bool operator==(const EmitterStats&, const EmitterStats&) = default;

private:
    std::map<int, ArmStats> arms_;
};

enum class StrategyKind { none, fixed, random, bandit };

struct SelectionStrategy {
    StrategyKind kind = StrategyKind::bandit;
    int fixed_id = 0;
    double exploration = std::numbers::sqrt2;

    static SelectionStrategy none() { return {StrategyKind::none, 0, std::numbers::sqrt2}; }
    static SelectionStrategy fixed(int id) { return {StrategyKind::fixed, id, std::numbers::sqrt2}; }
    static SelectionStrategy random() { return {StrategyKind::random, 0, std::numbers::sqrt2}; }
    static SelectionStrategy bandit(double c = std::numbers::sqrt2) {
        return {StrategyKind::bandit, 0, c};
    }

    friend bool operator==(const SelectionStrategy&, const SelectionStrategy&) = default;
};

std::string_view to_string(StrategyKind kind) noexcept;
/// Accepts "none", "fixed", "random", "bandit". Throws ConfigError otherwise.
StrategyKind parse_strategy_kind(std::string_view name);

/// Throws ConfigError for a Fixed id missing from the registry or a non-positive
/// exploration constant.
void validate_strategy(const SelectionStrategy& strategy, std::span<const Emitter> registry);

/// None: no emitter. Fixed: always that emitter. Random: uniform over the registry.
/// Bandit: UCB1 -- each never-pulled arm once (lowest id first), then
/// argmax mean + c*sqrt(ln(total)/pulls) with ties to the lowest id.
/// Only Random consumes randomness.
std::optional<Emitter> select_emitter(const SelectionStrategy& strategy,
                                      std::span<const Emitter> registry,
                                      const EmitterStats& stats, Rng& rng);

enum class RewardKind {
    /// 1 when the candidate entered the pool, else 0.
    acceptance,
    /// max(0, candidate score - pool minimum) when it entered, else 0.
    novelty_margin,
};

std::string_view to_string(RewardKind kind) noexcept;
RewardKind parse_reward_kind(std::string_view name);

/// Credits one pull of `emitter_id` with the insertion result. Never called for crossover.
void record_outcome(EmitterStats& stats, int emitter_id, const InsertOutcome& outcome,
                    RewardKind reward = RewardKind::acceptance);

}  // namespace wander
