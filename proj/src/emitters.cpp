#include "wander/emitters.hpp"

#include <algorithm>
#include <string>

#include "wander/errors.hpp"

namespace wander {

std::vector<Emitter> builtin_emitters() {
    return make_emitters({
        "Completely change the composition.",
        "Completely change the style.",
        "Completely change the mood.",
        "Completely change the lighting.",
        "Completely change the atmosphere.",
        "Completely change the artistic medium.",
        "Add additional elements, while retaining the primary focus.",
        "Simplify and remove unnecessary information. Be concise.",
        "Come up with an artist to make it similar to.",
        "Suggest a novel color scheme.",
    });
}

std::vector<Emitter> make_emitters(const std::vector<std::string>& directives) {
    if (directives.empty()) throw ConfigError("emitter list is empty");
    std::vector<Emitter> out;
    out.reserve(directives.size());
    int id = 1;
    for (const std::string& d : directives) {
        if (d.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw ConfigError("emitter " + std::to_string(id) + " has an empty directive");
        }
        out.push_back({id++, d});
    }
    return out;
}

const Emitter* find_emitter(std::span<const Emitter> registry, int id) noexcept {
    for (const Emitter& e : registry) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

const ArmStats& EmitterStats::arm(int emitter_id) const noexcept {
    static const ArmStats kUnpulled{};
    const auto it = arms_.find(emitter_id);
    return it == arms_.end() ? kUnpulled : it->second;
}

std::uint64_t EmitterStats::total_pulls() const noexcept {
    std::uint64_t total = 0;
    for (const auto& [id, a] : arms_) total += a.pulls;
    return total;
}

std::string_view to_string(StrategyKind kind) noexcept {
    switch (kind) {
        case StrategyKind::none: return "none";
        case StrategyKind::fixed: return "fixed";
        case StrategyKind::random: return "random";
        case StrategyKind::bandit: return "bandit";
    }
    return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
    if (name == "none") return StrategyKind::none;
    if (name == "fixed") return StrategyKind::fixed;
    if (name == "random") return StrategyKind::random;
    if (name == "bandit") return StrategyKind::bandit;
    throw ConfigError("unknown selection strategy '" + std::string(name) + "'");
}

void validate_strategy(const SelectionStrategy& strategy, std::span<const Emitter> registry) {
    if (registry.empty()) throw ConfigError("emitter registry is empty");
    if (strategy.kind == StrategyKind::fixed && find_emitter(registry, strategy.fixed_id) == nullptr) {
        throw ConfigError("fixed emitter id " + std::to_string(strategy.fixed_id) +
                          " is not in the registry");
    }
    if (strategy.kind == StrategyKind::bandit && !(strategy.exploration > 0.0)) {
        throw ConfigError("bandit exploration constant must be positive");
    }
}

std::optional<Emitter> select_emitter(const SelectionStrategy& strategy,
                                      std::span<const Emitter> registry,
                                      const EmitterStats& stats, Rng& rng) {
    validate_strategy(strategy, registry);
    switch (strategy.kind) {
        case StrategyKind::none:
            return std::nullopt;
        case StrategyKind::fixed:
            return *find_emitter(registry, strategy.fixed_id);
        case StrategyKind::random:
            return registry[rng.uniform_index(registry.size())];
        case StrategyKind::bandit:
            break;
    }

    const Emitter* unpulled = nullptr;
    for (const Emitter& e : registry) {
        if (stats.arm(e.id).pulls == 0 && (unpulled == nullptr || e.id < unpulled->id)) {
            unpulled = &e;
        }
    }
    if (unpulled != nullptr) return *unpulled;

    const double log_total = std::log(static_cast<double>(stats.total_pulls()));
    const Emitter* best = nullptr;
    double best_value = 0.0;
    for (const Emitter& e : registry) {
        const ArmStats& a = stats.arm(e.id);
        const double value =
            a.mean_reward() + strategy.exploration * std::sqrt(log_total / static_cast<double>(a.pulls));
        if (best == nullptr || value > best_value || (value == best_value && e.id < best->id)) {
            best = &e;
            best_value = value;
        }
    }
    return *best;
}

std::string_view to_string(RewardKind kind) noexcept {
    return kind == RewardKind::acceptance ? "acceptance" : "novelty_margin";
}

RewardKind parse_reward_kind(std::string_view name) {
    if (name == "acceptance") return RewardKind::acceptance;
    if (name == "novelty_margin") return RewardKind::novelty_margin;
    throw ConfigError("unknown reward kind '" + std::string(name) + "'");
}

void record_outcome(EmitterStats& stats, int emitter_id, const InsertOutcome& outcome,
                    RewardKind reward) {
    ArmStats& a = stats.arm_mut(emitter_id);
    a.pulls += 1;
    if (!outcome.accepted()) return;
    a.successes += 1;
    if (reward == RewardKind::acceptance) {
        a.cumulative_reward += 1.0;
    } else if (outcome.candidate_score && outcome.min_score) {
        a.cumulative_reward += std::max(0.0, *outcome.candidate_score - *outcome.min_score);
    }
}

}  // namespace wander
