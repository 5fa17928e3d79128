#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "wander/config.hpp"
#include "wander/emitters.hpp"
#include "wander/events.hpp"
#include "wander/metrics.hpp"

namespace wander {

std::vector<TokenCall> token_calls(const std::vector<GenerationEvent>& events);

struct AblationRun {
    StrategyKind strategy = StrategyKind::none;
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    /// Emitter id used by the fixed strategy; 0 otherwise.
    int fixed_id = 0;
    double final_vendi = 0.0;
    double final_mean_pairwise_distance = 0.0;
    double normalized_vendi = 0.0;
};

struct AblationRow {
    StrategyKind strategy = StrategyKind::none;
    double mean_vendi = 0.0;
    double stddev_vendi = 0.0;
    double mean_normalized = 0.0;
    double mean_pairwise_distance = 0.0;
};

struct AblationResult {
    std::vector<AblationRun> runs;
    std::vector<AblationRow> rows;
};

/// `runs` seeds per strategy (base seed + run index). The fixed strategy uses emitter
/// 1 + (run index mod registry size). Normalized Vendi is min-max over every run of
/// every strategy.
AblationResult run_ablation(const RunConfig& base, const std::vector<StrategyKind>& strategies, std::size_t runs);

std::string ablation_table(const AblationResult& result);
std::string ablation_csv(const AblationResult& result);

/// Comma-separated list of strategy names. Throws ConfigError on unknown names.
std::vector<StrategyKind> parse_strategy_list(const std::string& text);

}  // namespace wander
