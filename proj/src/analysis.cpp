#include "wander/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "wander/errors.hpp"
#include "wander/evolve.hpp"

namespace wander {
namespace {

std::string fmt(const char* spec, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::vector<TokenCall> token_calls(const std::vector<GenerationEvent>& events) {
    std::vector<TokenCall> calls;
    calls.reserve(events.size());
    for (const auto& e : events) {
        calls.push_back({std::string(to_string(e.kind)), e.token_usage.prompt_tokens, e.token_usage.completion_tokens,
                         e.token_usage.estimated});
    }
    return calls;
}

AblationResult run_ablation(const RunConfig& base, const std::vector<StrategyKind>& strategies, std::size_t runs) {
    if (runs == 0) throw ConfigError("ablation needs at least one run per strategy");
    if (strategies.empty()) throw ConfigError("ablation needs at least one strategy");
    AblationResult result;
    for (StrategyKind kind : strategies) {
        for (std::size_t r = 0; r < runs; ++r) {
            RunConfig config = base;
            config.seed = base.seed + r;
            AblationRun entry;
            entry.strategy = kind;
            entry.run_index = r;
            entry.seed = config.seed;
            switch (kind) {
                case StrategyKind::none: config.strategy = SelectionStrategy::none(); break;
                case StrategyKind::random: config.strategy = SelectionStrategy::random(); break;
                case StrategyKind::bandit:
                    config.strategy = SelectionStrategy::bandit(base.strategy.kind == StrategyKind::bandit
                                                                     ? base.strategy.exploration
                                                                     : std::numbers::sqrt2);
                    break;
                case StrategyKind::fixed:
                    entry.fixed_id = config.emitters[r % config.emitters.size()].id;
                    config.strategy = SelectionStrategy::fixed(entry.fixed_id);
                    break;
            }
            const RunResult out = run(config, make_providers(config));
            entry.final_vendi = out.state.metrics.back().vendi;
            entry.final_mean_pairwise_distance = out.state.metrics.back().mean_pairwise_distance;
            result.runs.push_back(entry);
        }
    }

    double lo = result.runs.front().final_vendi;
    double hi = lo;
    for (const auto& r : result.runs) {
        lo = std::min(lo, r.final_vendi);
        hi = std::max(hi, r.final_vendi);
    }
    for (auto& r : result.runs) r.normalized_vendi = hi > lo ? (r.final_vendi - lo) / (hi - lo) : 0.0;

    for (StrategyKind kind : strategies) {
        AblationRow row;
        row.strategy = kind;
        std::vector<double> v;
        double norm = 0.0;
        double dist = 0.0;
        for (const auto& r : result.runs) {
            if (r.strategy != kind) continue;
            v.push_back(r.final_vendi);
            norm += r.normalized_vendi;
            dist += r.final_mean_pairwise_distance;
        }
        const auto n = static_cast<double>(v.size());
        double sum = 0.0;
        for (double x : v) sum += x;
        row.mean_vendi = sum / n;
        double ss = 0.0;
        for (double x : v) ss += (x - row.mean_vendi) * (x - row.mean_vendi);
        row.stddev_vendi = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        row.mean_normalized = norm / n;
        row.mean_pairwise_distance = dist / n;
        result.rows.push_back(row);
    }
    return result;
}

std::string ablation_table(const AblationResult& result) {
    std::ostringstream os;
    os << "strategy   vendi (mean +- sd)   normalized   mean distance\n";
    for (const auto& row : result.rows) {
        std::string name(to_string(row.strategy));
        name.resize(10, ' ');
        os << name << ' ' << fmt("%7.4f", row.mean_vendi) << " +- " << fmt("%6.4f", row.stddev_vendi) << "   "
           << fmt("%10.4f", row.mean_normalized) << "   " << fmt("%13.4f", row.mean_pairwise_distance) << '\n';
    }
    return os.str();
}

std::string ablation_csv(const AblationResult& result) {
    std::ostringstream os;
    os << "strategy,run,seed,fixed_emitter,final_vendi,normalized_vendi,final_mean_pairwise_distance\n";
    for (const auto& r : result.runs) {
        os << to_string(r.strategy) << ',' << r.run_index << ',' << r.seed << ',' << r.fixed_id << ','
           << fmt("%.17g", r.final_vendi) << ',' << fmt("%.17g", r.normalized_vendi) << ','
           << fmt("%.17g", r.final_mean_pairwise_distance) << '\n';
    }
    return os.str();
}

std::vector<StrategyKind> parse_strategy_list(const std::string& text) {
    std::vector<StrategyKind> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(parse_strategy_kind(item));
    }
    if (out.empty()) throw ConfigError("no strategies given");
    return out;
}

}  // namespace wander
