#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wander/core/pool.hpp"
#include "wander/emitters.hpp"
#include "wander/providers/http.hpp"
#include "wander/providers/protocol.hpp"
#include "wander/providers/provider.hpp"
#include "wander/providers/synthetic.hpp"

namespace wander {

struct SyntheticProviderConfig {
    SyntheticWorldConfig world;
    /// World seed; the run seed when absent, so different run seeds see different worlds.
    std::optional<std::uint64_t> world_seed;

    friend bool operator==(const SyntheticProviderConfig&, const SyntheticProviderConfig&) = default;
};

using ProviderConfig = std::variant<SyntheticProviderConfig, HttpEndpoints>;

struct MutatorSettings {
    std::string model_id = "gpt-4o-mini";
    double temperature = 1.0;
    std::uint32_t max_output_length = 256;

    friend bool operator==(const MutatorSettings&, const MutatorSettings&) = default;
};

struct GeneratorSettings {
    std::string model_id = "flux-dev";
    std::string image_size = "512x512";

    friend bool operator==(const GeneratorSettings&, const GeneratorSettings&) = default;
};

struct QdaifSettings {
    std::size_t steps = 500;
    std::vector<protocol::AxisSpec> axes;

    friend bool operator==(const QdaifSettings&, const QdaifSettings&) = default;
};

/// Two 5-bin axes, "detail" and "image style".
std::vector<protocol::AxisSpec> default_axes();

struct RunConfig {
    std::string initial_prompt = "A photo of a cat.";
    std::size_t pool_capacity = 10;
    std::size_t initial_count = 10;
    std::size_t generations = 10;
    std::size_t mutations_per_generation = 10;
    std::size_t k = 3;
    double crossover_probability = 0.5;
    SelectionStrategy strategy = SelectionStrategy::bandit();
    RewardKind reward = RewardKind::acceptance;
    std::uint64_t seed = 0;
    std::vector<Emitter> emitters = builtin_emitters();
    InsertOptions insert;
    MutatorSettings mutator;
    GeneratorSettings generator;
    RetryPolicy retry;
    ProviderConfig provider = SyntheticProviderConfig{};
    QdaifSettings qdaif{500, default_axes()};
};

bool operator==(const RetryPolicy& a, const RetryPolicy& b);
bool operator==(const InsertOptions& a, const InsertOptions& b);
bool operator==(const RunConfig& a, const RunConfig& b);

/// Throws ConfigError naming the first broken invariant (1 <= n <= N, N >= 2, T, M, k >= 1,
/// probability in [0, 1], strategy valid against the registry, axes with >= 2 unique bins).
void validate(const RunConfig& config);

/// Missing fields take their defaults; wrong types and unknown enum names throw
/// ConfigError. The result is validated.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Full serialization; parse_run_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& config);

/// Instantiates the configured providers. Synthetic providers take the run seed as their
/// world seed unless one is given.
Providers make_providers(const RunConfig& config);

}  // namespace wander
