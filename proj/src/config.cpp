#include "wander/config.hpp"

#include <fstream>
#include <set>

#include "json_fields.hpp"
#include "wander/errors.hpp"

namespace wander {
namespace {

using nlohmann::json;
constexpr const char* kCtx = "config";

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return detail::field_or<ConfigError, T>(j, key, std::move(fallback), kCtx);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
    return detail::optional_field<ConfigError, T>(j, key, kCtx);
}

const json& object_or_empty(const json& j, const char* key) {
    static const json empty = json::object();
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return empty;
    if (!it->is_object()) throw ConfigError(std::string("config: '") + key + "' must be an object");
    return *it;
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
        throw ConfigError(std::string("config: '") + key + "' must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

SelectionStrategy parse_strategy(const json& j) {
    if (j.is_string()) {
        const StrategyKind kind = parse_strategy_kind(j.get<std::string>());
        if (kind == StrategyKind::fixed) throw ConfigError("config: strategy 'fixed' needs an emitter id");
        return {kind, 0, std::numbers::sqrt2};
    }
    if (!j.is_object()) throw ConfigError("config: 'strategy' must be a string or an object");
    SelectionStrategy s;
    s.kind = parse_strategy_kind(detail::required<ConfigError, std::string>(j, "kind", "config.strategy"));
    s.fixed_id = get_or<int>(j, "emitter", 0);
    s.exploration = get_or<double>(j, "exploration", std::numbers::sqrt2);
    if (s.kind == StrategyKind::fixed && !j.contains("emitter")) {
        throw ConfigError("config: strategy 'fixed' needs an emitter id");
    }
    return s;
}

json strategy_json(const SelectionStrategy& s) {
    json j{{"kind", std::string(to_string(s.kind))}};
    if (s.kind == StrategyKind::fixed) j["emitter"] = s.fixed_id;
    if (s.kind == StrategyKind::bandit) j["exploration"] = s.exploration;
    return j;
}

SyntheticProviderConfig parse_synthetic(const json& j) {
    SyntheticProviderConfig c;
    SyntheticWorldConfig& w = c.world;
    w.dimension = get_count(j, "dimension", w.dimension);
    w.step_size = get_or<double>(j, "step_size", w.step_size);
    w.generation_noise = get_or<double>(j, "generation_noise", w.generation_noise);
    w.jitter = get_or<double>(j, "jitter", w.jitter);
    w.emitter_count = get_count(j, "emitter_count", w.emitter_count);
    w.rater_range = get_or<double>(j, "rater_range", w.rater_range);
    c.world_seed = get_opt<std::uint64_t>(j, "seed");
    const json& overrides = object_or_empty(j, "emitter_overrides");
    for (const auto& [key, value] : overrides.items()) {
        int id = 0;
        try {
            id = std::stoi(key);
        } catch (const std::exception&) {
            throw ConfigError("config: emitter_overrides key '" + key + "' is not an emitter id");
        }
        EmitterMove m;
        m.step = get_or<double>(value, "step", w.step_size);
        m.jitter = get_or<double>(value, "jitter", w.jitter);
        w.emitter_overrides[id] = m;
    }
    return c;
}

json synthetic_json(const SyntheticProviderConfig& c) {
    const SyntheticWorldConfig& w = c.world;
    json j{{"kind", "synthetic"},
           {"dimension", w.dimension},
           {"step_size", w.step_size},
           {"generation_noise", w.generation_noise},
           {"jitter", w.jitter},
           {"emitter_count", w.emitter_count},
           {"rater_range", w.rater_range}};
    if (c.world_seed) j["seed"] = *c.world_seed;
    if (!w.emitter_overrides.empty()) {
        json o = json::object();
        for (const auto& [id, m] : w.emitter_overrides) o[std::to_string(id)] = {{"step", m.step}, {"jitter", m.jitter}};
        j["emitter_overrides"] = o;
    }
    return j;
}

HttpEndpoints parse_http(const json& j) {
    HttpEndpoints e;
    e.mutate_root = get_or<std::string>(j, "mutate_root", "");
    e.generate_root = get_or<std::string>(j, "generate_root", "");
    e.embed_root = get_or<std::string>(j, "embed_root", "");
    e.rate_root = get_or<std::string>(j, "rate_root", "");
    e.perceptual_root = get_or<std::string>(j, "perceptual_root", "");
    // A single "root" fills every capability that was not given its own.
    if (const auto root = get_opt<std::string>(j, "root")) {
        for (std::string* r : {&e.mutate_root, &e.generate_root, &e.embed_root}) {
            if (r->empty()) *r = *root;
        }
    }
    e.timeout = std::chrono::seconds(get_or<std::int64_t>(j, "timeout_s", e.timeout.count()));
    e.token_env = get_or<std::string>(j, "token_env", e.token_env);
    if (e.mutate_root.empty() || e.generate_root.empty() || e.embed_root.empty()) {
        throw ConfigError("config: http provider needs mutate_root, generate_root and embed_root (or root)");
    }
    return e;
}

json http_json(const HttpEndpoints& e) {
    return {{"kind", "http"},
            {"mutate_root", e.mutate_root},
            {"generate_root", e.generate_root},
            {"embed_root", e.embed_root},
            {"rate_root", e.rate_root},
            {"perceptual_root", e.perceptual_root},
            {"timeout_s", e.timeout.count()},
            {"token_env", e.token_env}};
}

std::vector<protocol::AxisSpec> parse_axes(const json& j) {
    if (!j.is_array()) throw ConfigError("config: qdaif.axes must be an array");
    std::vector<protocol::AxisSpec> axes;
    for (const auto& a : j) {
        protocol::AxisSpec spec;
        spec.name = detail::required<ConfigError, std::string>(a, "name", "config.qdaif.axes");
        spec.bins = detail::required<ConfigError, std::vector<std::string>>(a, "bins", "config.qdaif.axes");
        axes.push_back(std::move(spec));
    }
    return axes;
}

}  // namespace

std::vector<protocol::AxisSpec> default_axes() {
    return {{"detail", {"minimal", "sparse", "moderate", "detailed", "intricate"}},
            {"image style", {"photorealistic", "painterly", "illustrated", "abstract", "surreal"}}};
}

bool operator==(const RetryPolicy& a, const RetryPolicy& b) {
    return a.attempts == b.attempts && a.initial_backoff == b.initial_backoff && a.multiplier == b.multiplier;
}

bool operator==(const InsertOptions& a, const InsertOptions& b) {
    return a.leave_one_in == b.leave_one_in && a.non_regression_guard == b.non_regression_guard;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.initial_prompt == b.initial_prompt && a.pool_capacity == b.pool_capacity &&
           a.initial_count == b.initial_count && a.generations == b.generations &&
           a.mutations_per_generation == b.mutations_per_generation && a.k == b.k &&
           a.crossover_probability == b.crossover_probability && a.strategy == b.strategy &&
           a.reward == b.reward && a.seed == b.seed && a.emitters == b.emitters && a.insert == b.insert &&
           a.mutator == b.mutator && a.generator == b.generator && a.retry == b.retry &&
           a.provider == b.provider && a.qdaif == b.qdaif;
}

void validate(const RunConfig& c) {
    if (c.initial_prompt.empty()) throw ConfigError("initial_prompt must not be empty");
    if (c.pool_capacity < 2) throw ConfigError("pool_capacity must be at least 2");
    if (c.initial_count < 1 || c.initial_count > c.pool_capacity) {
        throw ConfigError("initial_count must be in [1, pool_capacity]");
    }
    if (c.generations < 1) throw ConfigError("generations must be at least 1");
    if (c.mutations_per_generation < 1) throw ConfigError("mutations_per_generation must be at least 1");
    if (c.k < 1) throw ConfigError("k must be at least 1");
    if (!(c.crossover_probability >= 0.0 && c.crossover_probability <= 1.0)) {
        throw ConfigError("crossover_probability must be in [0, 1]");
    }
    if (c.emitters.empty()) throw ConfigError("the emitter registry must not be empty");
    validate_strategy(c.strategy, c.emitters);
    if (c.retry.attempts < 1) throw ConfigError("retry.attempts must be at least 1");
    if (c.retry.initial_backoff.count() < 0 || c.retry.multiplier < 1.0) {
        throw ConfigError("retry backoff must be non-negative with a multiplier >= 1");
    }
    if (c.mutator.max_output_length == 0) throw ConfigError("mutator.max_output_length must be positive");
    if (const auto* s = std::get_if<SyntheticProviderConfig>(&c.provider)) validate(s->world);
    if (c.qdaif.axes.size() != 2) throw ConfigError("qdaif needs exactly two axes");
    for (const auto& axis : c.qdaif.axes) {
        if (axis.bins.size() < 2) throw ConfigError("qdaif axis '" + axis.name + "' needs at least two bins");
        if (std::set<std::string>(axis.bins.begin(), axis.bins.end()).size() != axis.bins.size()) {
            throw ConfigError("qdaif axis '" + axis.name + "' has duplicate bin labels");
        }
    }
    if (c.qdaif.steps < 1) throw ConfigError("qdaif.steps must be at least 1");
}

RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    RunConfig c;
    c.initial_prompt = get_or<std::string>(j, "initial_prompt", c.initial_prompt);
    c.pool_capacity = get_count(j, "pool_capacity", c.pool_capacity);
    c.initial_count = get_count(j, "initial_count", c.initial_count);
    c.generations = get_count(j, "generations", c.generations);
    c.mutations_per_generation = get_count(j, "mutations_per_generation", c.mutations_per_generation);
    c.k = get_count(j, "k", c.k);
    c.crossover_probability = get_or<double>(j, "crossover_probability", c.crossover_probability);
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy"));
    if (const auto r = get_opt<std::string>(j, "reward")) c.reward = parse_reward_kind(*r);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (const auto e = get_opt<std::vector<std::string>>(j, "emitters")) c.emitters = make_emitters(*e);
    c.insert.leave_one_in = get_or<bool>(j, "leave_one_in", false);
    c.insert.non_regression_guard = !get_or<bool>(j, "literal_replacement", false);

    const json& mutator = object_or_empty(j, "mutator");
    c.mutator.model_id = get_or<std::string>(mutator, "model_id", c.mutator.model_id);
    c.mutator.temperature = get_or<double>(mutator, "temperature", c.mutator.temperature);
    c.mutator.max_output_length = get_or<std::uint32_t>(mutator, "max_output_length", c.mutator.max_output_length);

    const json& generator = object_or_empty(j, "generator");
    c.generator.model_id = get_or<std::string>(generator, "model_id", c.generator.model_id);
    c.generator.image_size = get_or<std::string>(generator, "image_size", c.generator.image_size);

    const json& retry = object_or_empty(j, "retry");
    c.retry.attempts = get_or<int>(retry, "attempts", c.retry.attempts);
    c.retry.initial_backoff =
        std::chrono::milliseconds(get_or<std::int64_t>(retry, "initial_backoff_ms", c.retry.initial_backoff.count()));
    c.retry.multiplier = get_or<double>(retry, "multiplier", c.retry.multiplier);

    const json& provider = object_or_empty(j, "provider");
    const std::string kind = get_or<std::string>(provider, "kind", "synthetic");
    if (kind == "synthetic") {
        c.provider = parse_synthetic(provider);
    } else if (kind == "http") {
        c.provider = parse_http(provider);
    } else {
        throw ConfigError("config: unknown provider kind '" + kind + "'");
    }

    const json& qdaif = object_or_empty(j, "qdaif");
    c.qdaif.steps = get_count(qdaif, "steps", c.qdaif.steps);
    if (qdaif.contains("axes")) c.qdaif.axes = parse_axes(qdaif.at("axes"));

    validate(c);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

json to_json(const RunConfig& c) {
    json emitters = json::array();
    for (const auto& e : c.emitters) emitters.push_back(e.directive);
    json axes = json::array();
    for (const auto& a : c.qdaif.axes) axes.push_back({{"name", a.name}, {"bins", a.bins}});
    return {
        {"initial_prompt", c.initial_prompt},
        {"pool_capacity", c.pool_capacity},
        {"initial_count", c.initial_count},
        {"generations", c.generations},
        {"mutations_per_generation", c.mutations_per_generation},
        {"k", c.k},
        {"crossover_probability", c.crossover_probability},
        {"strategy", strategy_json(c.strategy)},
        {"reward", std::string(to_string(c.reward))},
        {"seed", c.seed},
        {"emitters", emitters},
        {"leave_one_in", c.insert.leave_one_in},
        {"literal_replacement", !c.insert.non_regression_guard},
        {"mutator",
         {{"model_id", c.mutator.model_id},
          {"temperature", c.mutator.temperature},
          {"max_output_length", c.mutator.max_output_length}}},
        {"generator", {{"model_id", c.generator.model_id}, {"image_size", c.generator.image_size}}},
        {"retry",
         {{"attempts", c.retry.attempts},
          {"initial_backoff_ms", c.retry.initial_backoff.count()},
          {"multiplier", c.retry.multiplier}}},
        {"provider", std::visit(
                         [](const auto& p) -> json {
                             if constexpr (std::is_same_v<std::decay_t<decltype(p)>, HttpEndpoints>) {
                                 return http_json(p);
                             } else {
                                 return synthetic_json(p);
                             }
                         },
                         c.provider)},
        {"qdaif", {{"steps", c.qdaif.steps}, {"axes", axes}}},
    };
}

Providers make_providers(const RunConfig& config) {
    if (const auto* s = std::get_if<SyntheticProviderConfig>(&config.provider)) {
        SyntheticWorldConfig world = s->world;
        world.seed = s->world_seed.value_or(config.seed);
        return make_synthetic_providers(world);
    }
    return make_http_providers(std::get<HttpEndpoints>(config.provider));
}

}  // namespace wander
