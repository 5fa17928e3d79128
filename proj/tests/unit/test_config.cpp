#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "oracles.hpp"
#include "wander/config.hpp"
#include "wander/errors.hpp"

using namespace wander;
using nlohmann::json;

TEST_CASE("defaults") {
    const RunConfig c = parse_run_config(json::object());
    CHECK(c.initial_prompt == "A photo of a cat.");
    CHECK(c.pool_capacity == 10);
    CHECK(c.initial_count == 10);
    CHECK(c.generations == 10);
    CHECK(c.mutations_per_generation == 10);
    CHECK(c.k == 3);
    CHECK(c.crossover_probability == 0.5);
    CHECK(c.strategy.kind == StrategyKind::bandit);
    CHECK(c.strategy.exploration == doctest::Approx(std::sqrt(2.0)));
    CHECK(c.reward == RewardKind::acceptance);
    CHECK(c.emitters == builtin_emitters());
    CHECK_FALSE(c.insert.leave_one_in);
    CHECK(c.insert.non_regression_guard);
    CHECK(c.retry.attempts == 3);
    CHECK(std::holds_alternative<SyntheticProviderConfig>(c.provider));
    const auto& w = std::get<SyntheticProviderConfig>(c.provider).world;
    CHECK(w.dimension == 32);
    CHECK(w.step_size == 0.8);
    CHECK(w.generation_noise == 0.05);
    CHECK(c.qdaif.steps == 500);
    REQUIRE(c.qdaif.axes.size() == 2);
    CHECK(c.qdaif.axes[0].name == "detail");
    CHECK(c.qdaif.axes[1].name == "image style");
    CHECK(c.qdaif.axes[0].bins.size() == 5);
}

TEST_CASE("every field round-trips") {
    const json in = {
        {"initial_prompt", "Ein Kater über Zürich 🐈"},
        {"pool_capacity", 12},
        {"initial_count", 4},
        {"generations", 3},
        {"mutations_per_generation", 5},
        {"k", 2},
        {"crossover_probability", 0.25},
        {"strategy", {{"kind", "fixed"}, {"emitter", 2}}},
        {"reward", "novelty_margin"},
        {"seed", 18446744073709551615ULL},
        {"emitters", {"Make it rain.", "Make it night."}},
        {"leave_one_in", true},
        {"literal_replacement", true},
        {"mutator", {{"model_id", "m1"}, {"temperature", 0.5}, {"max_output_length", 99}}},
        {"generator", {{"model_id", "g1"}, {"image_size", "256x256"}}},
        {"retry", {{"attempts", 5}, {"initial_backoff_ms", 10}, {"multiplier", 3.0}}},
        {"provider",
         {{"kind", "synthetic"},
          {"dimension", 16},
          {"step_size", 0.5},
          {"generation_noise", 0.0},
          {"jitter", 0.1},
          {"emitter_count", 2},
          {"rater_range", 0.5},
          {"seed", 7},
          {"emitter_overrides", {{"2", {{"step", 0.0}, {"jitter", 0.0}}}}}}},
        {"qdaif", {{"steps", 40}, {"axes", {{{"name", "x"}, {"bins", {"a", "b"}}}, {{"name", "y"}, {"bins", {"c", "d", "e"}}}}}}},
    };
    const RunConfig c = parse_run_config(in);
    CHECK(c.strategy == SelectionStrategy::fixed(2));
    CHECK(c.emitters.size() == 2);
    CHECK(c.insert.leave_one_in);
    CHECK_FALSE(c.insert.non_regression_guard);
    const auto& sp = std::get<SyntheticProviderConfig>(c.provider);
    CHECK(sp.world_seed == 7u);
    CHECK(sp.world.emitter_overrides.at(2) == EmitterMove{0.0, 0.0});
    CHECK(parse_run_config(to_json(c)) == c);
    CHECK(parse_run_config(json::parse(to_json(c).dump())) == c);
    CHECK(parse_run_config(to_json(RunConfig{})) == RunConfig{});
}

TEST_CASE("http provider config") {
    const RunConfig c = parse_run_config(
        {{"provider", {{"kind", "http"}, {"root", "http://localhost:8000"}, {"embed_root", "http://gpu:9000/api"}}}});
    const auto& e = std::get<HttpEndpoints>(c.provider);
    CHECK(e.mutate_root == "http://localhost:8000");
    CHECK(e.embed_root == "http://gpu:9000/api");
    CHECK(e.token_env == "WANDER_PROVIDER_TOKEN");
    CHECK(parse_run_config(to_json(c)) == c);
}

TEST_CASE("invalid configurations") {
    CHECK_THROWS_AS(parse_run_config({{"initial_count", 11}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"pool_capacity", 1}, {"initial_count", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"initial_count", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"generations", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"mutations_per_generation", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"k", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"crossover_probability", 1.5}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"generations", "ten"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"generations", -3}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"strategy", "greedy"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"strategy", {{"kind", "fixed"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"strategy", {{"kind", "fixed"}, {"emitter", 42}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"emitters", json::array()}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"provider", {{"kind", "carrier-pigeon"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"qdaif", {{"axes", {{{"name", "x"}, {"bins", {"a"}}}}}}}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"qdaif", {{"axes", {{{"name", "x"}, {"bins", {"a", "a"}}}, {{"name", "y"}, {"bins", {"b", "c"}}}}}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config(json::array()), ConfigError);
}

TEST_CASE("load from file") {
    testing::TempDir dir("config");
    std::ofstream(dir / "ok.json") << R"({"seed": 5, "strategy": "random"})";
    const RunConfig c = load_run_config((dir / "ok.json").string());
    CHECK(c.seed == 5);
    CHECK(c.strategy.kind == StrategyKind::random);
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_run_config((dir / "bad.json").string()), ConfigError);
    CHECK_THROWS_AS(load_run_config((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("synthetic world seed follows the run seed unless pinned") {
    RunConfig a;
    a.seed = 1;
    RunConfig b;
    b.seed = 2;
    auto embed = [](const RunConfig& c) {
        return make_providers(c).embedder->embed({protocol::Modality::text, "a cat"}).embedding;
    };
    CHECK(embed(a) != embed(b));
    std::get<SyntheticProviderConfig>(a.provider).world_seed = 9;
    std::get<SyntheticProviderConfig>(b.provider).world_seed = 9;
    CHECK(embed(a) == embed(b));
}
