// Acceptance checks on the synthetic world. One PASS/FAIL line per criterion, with its
// measured numbers and wall time; exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "wander/analysis.hpp"
#include "wander/config.hpp"
#include "wander/evolve.hpp"
#include "wander/metrics.hpp"
#include "wander/providers/protocol.hpp"
#include "wander/qdaif.hpp"
#include "wander/runstore/records.hpp"
#include "wander/runstore/runstore.hpp"

using namespace wander;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double limit_s;
    std::function<Verdict()> check;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<EmbeddingVector> embs(const std::vector<std::vector<float>>& vs) {
    std::vector<EmbeddingVector> out;
    for (const auto& v : vs) out.emplace_back(v);
    return out;
}

RunConfig quiet(RunConfig c) {
    c.retry.initial_backoff = std::chrono::milliseconds(0);
    return c;
}

Verdict vendi_suite() {
    double worst_exact = 0.0;
    for (std::size_t n : {1u, 2u, 4u, 8u, 16u}) {
        std::vector<std::vector<float>> same(n, std::vector<float>{0.5f, -2.0f, 1.0f, 3.0f});
        worst_exact = std::max(worst_exact, std::abs(vendi_score(embs(same)) - 1.0));
        std::vector<std::vector<float>> ortho;
        for (std::size_t i = 0; i < n; ++i) ortho.push_back(oracle::unit(16, i, 1.0f + float(i)));
        worst_exact = std::max(worst_exact, std::abs(vendi_score(embs(ortho)) - double(n)));
    }
    worst_exact = std::max(
        worst_exact, std::abs(vendi_score(embs({{1, 0, 0}, {3, 0, 0}, {0, 2, 0}, {0, 1, 0}})) - 2.0));

    Rng rng(2024);
    double worst_random = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.uniform_index(16);
        const std::size_t d = 1 + rng.uniform_index(32);
        std::vector<std::vector<float>> vs;
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0 && rng.bernoulli(0.2)) {
                vs.push_back(vs[rng.uniform_index(i)]);
            } else {
                vs.push_back(oracle::random_vector(rng, d));
            }
        }
        worst_random = std::max(worst_random, std::abs(vendi_score(embs(vs)) - oracle::vendi(vs)));
    }
    return {worst_exact <= 1e-9 && worst_random <= 1e-8,
            "exact cases max err " + fmt("%.2e", worst_exact) + ", 200 random sets max err " + fmt("%.2e", worst_random)};
}

Verdict novelty_suite() {
    Rng rng(77);
    double worst = 0.0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t size = 1 + rng.uniform_index(64);
        const std::size_t k = 1 + rng.uniform_index(8);
        const std::size_t d = 2 + rng.uniform_index(15);
        Pool pool(64, k);
        std::vector<std::vector<float>> members;
        for (std::size_t i = 0; i < size; ++i) {
            auto v = i > 0 && rng.bernoulli(0.1) ? members[rng.uniform_index(i)] : oracle::random_vector(rng, d);
            members.push_back(v);
            pool.append(testing::individual("m" + std::to_string(i), v));
        }
        const auto c = rng.bernoulli(0.1) ? members[rng.uniform_index(size)] : oracle::random_vector(rng, d);
        worst = std::max(worst, std::abs(novelty_score(EmbeddingVector(c), pool) -
                                         oracle::novelty(c, members, k)));
    }

    std::size_t attempts = 0;
    std::size_t violations = 0;
    std::size_t replaced = 0;
    while (attempts < 10000) {
        const std::size_t cap = 2 + rng.uniform_index(15);
        const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(cap - 1, 8));
        const std::size_t d = 2 + rng.uniform_index(7);
        Pool pool(cap, k);
        for (std::size_t i = 0; i < cap; ++i) pool.append(testing::individual("p" + std::to_string(i), oracle::random_vector(rng, d)));
        for (int s = 0; s < 100; ++s, ++attempts) {
            const double before = score_pool(pool).min_score;
            const auto out = try_insert(pool, testing::individual("c" + std::to_string(attempts), oracle::random_vector(rng, d)));
            replaced += out.kind == InsertKind::replaced;
            if (score_pool(pool).min_score < before) ++violations;
        }
    }
    return {worst <= 1e-9 && violations == 0,
            "500 cases max err " + fmt("%.2e", worst) + ", " + std::to_string(attempts) + " inserts (" +
                std::to_string(replaced) + " replacements), " + std::to_string(violations) + " min-novelty drops"};
}

Verdict loop_determinism(const fs::path& scratch) {
    RunConfig c = quiet({});
    c.seed = 42;
    const Providers p = make_providers(c);
    start_run(scratch / "a", c, p);
    start_run(scratch / "b", c, p);
    const bool identical = slurp(scratch / "a" / "events.jsonl") == slurp(scratch / "b" / "events.jsonl");

    start_run(scratch / "c", c, p, RunControl{37});
    resume_run(scratch / "c", p, RunControl{25});
    const RunResult resumed = resume_run(scratch / "c", p);
    const auto full = read_snapshot(scratch / "a", 10);
    const auto again = read_snapshot(scratch / "c", 10);
    const bool same_pool = resumed.complete && full.pool == again.pool && resumed.state.pool == full.pool;
    const bool same_log = slurp(scratch / "a" / "events.jsonl") == slurp(scratch / "c" / "events.jsonl");
    return {identical && same_pool && same_log,
            std::string("event logs ") + (identical ? "byte-identical" : "DIFFER") + ", resumed final pool " +
                (same_pool ? "identical" : "DIFFERS") + ", resumed log " + (same_log ? "identical" : "DIFFERS")};
}

Verdict emitter_ablation() {
    const RunConfig base = quiet({});
    const AblationResult r = run_ablation(
        base, {StrategyKind::none, StrategyKind::fixed, StrategyKind::random, StrategyKind::bandit}, 10);
    std::map<StrategyKind, double> mean;
    std::string detail = "mean final vendi:";
    for (const auto& row : r.rows) {
        mean[row.strategy] = row.mean_vendi;
        detail += " " + std::string(to_string(row.strategy)) + " " + fmt("%.3f", row.mean_vendi);
    }
    const double none = mean[StrategyKind::none];
    const double fixed = mean[StrategyKind::fixed];
    const double random = mean[StrategyKind::random];
    const double gap = (random - fixed) / fixed;
    detail += ", random over fixed " + fmt("%+.1f%%", 100.0 * gap);
    return {random > fixed && fixed > none && gap >= 0.10, detail};
}

// Emitter 4 moves along its direction with jitter; every other emitter reproduces its
// parent, so only emitter 4 can produce acceptances. With k = 1 and a 200-member pool the
// duplicate of a parent scores exactly 0 and is always rejected.
RunConfig bandit_world(std::uint64_t seed) {
    RunConfig c = quiet({});
    c.seed = seed;
    c.pool_capacity = 200;
    c.initial_count = 200;
    c.k = 1;
    c.generations = 20;
    c.mutations_per_generation = 10;
    c.crossover_probability = 0.0;
    auto& w = std::get<SyntheticProviderConfig>(c.provider).world;
    w.generation_noise = 0.0;
    for (int id = 1; id <= 10; ++id) w.emitter_overrides[id] = EmitterMove{0.0, 0.0};
    w.emitter_overrides[4] = EmitterMove{1.0, 0.3};
    return c;
}

Verdict bandit_sanity() {
    double sum = 0.0;
    double lowest = 1.0;
    std::uint64_t good_successes = 0;
    std::uint64_t good_pulls = 0;
    std::uint64_t other_successes = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const RunConfig c = bandit_world(seed);
        const RunResult r = run(c, make_providers(c));
        const auto& stats = r.state.stats;
        const double frac = double(stats.arm(4).pulls) / double(stats.total_pulls());
        sum += frac;
        lowest = std::min(lowest, frac);
        good_successes += stats.arm(4).successes;
        good_pulls += stats.arm(4).pulls;
        for (const auto& [id, arm] : stats.arms())
            if (id != 4) other_successes += arm.successes;
    }
    const double mean = sum / 10.0;
    return {mean > 0.5, "good-arm pull fraction " + fmt("%.3f", mean) + " (min " + fmt("%.3f", lowest) +
                            "), good-arm acceptance " + fmt("%.2f", double(good_successes) / double(good_pulls)) +
                            ", other-arm acceptances " + std::to_string(other_successes)};
}

RunConfig growth_config(std::uint64_t seed, bool leave_one_in) {
    RunConfig c = quiet({});
    c.seed = seed;
    c.generations = 30;
    c.insert.leave_one_in = leave_one_in;
    return c;
}

struct Growth {
    std::size_t steps = 0;
    std::size_t non_decreasing = 0;
    double initial = 0.0;
    double final = 0.0;
    std::array<double, 3> similarity{};

    bool pass() const {
        return non_decreasing * 10 >= steps * 9 && final >= 2.0 * initial && similarity[0] > similarity[1] &&
               similarity[1] > similarity[2];
    }
};

Growth growth_of(const fs::path& dir) {
    const auto rows = read_metrics(dir);
    std::vector<double> v{read_snapshot(dir, 0).metrics.vendi};
    for (const auto& r : rows) v.push_back(r.vendi);
    Growth g;
    g.steps = v.size() - 1;
    for (std::size_t i = 1; i < v.size(); ++i) g.non_decreasing += v[i] >= v[i - 1];
    g.initial = v.front();
    g.final = v.back();
    const std::array<int, 3> gens{1, 15, 30};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto snapshot = read_snapshot(dir, gens[i]);
        std::vector<EmbeddingVector> e;
        for (const auto& m : snapshot.pool.members()) e.push_back(m.embedding);
        g.similarity[i] = similarity_matrix(e).mean_off_diagonal();
    }
    return g;
}

Verdict diversity_growth(const fs::path& scratch) {
    const RunConfig c = growth_config(0, true);
    start_run(scratch / "growth", c, make_providers(c));
    const Growth g = growth_of(scratch / "growth");
    return {g.pass(), "vendi non-decreasing " + std::to_string(g.non_decreasing) + "/" + std::to_string(g.steps) +
                          ", initial " + fmt("%.3f", g.initial) + " final " + fmt("%.3f", g.final) +
                          ", mean similarity g1/g15/g30 " + fmt("%.4f", g.similarity[0]) + "/" +
                          fmt("%.4f", g.similarity[1]) + "/" + fmt("%.4f", g.similarity[2])};
}

Verdict qdaif_baseline() {
    std::size_t full = 0;
    bool monotone = true;
    std::string reached;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RunConfig c = quiet({});
        c.seed = seed;
        const QdaifResult r = qdaif_run(c, make_providers(c), 500);
        for (std::size_t i = 1; i < r.series.size(); ++i) {
            monotone = monotone && r.series[i].coverage >= r.series[i - 1].coverage &&
                       r.series[i].qd_score >= r.series[i - 1].qd_score;
        }
        std::size_t at = 0;
        for (const auto& m : r.series) {
            if (m.coverage >= 1.0) {
                at = m.step;
                break;
            }
        }
        if (r.grid.coverage() >= 1.0) ++full;
        reached += (reached.empty() ? "" : ",") + (at ? std::to_string(at) : std::string("-"));
    }
    return {full >= 9 && monotone, std::to_string(full) + "/10 seeds reach full 5x5 coverage (at steps " + reached +
                                       "), coverage and qd-score " + (monotone ? "monotone" : "NOT monotone")};
}

template <class Parse, class Dump>
bool golden_roundtrip(const json& doc, Parse parse, Dump dump) {
    return dump(parse(doc)) == doc;
}

Verdict round_trip(const fs::path& scratch) {
    const fs::path golden = fs::path(WANDER_FIXTURE_DIR) / "golden";
    using P = std::function<bool(const json&)>;
    auto pr = [](auto parse) -> P {
        return [parse](const json& d) { return golden_roundtrip(d, parse, [](const auto& v) { return protocol::to_json(v); }); };
    };
    auto rr = [](auto parse) -> P {
        return [parse](const json& d) { return golden_roundtrip(d, parse, [](const auto& v) { return records::to_json(v); }); };
    };
    const std::vector<std::pair<std::string, P>> parsers{
        {"protocol/mutate_request", pr(protocol::parse_mutate_request)},
        {"protocol/mutate_response", pr(protocol::parse_mutate_response)},
        {"protocol/mutate_response_no_usage", pr(protocol::parse_mutate_response)},
        {"protocol/generate_request", pr(protocol::parse_generate_request)},
        {"protocol/generate_response", pr(protocol::parse_generate_response)},
        {"protocol/embed_request_text", pr(protocol::parse_embed_request)},
        {"protocol/embed_request_image", pr(protocol::parse_embed_request)},
        {"protocol/embed_response", pr(protocol::parse_embed_response)},
        {"protocol/rate_request", pr(protocol::parse_rate_request)},
        {"protocol/rate_response", pr(protocol::parse_rate_response)},
        {"protocol/perceptual_distance_request", pr(protocol::parse_perceptual_distance_request)},
        {"protocol/perceptual_distance_response", pr(protocol::parse_perceptual_distance_response)},
        {"runstore/individual_initial", rr(records::parse_individual)},
        {"runstore/individual_mutation", rr(records::parse_individual)},
        {"runstore/individual_crossover", rr(records::parse_individual)},
        {"runstore/pool", rr(records::parse_pool)},
        {"runstore/emitter_stats", rr(records::parse_emitter_stats)},
        {"runstore/metric_record", rr(records::parse_metric_record)},
        {"runstore/event", rr(records::parse_event)},
        {"runstore/event_degraded", rr(records::parse_event)},
        {"runstore/timing", rr(records::parse_timing)},
        {"runstore/snapshot", rr(records::parse_snapshot)},
        {"runstore/init", rr(records::parse_init_record)},
        {"runstore/manifest", rr(records::parse_manifest)},
    };
    std::size_t ok = 0;
    std::string bad;
    for (const auto& [name, check] : parsers) {
        try {
            std::ifstream in(golden / (name + ".json"));
            if (check(json::parse(in))) {
                ++ok;
                continue;
            }
        } catch (const std::exception&) {
        }
        bad += " " + name;
    }

    const fs::path cfg = scratch / "cli.json";
    std::ofstream(cfg) << R"({"generations": 6})";
    const fs::path run = scratch / "cli-run";
    const std::string cli = WANDER_CLI_PATH;
    int code = std::system((cli + " run --config " + cfg.string() + " --seed 7 --out " + run.string() + " >/dev/null").c_str());
    FILE* pipe = ::popen((cli + " report " + run.string() + " --csv").c_str(), "r");
    std::string csv;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) csv.append(buf.data(), n);
    const int report = ::pclose(pipe);

    const auto recomputed = recompute_metrics(RunStore::read(run));
    double worst = 0.0;
    std::size_t rows = 0;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        const auto& m = recomputed.at(static_cast<std::size_t>(std::stoi(cells.at(0))));
        const std::array<double, 6> diff{std::stod(cells[1]) - m.vendi, std::stod(cells[2]) - m.mean_pairwise_distance,
                                         std::stod(cells[3]) - m.min_novelty, std::stod(cells[4]) - m.relevance,
                                         std::stod(cells[5]) - double(m.cumulative_tokens),
                                         std::stod(cells[6]) - double(m.embed_calls)};
        for (double d : diff) worst = std::max(worst, std::abs(d));
        ++rows;
    }
    const bool cli_ok = code == 0 && WIFEXITED(report) && WEXITSTATUS(report) == 0 && rows == 6 && worst <= 1e-9;
    return {ok == parsers.size() && cli_ok,
            std::to_string(ok) + "/" + std::to_string(parsers.size()) + " golden fixtures round-trip" +
                (bad.empty() ? "" : " (failed:" + bad + ")") + "; run->report csv " + std::to_string(rows) +
                " rows, max deviation from events.jsonl replay " + fmt("%.2e", worst)};
}

// Seed counts for the growth criterion under both insertion settings; not a criterion.
void growth_census(const fs::path& scratch) {
    for (bool loi : {false, true}) {
        std::size_t pass = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const RunConfig c = growth_config(seed, loi);
            const fs::path d = scratch / ("census-" + std::to_string(loi) + "-" + std::to_string(seed));
            start_run(d, c, make_providers(c));
            pass += growth_of(d).pass();
            fs::remove_all(d);
        }
        std::printf("INFO diversity growth, leave_one_in=%s: %zu/20 seeds meet every growth condition\n",
                    loi ? "true" : "false", pass);
    }
}

}  // namespace

int main(int argc, char** argv) {
    const bool census = argc > 1 && std::string(argv[1]) == "--census";
    testing::TempDir scratch("acceptance");
    const std::vector<Criterion> criteria{
        {"vendi oracle suite", 5, vendi_suite},
        {"novelty oracle suite", 10, novelty_suite},
        {"loop determinism", 30, [&] { return loop_determinism(scratch.path()); }},
        {"emitter ablation", 120, emitter_ablation},
        {"bandit sanity", 60, bandit_sanity},
        {"diversity growth", 120, [&] { return diversity_growth(scratch.path()); }},
        {"qdaif baseline", 60, qdaif_baseline},
        {"round-trip and cli", 60, [&] { return round_trip(scratch.path()); }},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = s < c.limit_s;
        const bool pass = v.pass && in_time;
        failed += !pass;
        std::printf("%s %-20s %7.2fs (limit %gs%s)  %s\n", pass ? "PASS" : "FAIL", c.name.c_str(), s, c.limit_s,
                    in_time ? "" : ", EXCEEDED", v.detail.c_str());
        std::fflush(stdout);
    }
    if (census) growth_census(scratch.path());
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
