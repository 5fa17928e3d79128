#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wander/analysis.hpp"
#include "wander/config.hpp"
#include "wander/errors.hpp"
#include "wander/evolve.hpp"
#include "wander/metrics.hpp"
#include "wander/qdaif.hpp"
#include "wander/runstore/runstore.hpp"

namespace fs = std::filesystem;
using namespace wander;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kProvider = 3, kStore = 4 };

std::string default_run_dir(std::uint64_t seed) {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return "runs/run-" + std::to_string(seed) + "-" + buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RunStoreError("cannot write " + path.string());
    out << text;
}

void print_summary(const RunResult& result, const fs::path& dir) {
    const auto& m = result.state.metrics.back();
    std::printf("%s %s: generation %d, vendi %.4f, mean distance %.4f, min novelty %.4f, relevance %.4f, tokens %llu\n",
                result.complete ? "completed" : "stopped", dir.c_str(), m.generation, m.vendi,
                m.mean_pairwise_distance, m.min_novelty, m.relevance,
                static_cast<unsigned long long>(m.cumulative_tokens));
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, std::string out,
            std::optional<std::size_t> stop_after) {
    RunConfig config = load_run_config(config_path);
    if (seed) config.seed = *seed;
    if (out.empty()) out = default_run_dir(config.seed);
    const Providers providers = make_providers(config);
    RunControl control{stop_after};
    const RunResult result = start_run(out, config, providers, control);
    print_summary(result, out);
    return kOk;
}

int cmd_resume(const std::string& dir, const std::string& config_path, std::optional<std::size_t> stop_after) {
    const LoadedRun peek = RunStore::read(dir);
    std::optional<RunConfig> expected;
    if (!config_path.empty()) expected = load_run_config(config_path);
    const Providers providers = make_providers(peek.manifest.config);
    const RunResult result = resume_run(dir, providers, RunControl{stop_after}, expected);
    print_summary(result, dir);
    return kOk;
}

int cmd_report(const std::string& dir, bool csv, std::optional<int> matrix_gen, bool verify) {
    const LoadedRun run = RunStore::read(dir);
    for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
    if (matrix_gen) {
        const auto snap = read_snapshot(dir, *matrix_gen);
        std::vector<EmbeddingVector> embs;
        for (const auto& m : snap.pool.members()) embs.push_back(m.embedding);
        std::cout << similarity_matrix(embs).to_csv();
        return kOk;
    }
    const auto rows = read_metrics(dir);
    if (csv) {
        std::cout << metrics_csv_header() << "\n";
        for (const auto& r : rows) std::cout << to_csv_row(r) << "\n";
        return kOk;
    }
    const RunConfig& c = run.manifest.config;
    std::cout << "run " << run.manifest.run_id << " (" << run.manifest.engine_version << ", created "
              << run.manifest.created_at << ")\n";
    std::cout << "strategy " << to_string(c.strategy.kind) << ", N=" << c.pool_capacity << " n=" << c.initial_count
              << " T=" << c.generations << " M=" << c.mutations_per_generation << " k=" << c.k
              << " crossover=" << c.crossover_probability << " seed=" << c.seed << "\n";
    std::cout << "events " << run.events.size() << " of " << c.generations * c.mutations_per_generation << "\n\n";
    std::cout << metrics_csv_header() << "\n";
    if (run.snapshot || !rows.empty()) {
        try {
            std::cout << to_csv_row(read_snapshot(dir, 0).metrics) << "\n";
        } catch (const RunStoreError&) {
        }
    }
    for (const auto& r : rows) std::cout << to_csv_row(r) << "\n";

    const TokenTotals t = token_totals(token_calls(run.events));
    std::printf("\nmutator tokens %llu (prompt %llu, completion %llu; mutation %llu, crossover %llu), "
                "estimated fraction %.3f\n",
                static_cast<unsigned long long>(t.total), static_cast<unsigned long long>(t.prompt_tokens),
                static_cast<unsigned long long>(t.completion_tokens), static_cast<unsigned long long>(t.mutation),
                static_cast<unsigned long long>(t.crossover), t.estimated_fraction);
    std::size_t accepted = 0;
    std::size_t degraded = 0;
    std::size_t crossovers = 0;
    for (const auto& e : run.events) {
        accepted += e.outcome != InsertKind::rejected;
        degraded += e.degraded();
        crossovers += e.kind == EventKind::crossover;
    }
    std::printf("accepted %zu, crossover %zu, degraded %zu\n", accepted, crossovers, degraded);
    if (run.snapshot) {
        std::cout << "\nemitter  pulls  successes  mean reward\n";
        for (const auto& [id, arm] : run.snapshot->stats.arms()) {
            std::printf("%7d  %5llu  %9llu  %11.4f\n", id, static_cast<unsigned long long>(arm.pulls),
                        static_cast<unsigned long long>(arm.successes), arm.mean_reward());
        }
    }
    if (verify) {
        const auto recomputed = recompute_metrics(run);
        double worst = 0.0;
        for (const auto& r : rows) {
            if (static_cast<std::size_t>(r.generation) >= recomputed.size()) {
                std::cerr << "metrics row for generation " << r.generation << " has no events\n";
                return kStore;
            }
            const auto& x = recomputed[static_cast<std::size_t>(r.generation)];
            for (double d : {r.vendi - x.vendi, r.mean_pairwise_distance - x.mean_pairwise_distance,
                             r.min_novelty - x.min_novelty, r.relevance - x.relevance}) {
                worst = std::max(worst, std::abs(d));
            }
            if (r.cumulative_tokens != x.cumulative_tokens || r.embed_calls != x.embed_calls) worst = 1.0;
        }
        std::printf("\nrecomputed from events.jsonl: max deviation %.3g %s\n", worst, worst <= 1e-9 ? "ok" : "MISMATCH");
        if (worst > 1e-9) return kStore;
    }
    return kOk;
}

int cmd_ablate(const std::string& config_path, const std::string& strategies, std::size_t runs,
               std::optional<std::uint64_t> seed, const std::string& out) {
    RunConfig config = load_run_config(config_path);
    if (seed) config.seed = *seed;
    const AblationResult result = run_ablation(config, parse_strategy_list(strategies), runs);
    std::cout << ablation_table(result);
    if (!out.empty()) {
        fs::create_directories(out);
        write_text(fs::path(out) / "ablation.csv", ablation_csv(result));
    }
    return kOk;
}

int cmd_qdaif(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::size_t> steps,
              std::string out) {
    RunConfig config = load_run_config(config_path);
    if (seed) config.seed = *seed;
    const Providers providers = make_providers(config);
    const QdaifResult result = qdaif_run(config, providers, steps);
    if (out.empty()) out = default_run_dir(config.seed) + "-qdaif";
    fs::create_directories(out);
    std::string events;
    for (const auto& e : result.events) events += to_json(e).dump() + "\n";
    write_text(fs::path(out) / "events.jsonl", events);
    std::string series;
    for (const auto& m : result.series) series += to_json(m).dump() + "\n";
    write_text(fs::path(out) / "metrics.jsonl", series);
    write_text(fs::path(out) / "grid.csv", grid_csv(result.grid, config.qdaif.axes));
    write_text(fs::path(out) / "grid_manifest.json", grid_manifest(result.grid, config.qdaif.axes).dump(2) + "\n");
    const auto& last = result.series.back();
    std::printf("qdaif %s: %zu steps, coverage %.3f, qd-score %.4f, vendi %.4f, tokens %llu\n", out.c_str(),
                result.series.size(), last.coverage, last.qd_score, last.vendi.value_or(0.0),
                static_cast<unsigned long long>(result.tokens));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Novelty-search evolution of prompt pools"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::string run_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> stop_after;
    std::optional<std::size_t> steps;
    std::optional<int> matrix_gen;
    bool csv = false;
    bool verify = false;
    std::string strategies = "none,fixed,random,bandit";
    std::size_t runs = 10;

    auto* run = app.add_subcommand("run", "Start a run");
    run->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out, "Run directory (default runs/run-<seed>-<time>)");
    run->add_option("--stop-after", stop_after, "Stop after this many events, leaving the run resumable");

    auto* resume = app.add_subcommand("resume", "Continue an interrupted run");
    resume->add_option("run-dir", run_dir)->required();
    resume->add_option("--config", config_path, "Refuse to resume unless the manifest matches this config");
    resume->add_option("--stop-after", stop_after, "Stop after this many more events");

    auto* report = app.add_subcommand("report", "Summarize a run");
    report->add_option("run-dir", run_dir)->required();
    report->add_flag("--csv", csv, "Print the metric series as CSV");
    report->add_option("--similarity-matrix", matrix_gen, "Print the pool similarity matrix of a generation as CSV");
    report->add_flag("--verify", verify, "Recompute every metric from events.jsonl and compare");

    auto* ablate = app.add_subcommand("ablate", "Compare emitter selection strategies");
    ablate->add_option("--config", config_path, "Base run config (JSON)")->required()->check(CLI::ExistingFile);
    ablate->add_option("--strategies", strategies, "Comma-separated: none,fixed,random,bandit");
    ablate->add_option("--runs", runs, "Seeds per strategy")->check(CLI::PositiveNumber);
    ablate->add_option("--seed", seed, "Base seed");
    ablate->add_option("--out", out, "Directory for ablation.csv");

    auto* qdaif = app.add_subcommand("qdaif", "Run the MAP-Elites baseline");
    qdaif->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    qdaif->add_option("--seed", seed, "Override the config seed");
    qdaif->add_option("--steps", steps, "Override qdaif.steps");
    qdaif->add_option("--out", out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*run) return cmd_run(config_path, seed, out, stop_after);
        if (*resume) return cmd_resume(run_dir, config_path, stop_after);
        if (*report) return cmd_report(run_dir, csv, matrix_gen, verify);
        if (*ablate) return cmd_ablate(config_path, strategies, runs, seed, out);
        if (*qdaif) return cmd_qdaif(config_path, seed, steps, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const TransportError& e) {
        std::cerr << "provider failure: " << e.what() << "\n";
        return kProvider;
    } catch (const ProtocolError& e) {
        std::cerr << "provider protocol error: " << e.what() << "\n";
        return kProvider;
    } catch (const RunStoreError& e) {
        std::cerr << "run store error: " << e.what() << "\n";
        return kStore;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
