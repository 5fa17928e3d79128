#pragma once

// Run directory layout:
//
//   manifest.json          immutable; config, templates, run id
//   events.jsonl           init record, then one GenerationEvent per attempt
//   timings.jsonl          wall-clock times per attempt
//   metrics.jsonl          one MetricRecord per completed generation (1..T)
//   snapshots/gen-<i>.json state at the end of generation i (0 = initial pool)
//   artifacts/             optional local artifact copies
//   .lock                  held by the single writer

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wander/evolve.hpp"
#include "wander/runstore/records.hpp"

namespace wander {

/// Everything needed to pick a run back up, as read from disk.
struct LoadedRun {
    records::RunManifest manifest;
    std::optional<records::InitRecord> init;
    std::vector<GenerationEvent> events;
    /// Latest snapshot that parsed; absent before generation 0 was written.
    std::optional<records::Snapshot> snapshot;
    /// Non-fatal repairs made while loading (truncated trailing lines).
    std::vector<std::string> warnings;
};

class RunStore {
public:
    /// Creates the directory and writes the manifest. Throws RunStoreError when the
    /// directory already holds a run.
    static RunStore create(const std::filesystem::path& dir, const RunConfig& config);

    /// Opens an existing run for writing: takes the lock, loads and repairs the files.
    static RunStore open(const std::filesystem::path& dir);

    /// Reads a run without locking or repairing it.
    static LoadedRun read(const std::filesystem::path& dir);

    RunStore(RunStore&&) noexcept;
    RunStore& operator=(RunStore&&) noexcept;
    RunStore(const RunStore&) = delete;
    RunStore& operator=(const RunStore&) = delete;
    ~RunStore();

    const std::filesystem::path& dir() const noexcept { return dir_; }
    const records::RunManifest& manifest() const noexcept { return loaded_.manifest; }
    const LoadedRun& loaded() const noexcept { return loaded_; }

    void append_init(const records::InitRecord& init);
    void append_event(const GenerationEvent& event);
    void append_timing(const EventTiming& timing);
    void append_metrics(const MetricRecord& record);
    void write_snapshot(const records::Snapshot& snapshot);
    /// Rewrites metrics.jsonl atomically.
    void rewrite_metrics(const std::vector<MetricRecord>& records);

private:
    RunStore(std::filesystem::path dir, int lock_fd, LoadedRun loaded);

    std::filesystem::path dir_;
    int lock_fd_ = -1;
    LoadedRun loaded_;
};

/// Observer that persists a run as it happens.
class StoreObserver final : public RunObserver {
public:
    explicit StoreObserver(RunStore& store) : store_(store) {}
    void on_initialized(const RunState& state) override;
    void on_event(const GenerationEvent& event, const EventTiming& timing) override;
    void on_generation(const RunState& state) override;

private:
    RunStore& store_;
};

/// Writes a whole file via a temporary and a rename, with fsyncs.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::filesystem::path snapshot_path(const std::filesystem::path& dir, int generation);

/// Reconstructs loop state from the latest snapshot plus the trailing events.
/// Throws RunStoreError when the files disagree with each other.
RunState restore_state(const LoadedRun& run);

/// Replays the whole event log from the init record and returns the metric record of
/// every completed generation, 0 included. Perceptual distances are not recomputed.
std::vector<MetricRecord> recompute_metrics(const LoadedRun& run);

/// Reads metrics.jsonl (rows 1..T).
std::vector<MetricRecord> read_metrics(const std::filesystem::path& dir);

/// Generation's pool from its snapshot.
records::Snapshot read_snapshot(const std::filesystem::path& dir, int generation);

/// New run in `dir`. `config` must already carry any seed override.
RunResult start_run(const std::filesystem::path& dir, const RunConfig& config, const Providers& providers,
                    RunControl control = {});

/// Resumes the run in `dir`. When `expected` is given it must equal the manifest's
/// config, else RunStoreError.
RunResult resume_run(const std::filesystem::path& dir, const Providers& providers, RunControl control = {},
                     const std::optional<RunConfig>& expected = std::nullopt);

}  // namespace wander
