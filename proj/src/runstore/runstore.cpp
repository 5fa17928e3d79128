#include "wander/runstore/runstore.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "wander/errors.hpp"

namespace wander {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kEvents = "events.jsonl";
constexpr const char* kTimings = "timings.jsonl";
constexpr const char* kMetrics = "metrics.jsonl";
constexpr const char* kSnapshots = "snapshots";
constexpr const char* kLock = ".lock";

[[noreturn]] void throw_errno(const std::string& what) {
    throw RunStoreError(what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const std::string& what) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("writing " + what);
        }
        off += static_cast<std::size_t>(n);
    }
}

void fsync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

void append_line(const fs::path& path, const json& j) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw_errno("opening " + path.string());
    try {
        write_all(fd, j.dump() + "\n", path.string());
        if (::fsync(fd) != 0) throw_errno("syncing " + path.string());
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunStoreError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw RunStoreError(path.string() + " is not valid JSON: " + e.what());
    }
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Parses a JSONL file. A bad final line (torn write) is dropped with a warning and,
// when `repair` is set, truncated away; a bad line anywhere else is corruption.
std::vector<json> read_jsonl(const fs::path& path, bool repair, std::vector<std::string>& warnings) {
    std::vector<json> out;
    if (!fs::exists(path)) return out;
    const std::string data = read_file(path);
    std::size_t pos = 0;
    std::size_t good_end = 0;
    std::size_t line_no = 0;
    while (pos < data.size()) {
        const std::size_t nl = data.find('\n', pos);
        const bool terminated = nl != std::string::npos;
        const std::size_t end = terminated ? nl : data.size();
        const std::string_view line(data.data() + pos, end - pos);
        ++line_no;
        const std::size_t next = terminated ? nl + 1 : data.size();
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            pos = next;
            if (terminated) good_end = next;
            continue;
        }
        json j;
        bool ok = true;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            ok = false;
        }
        const bool last = data.find_first_not_of(" \t\r\n", next) == std::string::npos;
        if (!ok || !terminated) {
            if (!last) {
                throw RunStoreError(path.string() + ": line " + std::to_string(line_no) + " is corrupt");
            }
            if (ok) {
                // Complete record, missing only its newline.
                out.push_back(std::move(j));
                if (repair) {
                    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
                    if (fd < 0) throw_errno("repairing " + path.string());
                    write_all(fd, "\n", path.string());
                    ::fsync(fd);
                    ::close(fd);
                }
                return out;
            }
            warnings.push_back(path.filename().string() + ": dropped a torn trailing line (" +
                               std::to_string(line.size()) + " bytes)");
            if (repair) {
                if (::truncate(path.c_str(), static_cast<off_t>(good_end)) != 0) {
                    throw_errno("truncating " + path.string());
                }
            }
            return out;
        }
        out.push_back(std::move(j));
        pos = next;
        good_end = next;
    }
    return out;
}

LoadedRun load_dir(const fs::path& dir, bool repair) {
    if (!fs::exists(dir / kManifest)) {
        throw RunStoreError(dir.string() + " is not a run directory (no " + kManifest + ")");
    }
    LoadedRun run;
    run.manifest = records::parse_manifest(parse_json_file(dir / kManifest));

    const auto lines = read_jsonl(dir / kEvents, repair, run.warnings);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string type = lines[i].value("type", "");
        if (type == "init") {
            if (i != 0) throw RunStoreError("events.jsonl: init record is not the first line");
            run.init = records::parse_init_record(lines[i]);
        } else if (type == "event") {
            if (!run.init) throw RunStoreError("events.jsonl: event before the init record");
            run.events.push_back(records::parse_event(lines[i]));
        } else {
            throw RunStoreError("events.jsonl: line " + std::to_string(i + 1) + " has unknown type '" + type + "'");
        }
    }
    if (repair) read_jsonl(dir / kTimings, true, run.warnings);

    const std::regex name(R"(gen-(\d+)\.json)");
    int best = -1;
    if (fs::exists(dir / kSnapshots)) {
        for (const auto& entry : fs::directory_iterator(dir / kSnapshots)) {
            std::smatch m;
            const std::string file = entry.path().filename().string();
            if (!std::regex_match(file, m, name)) continue;
            best = std::max(best, std::stoi(m[1].str()));
        }
    }
    for (int g = best; g >= 0; --g) {
        const fs::path p = snapshot_path(dir, g);
        if (!fs::exists(p)) continue;
        try {
            records::Snapshot s = records::parse_snapshot(parse_json_file(p));
            if (s.run_id != run.manifest.run_id) {
                throw RunStoreError("snapshot " + p.filename().string() + " belongs to run " + s.run_id +
                                    ", the manifest is for run " + run.manifest.run_id);
            }
            if (s.generation != g) throw RunStoreError("snapshot " + p.filename().string() + " has the wrong generation");
            run.snapshot = std::move(s);
            break;
        } catch (const RunStoreError& e) {
            if (std::string(e.what()).find("belongs to run") != std::string::npos) throw;
            run.warnings.push_back("ignoring unreadable snapshot " + p.filename().string() + ": " + e.what());
        }
    }
    return run;
}

}  // namespace

fs::path snapshot_path(const fs::path& dir, int generation) {
    return dir / kSnapshots / ("gen-" + std::to_string(generation) + ".json");
}

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw_errno("creating " + tmp.string());
    try {
        write_all(fd, content, tmp.string());
        if (::fsync(fd) != 0) throw_errno("syncing " + tmp.string());
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) throw_errno("renaming " + tmp.string());
    fsync_dir(path.parent_path());
}

RunStore::RunStore(fs::path dir, int lock_fd, LoadedRun loaded)
    : dir_(std::move(dir)), lock_fd_(lock_fd), loaded_(std::move(loaded)) {}

RunStore::RunStore(RunStore&& o) noexcept
    : dir_(std::move(o.dir_)), lock_fd_(std::exchange(o.lock_fd_, -1)), loaded_(std::move(o.loaded_)) {}

RunStore& RunStore::operator=(RunStore&& o) noexcept {
    if (this != &o) {
        if (lock_fd_ >= 0) ::close(lock_fd_);
        dir_ = std::move(o.dir_);
        lock_fd_ = std::exchange(o.lock_fd_, -1);
        loaded_ = std::move(o.loaded_);
    }
    return *this;
}

RunStore::~RunStore() {
    if (lock_fd_ >= 0) ::close(lock_fd_);
}

namespace {

int take_lock(const fs::path& dir) {
    const fs::path p = dir / kLock;
    const int fd = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw_errno("opening " + p.string());
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd);
        throw RunStoreError(dir.string() + " is locked by another writer");
    }
    return fd;
}

}  // namespace

RunStore RunStore::create(const fs::path& dir, const RunConfig& config) {
    validate(config);
    if (fs::exists(dir / kManifest)) throw RunStoreError(dir.string() + " already holds a run");
    std::error_code ec;
    fs::create_directories(dir / kSnapshots, ec);
    if (ec) throw RunStoreError("cannot create " + dir.string() + ": " + ec.message());
    fs::create_directories(dir / "artifacts", ec);
    const int fd = take_lock(dir);
    LoadedRun loaded;
    loaded.manifest.run_id = records::new_run_id();
    loaded.manifest.created_at = utc_now();
    loaded.manifest.engine_version = records::engine_version();
    loaded.manifest.config = config;
    loaded.manifest.templates = records::current_templates();
    RunStore store(dir, fd, std::move(loaded));
    atomic_write(dir / kManifest, records::to_json(store.manifest()).dump(2) + "\n");
    return store;
}

RunStore RunStore::open(const fs::path& dir) {
    if (!fs::exists(dir / kManifest)) {
        throw RunStoreError(dir.string() + " is not a run directory (no " + kManifest + ")");
    }
    const int fd = take_lock(dir);
    try {
        return RunStore(dir, fd, load_dir(dir, true));
    } catch (...) {
        ::close(fd);
        throw;
    }
}

LoadedRun RunStore::read(const fs::path& dir) { return load_dir(dir, false); }

void RunStore::append_init(const records::InitRecord& init) { append_line(dir_ / kEvents, records::to_json(init)); }

void RunStore::append_event(const GenerationEvent& event) { append_line(dir_ / kEvents, records::to_json(event)); }

void RunStore::append_timing(const EventTiming& timing) { append_line(dir_ / kTimings, records::to_json(timing)); }

void RunStore::append_metrics(const MetricRecord& record) {
    append_line(dir_ / kMetrics, records::to_json(record));
}

void RunStore::write_snapshot(const records::Snapshot& snapshot) {
    atomic_write(snapshot_path(dir_, snapshot.generation), records::to_json(snapshot).dump() + "\n");
}

void RunStore::rewrite_metrics(const std::vector<MetricRecord>& rows) {
    std::string content;
    for (const auto& r : rows) content += records::to_json(r).dump() + "\n";
    atomic_write(dir_ / kMetrics, content);
}

void StoreObserver::on_initialized(const RunState& state) {
    store_.append_init(records::init_record_of(state));
    store_.write_snapshot(records::snapshot_of(store_.manifest().run_id, state));
}

void StoreObserver::on_event(const GenerationEvent& event, const EventTiming& timing) {
    store_.append_event(event);
    store_.append_timing(timing);
}

void StoreObserver::on_generation(const RunState& state) {
    store_.write_snapshot(records::snapshot_of(store_.manifest().run_id, state));
    store_.append_metrics(state.metrics.back());
}

RunState restore_state(const LoadedRun& run) {
    const RunConfig& config = run.manifest.config;
    if (!run.init) throw RunStoreError("the run was never initialized");
    const auto m = static_cast<int>(config.mutations_per_generation);

    RunState state;
    if (run.snapshot) {
        state = records::state_of(*run.snapshot);
    } else {
        state = records::state_of(*run.init, config);
    }
    const int g = state.generation;
    std::size_t first = 0;
    while (first < run.events.size() && run.events[first].generation <= g) ++first;
    if (first != static_cast<std::size_t>(g) * static_cast<std::size_t>(m)) {
        throw RunStoreError("events.jsonl has " + std::to_string(first) + " events up to generation " +
                            std::to_string(g) + ", expected " + std::to_string(g * m));
    }
    for (std::size_t i = first; i < run.events.size(); ++i) {
        if (state.next_attempt == m) finish_generation(state, config, nullptr);
        apply_event(state, config, run.events[i]);
    }
    return state;
}

std::vector<MetricRecord> recompute_metrics(const LoadedRun& run) {
    const RunConfig& config = run.manifest.config;
    if (!run.init) throw RunStoreError("the run was never initialized");
    RunState state = records::state_of(*run.init, config);
    for (const auto& e : run.events) {
        apply_event(state, config, e);
        if (static_cast<std::size_t>(state.next_attempt) == config.mutations_per_generation) {
            finish_generation(state, config, nullptr);
        }
    }
    return state.metrics;
}

std::vector<MetricRecord> read_metrics(const fs::path& dir) {
    std::vector<std::string> warnings;
    std::vector<MetricRecord> out;
    for (const auto& j : read_jsonl(dir / kMetrics, false, warnings)) out.push_back(records::parse_metric_record(j));
    return out;
}

records::Snapshot read_snapshot(const fs::path& dir, int generation) {
    const fs::path p = snapshot_path(dir, generation);
    if (!fs::exists(p)) throw RunStoreError("no snapshot for generation " + std::to_string(generation));
    return records::parse_snapshot(parse_json_file(p));
}

RunResult start_run(const fs::path& dir, const RunConfig& config, const Providers& providers, RunControl control) {
    RunStore store = RunStore::create(dir, config);
    StoreObserver observer(store);
    return run(config, providers, &observer, control);
}

RunResult resume_run(const fs::path& dir, const Providers& providers, RunControl control,
                     const std::optional<RunConfig>& expected) {
    RunStore store = RunStore::open(dir);
    for (const auto& w : store.loaded().warnings) std::cerr << "warning: " << w << "\n";
    const RunConfig& config = store.manifest().config;
    if (expected && !(*expected == config)) {
        throw RunStoreError("the given config does not match the manifest of run " + store.manifest().run_id);
    }
    StoreObserver observer(store);
    if (!store.loaded().init) {
        return run(config, providers, &observer, control);
    }

    RunState state = restore_state(store.loaded());
    if (!store.loaded().snapshot) {
        RunState gen0 = records::state_of(*store.loaded().init, config);
        store.write_snapshot(records::snapshot_of(store.manifest().run_id, gen0));
    }

    // metrics.jsonl may lag the snapshots after a crash; rebuild rows 1..g from them.
    std::vector<MetricRecord> rows;
    for (int g = 1; g <= state.generation; ++g) rows.push_back(read_snapshot(dir, g).metrics);
    store.rewrite_metrics(rows);
    state.metrics.clear();
    {
        std::vector<MetricRecord> all{read_snapshot(dir, 0).metrics};
        all.insert(all.end(), rows.begin(), rows.end());
        state.metrics = std::move(all);
    }
    return continue_run(std::move(state), config, providers, &observer, control);
}

}  // namespace wander
