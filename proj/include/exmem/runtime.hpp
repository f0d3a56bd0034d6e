#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exmem/backend.hpp"
#include "exmem/graph.hpp"
#include "exmem/management.hpp"
#include "exmem/projection.hpp"
#include "exmem/trajectory.hpp"

namespace exmem {

struct RuntimeConfig {
    std::size_t budget_tokens = 32'768;  // context budget; must be >= 1'024
    int retry_limit = 2;                 // corrective re-invocations per call
    BackendConfig backend;
    std::optional<std::filesystem::path> persist_path;
    double thrash_bump = 0.25;  // trigger raise after a no-op management round
    std::size_t queue_depth = 64;  // memorization queue bound (backpressure)
    // Simulated reasoning time per episode; overrides trajectory metadata
    // ("reasoning_delay_ms" uniform value or "event_timestamps_ms" list).
    std::optional<int> reasoning_delay_ms;

    void validate() const;  // throws ConfigError
};

struct EpisodeTiming {
    std::int64_t reasoning_ms = 0;
    std::int64_t memorize_ms = 0;
};

struct RunStats {
    std::size_t episodes_total = 0;
    std::size_t episodes_skipped = 0;
    std::size_t thoughts_created = 0;
    std::size_t folds_applied = 0;
    std::size_t flushes_applied = 0;
    std::size_t summaries_created = 0;
    std::size_t management_rounds = 0;
    std::size_t management_failures = 0;  // rounds whose output never validated
    std::size_t raw_trajectory_tokens = 0;
    std::size_t final_outline_tokens = 0;
    double compression_ratio = 0.0;  // final_outline / max(raw, 1)
    std::vector<EpisodeTiming> per_episode_timings;

    nlohmann::json to_json() const;
    static RunStats from_json(const nlohmann::json& doc);
};

enum class StatsFormat { Table, Json, Csv };
StatsFormat stats_format_from_string(const std::string& text);
std::string report_stats(const RunStats& stats, StatsFormat format);

struct ReplayResult {
    MemoryGraph graph;
    RunStats stats;
};

// Test/diagnostic hooks; every callback runs on the thread driving the
// replay, after the barrier fully completes.
struct RunObserver {
    std::function<void(const MemoryGraph& graph, const ApplyReport& report)> on_management_done;
};

// Replays a recorded trajectory: episodes are queued to a background
// memorizer (one in flight, FIFO) while the caller simulates reasoning
// time; when the running context total (outline at the last barrier + raw
// pending episodes) reaches the effective trigger, the queue is drained and
// a management round runs as a synchronous barrier. A round that leaves the
// outline over budget is retried once, then ContextOverflow is thrown. The
// final graph is persisted to config.persist_path (write-temp-then-rename)
// when set.
ReplayResult run_replay(const Trajectory& trajectory, const RuntimeConfig& config,
                        Backend& backend, const RunObserver& observer = {});

// Live (sidecar) mode: the reasoning agent pushes episodes as they finish
// and asks for its working context when it needs one. Memorization is
// asynchronous; get_context performs the management barrier first when the
// running total has crossed the trigger.
class SidecarHandle {
public:
    SidecarHandle(const std::string& task_text, const RuntimeConfig& config, Backend& backend);
    ~SidecarHandle();

    SidecarHandle(const SidecarHandle&) = delete;
    SidecarHandle& operator=(const SidecarHandle&) = delete;

    // Non-blocking enqueue (blocks only when the queue is at queue_depth).
    // Episode indices are assigned sequentially when the caller passes 0.
    void on_episode(Episode episode);

    // Latest projection; consolidation is eventual, so an episode enqueued a
    // moment ago may still appear in raw form.
    ProjectedContext get_context();

    MemoryGraph graph_snapshot() const;
    RunStats stats_snapshot() const;

    // Drains the queue and stops the worker; further calls on the handle
    // throw HandleClosed. Idempotent.
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace exmem
