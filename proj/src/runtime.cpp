#include "exmem/runtime.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "exmem/construction.hpp"
#include "exmem/errors.hpp"

namespace exmem {

void RuntimeConfig::validate() const {
    if (budget_tokens < 1'024) {
        throw Error(ErrorCode::ConfigError, "budget_tokens must be at least 1024");
    }
    if (retry_limit < 0) {
        throw Error(ErrorCode::ConfigError, "retry_limit must not be negative");
    }
    if (thrash_bump < 0.0) {
        throw Error(ErrorCode::ConfigError, "thrash_bump must not be negative");
    }
    if (queue_depth == 0) {
        throw Error(ErrorCode::ConfigError, "queue_depth must be at least 1");
    }
}

nlohmann::json RunStats::to_json() const {
    nlohmann::json timings = nlohmann::json::array();
    for (const EpisodeTiming& timing : per_episode_timings) {
        timings.push_back({{"reasoning_ms", timing.reasoning_ms},
                           {"memorize_ms", timing.memorize_ms}});
    }
    return nlohmann::json{{"episodes_total", episodes_total},
                          {"episodes_skipped", episodes_skipped},
                          {"thoughts_created", thoughts_created},
                          {"folds_applied", folds_applied},
                          {"flushes_applied", flushes_applied},
                          {"summaries_created", summaries_created},
                          {"management_rounds", management_rounds},
                          {"management_failures", management_failures},
                          {"raw_trajectory_tokens", raw_trajectory_tokens},
                          {"final_outline_tokens", final_outline_tokens},
                          {"compression_ratio", compression_ratio},
                          {"per_episode_timings", std::move(timings)}};
}

RunStats RunStats::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "stats document must be a JSON object");
    }
    RunStats stats;
    try {
        stats.episodes_total = doc.at("episodes_total").get<std::size_t>();
        stats.episodes_skipped = doc.at("episodes_skipped").get<std::size_t>();
        stats.thoughts_created = doc.at("thoughts_created").get<std::size_t>();
        stats.folds_applied = doc.at("folds_applied").get<std::size_t>();
        stats.flushes_applied = doc.at("flushes_applied").get<std::size_t>();
        stats.summaries_created = doc.at("summaries_created").get<std::size_t>();
        stats.management_rounds = doc.at("management_rounds").get<std::size_t>();
        stats.management_failures = doc.at("management_failures").get<std::size_t>();
        stats.raw_trajectory_tokens = doc.at("raw_trajectory_tokens").get<std::size_t>();
        stats.final_outline_tokens = doc.at("final_outline_tokens").get<std::size_t>();
        stats.compression_ratio = doc.at("compression_ratio").get<double>();
        for (const nlohmann::json& item : doc.at("per_episode_timings")) {
            EpisodeTiming timing;
            timing.reasoning_ms = item.at("reasoning_ms").get<std::int64_t>();
            timing.memorize_ms = item.at("memorize_ms").get<std::int64_t>();
            stats.per_episode_timings.push_back(timing);
        }
    } catch (const nlohmann::json::exception& err) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string("stats document is malformed: ") + err.what());
    }
    return stats;
}

StatsFormat stats_format_from_string(const std::string& text) {
    if (text == "table") return StatsFormat::Table;
    if (text == "json") return StatsFormat::Json;
    if (text == "csv") return StatsFormat::Csv;
    throw Error(ErrorCode::InvalidArgument,
                "unknown stats format \"" + text + "\" (expected table, json, or csv)");
}

std::string report_stats(const RunStats& stats, StatsFormat format) {
    std::int64_t reasoning_total = 0;
    std::int64_t memorize_total = 0;
    for (const EpisodeTiming& timing : stats.per_episode_timings) {
        reasoning_total += timing.reasoning_ms;
        memorize_total += timing.memorize_ms;
    }
    switch (format) {
        case StatsFormat::Json:
            return stats.to_json().dump(2) + "\n";
        case StatsFormat::Csv: {
            std::ostringstream out;
            out << "episodes_total,episodes_skipped,thoughts_created,folds_applied,"
                   "flushes_applied,summaries_created,management_rounds,management_failures,"
                   "raw_trajectory_tokens,final_outline_tokens,compression_ratio,"
                   "reasoning_ms_total,memorize_ms_total\n";
            out << stats.episodes_total << ',' << stats.episodes_skipped << ','
                << stats.thoughts_created << ',' << stats.folds_applied << ','
                << stats.flushes_applied << ',' << stats.summaries_created << ','
                << stats.management_rounds << ',' << stats.management_failures << ','
                << stats.raw_trajectory_tokens << ',' << stats.final_outline_tokens << ','
                << std::setprecision(6) << stats.compression_ratio << ','
                << reasoning_total << ',' << memorize_total << '\n';
            return out.str();
        }
        case StatsFormat::Table:
            break;
    }
    std::ostringstream out;
    auto row = [&out](const std::string& key, const std::string& value) {
        out << "  " << std::left << std::setw(24) << key << value << '\n';
    };
    row("episodes_total", std::to_string(stats.episodes_total));
    row("episodes_skipped", std::to_string(stats.episodes_skipped));
    row("thoughts_created", std::to_string(stats.thoughts_created));
    row("folds_applied", std::to_string(stats.folds_applied));
    row("flushes_applied", std::to_string(stats.flushes_applied));
    row("summaries_created", std::to_string(stats.summaries_created));
    row("management_rounds", std::to_string(stats.management_rounds));
    row("management_failures", std::to_string(stats.management_failures));
    row("raw_trajectory_tokens", std::to_string(stats.raw_trajectory_tokens));
    row("final_outline_tokens", std::to_string(stats.final_outline_tokens));
    {
        std::ostringstream ratio;
        ratio << std::fixed << std::setprecision(4) << stats.compression_ratio;
        row("compression_ratio", ratio.str());
    }
    row("reasoning_ms_total", std::to_string(reasoning_total));
    row("memorize_ms_total", std::to_string(memorize_total));
    return out.str();
}

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ms_since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

// The engine behind both replay and sidecar mode: one background memorizer
// consuming a FIFO episode queue, with management running as a synchronous
// barrier on the driving thread. The running context total is (outline
// tokens at the last barrier) + (raw tokens enqueued since); it depends only
// on the episode sequence and the script, never on worker timing, so a
// concurrent run triggers management at exactly the same points as a
// sequential one.
class Engine {
public:
    Engine(const std::string& task_text, const RuntimeConfig& config, Backend& backend,
           RunObserver observer)
        : config_(config),
          backend_(backend),
          observer_(std::move(observer)),
          graph_(MemoryGraph::create(task_text)) {
        effective_trigger_ = config_.budget_tokens;
        outline_base_tokens_ = estimate_tokens(render_graph_outline(graph_, false));
        worker_ = std::thread([this] { worker_loop(); });
    }

    ~Engine() { stop_worker(); }

    void add_episode_totals(const Episode& episode) {
        std::lock_guard<std::mutex> lock(stats_mutex_);
        stats_.episodes_total++;
        stats_.raw_trajectory_tokens += episode.token_estimate;
        if (stats_.per_episode_timings.size() < episode.index) {
            stats_.per_episode_timings.resize(episode.index);
        }
    }

    void record_reasoning(std::size_t episode_index, std::int64_t ms) {
        std::lock_guard<std::mutex> lock(stats_mutex_);
        if (stats_.per_episode_timings.size() < episode_index) {
            stats_.per_episode_timings.resize(episode_index);
        }
        stats_.per_episode_timings[episode_index - 1].reasoning_ms = ms;
    }

    void enqueue(Episode episode) {
        std::unique_lock<std::mutex> lock(queue_mutex_);
        rethrow_worker_error_locked();
        space_cv_.wait(lock, [&] {
            return worker_error_ || stop_ || queue_.size() < config_.queue_depth;
        });
        rethrow_worker_error_locked();
        if (stop_) {
            throw Error(ErrorCode::HandleClosed, "engine is stopped");
        }
        pending_tokens_ += episode.token_estimate;
        queue_.push_back(std::move(episode));
        work_cv_.notify_one();
    }

    bool trigger_due() {
        std::lock_guard<std::mutex> lock(queue_mutex_);
        return should_trigger(outline_base_tokens_ + pending_tokens_, effective_trigger_);
    }

    // Synchronous management barrier: drain the memorization queue, freeze
    // the worker, run a round (retrying once if the outline is still over
    // budget), re-project, resume. Throws ContextOverflow when two rounds
    // cannot bring the outline under budget.
    void barrier_and_manage() {
        freeze_worker();
        std::uint64_t expected_epoch = epoch_.load();
        try {
            run_management_round(expected_epoch);
            std::size_t outline_tokens = current_outline_tokens();
            if (outline_tokens > config_.budget_tokens) {
                run_management_round(expected_epoch);
                outline_tokens = current_outline_tokens();
                if (outline_tokens > config_.budget_tokens) {
                    throw Error(ErrorCode::ContextOverflow,
                                "outline is " + std::to_string(outline_tokens) +
                                    " tokens after management, budget is " +
                                    std::to_string(config_.budget_tokens));
                }
            }
            std::lock_guard<std::mutex> lock(queue_mutex_);
            outline_base_tokens_ = outline_tokens;
            pending_tokens_ = 0;
            for (const Episode& episode : queue_) {
                pending_tokens_ += episode.token_estimate;  // arrivals during the barrier
            }
            barrier_ = false;
        } catch (...) {
            std::lock_guard<std::mutex> lock(queue_mutex_);
            barrier_ = false;
            work_cv_.notify_all();
            throw;
        }
        work_cv_.notify_all();
    }

    void drain() {
        std::unique_lock<std::mutex> lock(queue_mutex_);
        idle_cv_.wait(lock, [&] { return worker_error_ || (queue_.empty() && !busy_); });
        rethrow_worker_error_locked();
    }

    void stop_worker() {
        {
            std::lock_guard<std::mutex> lock(queue_mutex_);
            stop_ = true;
        }
        work_cv_.notify_all();
        space_cv_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

    MemoryGraph graph_snapshot() const {
        std::lock_guard<std::mutex> lock(graph_mutex_);
        return graph_;
    }

    std::pair<MemoryGraph, std::vector<Episode>> snapshot_with_pending() const {
        std::vector<Episode> pending;
        {
            std::lock_guard<std::mutex> lock(queue_mutex_);
            if (in_flight_) pending.push_back(*in_flight_);
            pending.insert(pending.end(), queue_.begin(), queue_.end());
        }
        return {graph_snapshot(), std::move(pending)};
    }

    RunStats stats_snapshot() const {
        RunStats out;
        {
            std::lock_guard<std::mutex> lock(stats_mutex_);
            out = stats_;
        }
        out.final_outline_tokens = estimate_tokens(render_graph_outline(graph_snapshot(), false));
        out.compression_ratio = static_cast<double>(out.final_outline_tokens) /
                                static_cast<double>(std::max<std::size_t>(out.raw_trajectory_tokens, 1));
        return out;
    }

    const RuntimeConfig& config() const { return config_; }

private:
    void rethrow_worker_error_locked() {
        if (worker_error_) std::rethrow_exception(worker_error_);
    }

    std::size_t current_outline_tokens() const {
        return estimate_tokens(render_graph_outline(graph_snapshot(), false));
    }

    void bump_trigger() {
        std::lock_guard<std::mutex> lock(queue_mutex_);
        effective_trigger_ = static_cast<std::size_t>(
            std::ceil(static_cast<double>(effective_trigger_) * (1.0 + config_.thrash_bump)));
    }

    // Waits until the queue is drained and the worker idle, then freezes the
    // worker so nothing can interleave with apply_operations. Re-checks
    // after setting the flag because a sidecar client may enqueue while we
    // wait.
    void freeze_worker() {
        std::unique_lock<std::mutex> lock(queue_mutex_);
        for (;;) {
            idle_cv_.wait(lock, [&] { return worker_error_ || (queue_.empty() && !busy_); });
            rethrow_worker_error_locked();
            barrier_ = true;
            if (queue_.empty() && !busy_) break;
            barrier_ = false;
        }
    }

    // One management round: render, complete (with corrective retries on
    // protocol violations), validate, apply. Counts the round; a round with
    // nothing applicable raises the effective trigger so the next check does
    // not refire immediately.
    void run_management_round(std::uint64_t& expected_epoch) {
        {
            std::lock_guard<std::mutex> lock(stats_mutex_);
            stats_.management_rounds++;
        }
        MemoryGraph snapshot = graph_snapshot();
        std::vector<ChatMessage> messages = render_management_prompt(snapshot);
        for (int attempt = 0; attempt <= config_.retry_limit; attempt++) {
            std::string text = backend_.complete(messages);
            OperationSet ops;
            try {
                ops = parse_operation_set(text);
            } catch (const Error& err) {
                if (err.code() != ErrorCode::ProtocolViolation) throw;
                messages.push_back(ChatMessage{"assistant", text});
                messages.push_back(ChatMessage{
                    "user", std::string("Your previous operation set was rejected: ") +
                                err.what() +
                                ". Respond again with a single corrected JSON object."});
                continue;
            }
            ValidatedOperationSet validated = validate_operation_set(snapshot, ops);
            if (validated.ops.empty()) {
                bump_trigger();
                return;
            }
            ApplyReport report;
            {
                std::lock_guard<std::mutex> lock(graph_mutex_);
                if (epoch_.load() != expected_epoch) {
                    throw std::logic_error("construction interleaved with a management barrier");
                }
                report = apply_operations(graph_, validated);
                epoch_++;
                expected_epoch++;
            }
            {
                std::lock_guard<std::mutex> lock(stats_mutex_);
                stats_.folds_applied += report.folded;
                stats_.flushes_applied += report.flushed;
                stats_.summaries_created += report.summary_ids.size();
            }
            if (observer_.on_management_done) {
                observer_.on_management_done(graph_snapshot(), report);
            }
            return;
        }
        // Every attempt failed to parse: record the failure, avoid thrash.
        {
            std::lock_guard<std::mutex> lock(stats_mutex_);
            stats_.management_failures++;
        }
        bump_trigger();
    }

    void worker_loop() {
        for (;;) {
            Episode episode;
            {
                std::unique_lock<std::mutex> lock(queue_mutex_);
                work_cv_.wait(lock, [&] { return stop_ || (!queue_.empty() && !barrier_); });
                if (stop_) return;
                episode = std::move(queue_.front());
                queue_.pop_front();
                in_flight_ = episode;
                busy_ = true;
                space_cv_.notify_one();
            }
            Clock::time_point started = Clock::now();
            MemorizeOutcome outcome;
            bool failed = false;
            try {
                // Memorize against a private copy, commit on success; the
                // worker is the only graph writer between barriers, so the
                // copy cannot go stale.
                MemoryGraph local = graph_snapshot();
                outcome = memorize_episode(local, episode, backend_, config_.retry_limit);
                if (!outcome.skipped) {
                    std::lock_guard<std::mutex> lock(graph_mutex_);
                    graph_ = std::move(local);
                    epoch_++;
                }
            } catch (...) {
                failed = true;
                std::lock_guard<std::mutex> lock(queue_mutex_);
                worker_error_ = std::current_exception();
            }
            if (!failed) {
                std::lock_guard<std::mutex> lock(stats_mutex_);
                stats_.thoughts_created += outcome.created.size();
                if (outcome.skipped) stats_.episodes_skipped++;
                if (stats_.per_episode_timings.size() < episode.index) {
                    stats_.per_episode_timings.resize(episode.index);
                }
                stats_.per_episode_timings[episode.index - 1].memorize_ms = ms_since(started);
            }
            {
                std::lock_guard<std::mutex> lock(queue_mutex_);
                in_flight_.reset();
                busy_ = false;
                idle_cv_.notify_all();
                space_cv_.notify_all();
            }
            if (failed) return;
        }
    }

    RuntimeConfig config_;
    Backend& backend_;
    RunObserver observer_;

    MemoryGraph graph_;  // guarded by graph_mutex_
    mutable std::mutex graph_mutex_;
    std::atomic<std::uint64_t> epoch_{0};  // bumped on every graph commit

    mutable std::mutex queue_mutex_;  // queue, accounting, worker flags
    std::condition_variable work_cv_, space_cv_, idle_cv_;
    std::deque<Episode> queue_;
    std::optional<Episode> in_flight_;
    bool busy_ = false;
    bool barrier_ = false;
    bool stop_ = false;
    std::exception_ptr worker_error_;
    std::size_t outline_base_tokens_ = 0;
    std::size_t pending_tokens_ = 0;
    std::size_t effective_trigger_ = 0;

    RunStats stats_;  // guarded by stats_mutex_
    mutable std::mutex stats_mutex_;

    std::thread worker_;
};

// Per-episode simulated reasoning time: an explicit config override wins,
// then the uniform metadata value, then per-event timestamps (delta between
// consecutive episode end marks); otherwise zero.
std::vector<std::int64_t> reasoning_delays(const Trajectory& trajectory,
                                           const std::vector<Episode>& episodes,
                                           const RuntimeConfig& config) {
    std::vector<std::int64_t> delays(episodes.size(), 0);
    if (config.reasoning_delay_ms) {
        std::fill(delays.begin(), delays.end(), std::max(0, *config.reasoning_delay_ms));
        return delays;
    }
    if (auto it = trajectory.metadata.find("reasoning_delay_ms");
        it != trajectory.metadata.end()) {
        std::int64_t value = 0;
        try {
            value = std::stoll(it->second);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "metadata reasoning_delay_ms is not a number");
        }
        std::fill(delays.begin(), delays.end(), std::max<std::int64_t>(0, value));
        return delays;
    }
    auto it = trajectory.metadata.find("event_timestamps_ms");
    if (it == trajectory.metadata.end()) return delays;
    std::vector<std::int64_t> stamps;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            stamps.push_back(std::stoll(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "metadata event_timestamps_ms has a non-number");
        }
    }
    if (stamps.size() != trajectory.events.size()) {
        throw Error(ErrorCode::ConfigError,
                    "event_timestamps_ms must list one timestamp per event");
    }
    std::size_t offset = 0;
    std::int64_t previous_end = stamps.empty() ? 0 : stamps.front();
    for (std::size_t i = 0; i < episodes.size(); i++) {
        offset += episodes[i].events.size();
        std::int64_t end = stamps[offset - 1];
        delays[i] = std::max<std::int64_t>(0, end - previous_end);
        previous_end = end;
    }
    return delays;
}

}  // namespace

ReplayResult run_replay(const Trajectory& trajectory, const RuntimeConfig& config,
                        Backend& backend, const RunObserver& observer) {
    config.validate();
    std::vector<Episode> episodes = segment_episodes(trajectory);
    std::vector<std::int64_t> delays = reasoning_delays(trajectory, episodes, config);

    Engine engine(trajectory.task_text, config, backend, observer);
    for (const Episode& episode : episodes) engine.add_episode_totals(episode);
    for (std::size_t i = 0; i < episodes.size(); i++) {
        if (delays[i] > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delays[i]));
        }
        engine.record_reasoning(episodes[i].index, delays[i]);
        engine.enqueue(episodes[i]);
        if (engine.trigger_due()) {
            engine.barrier_and_manage();
        }
    }
    engine.drain();
    engine.stop_worker();

    ReplayResult result{engine.graph_snapshot(), engine.stats_snapshot()};
    if (config.persist_path) {
        result.graph.save_file(*config.persist_path);
    }
    return result;
}

struct SidecarHandle::Impl {
    Impl(const std::string& task_text, const RuntimeConfig& config, Backend& backend)
        : engine(task_text, config, backend, RunObserver{}) {}

    Engine engine;
    std::atomic<bool> closed{false};
    std::mutex serial_mutex;  // serializes enqueue indexing and barriers
    std::size_t next_index = 1;
};

SidecarHandle::SidecarHandle(const std::string& task_text, const RuntimeConfig& config,
                             Backend& backend) {
    config.validate();
    impl_ = std::make_unique<Impl>(task_text, config, backend);
}

SidecarHandle::~SidecarHandle() {
    if (impl_ && !impl_->closed.load()) {
        try {
            close();
        } catch (...) {
            // destructor must not throw; the worker is stopped regardless
        }
    }
}

void SidecarHandle::on_episode(Episode episode) {
    if (impl_->closed.load()) {
        throw Error(ErrorCode::HandleClosed, "sidecar handle is closed");
    }
    std::lock_guard<std::mutex> lock(impl_->serial_mutex);
    if (episode.index == 0) episode.index = impl_->next_index;
    if (episode.index >= impl_->next_index) impl_->next_index = episode.index + 1;
    if (episode.token_estimate == 0) {
        episode.token_estimate = estimate_tokens(serialize_episode(episode));
    }
    impl_->engine.add_episode_totals(episode);
    impl_->engine.enqueue(std::move(episode));
}

ProjectedContext SidecarHandle::get_context() {
    if (impl_->closed.load()) {
        throw Error(ErrorCode::HandleClosed, "sidecar handle is closed");
    }
    std::lock_guard<std::mutex> lock(impl_->serial_mutex);
    if (impl_->engine.trigger_due()) {
        impl_->engine.barrier_and_manage();
    }
    auto [graph, pending] = impl_->engine.snapshot_with_pending();
    try {
        return project_context(graph, pending, impl_->engine.config().budget_tokens);
    } catch (const Error& err) {
        if (err.code() != ErrorCode::BudgetUnsatisfiable) throw;
        // Construction outgrew the raw episodes it consumed; force a
        // barrier even though the trigger had not fired.
        impl_->engine.barrier_and_manage();
        auto [graph2, pending2] = impl_->engine.snapshot_with_pending();
        return project_context(graph2, pending2, impl_->engine.config().budget_tokens);
    }
}

MemoryGraph SidecarHandle::graph_snapshot() const { return impl_->engine.graph_snapshot(); }

RunStats SidecarHandle::stats_snapshot() const { return impl_->engine.stats_snapshot(); }

void SidecarHandle::close() {
    bool expected = false;
    if (!impl_->closed.compare_exchange_strong(expected, true)) return;
    std::lock_guard<std::mutex> lock(impl_->serial_mutex);
    impl_->engine.drain();
    impl_->engine.stop_worker();
}

}  // namespace exmem
