#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exmem {

enum class TraceRole { System, User, Assistant, Tool };

const char* to_string(TraceRole role);
TraceRole trace_role_from_string(const std::string& text);

// One event of a raw reasoning trace. Tool events always carry tool_name;
// an assistant event carrying tool_name is a tool call and marks an episode
// boundary.
struct TraceEvent {
    TraceRole role = TraceRole::Assistant;
    std::string content;
    std::optional<std::string> tool_name;
    std::optional<std::string> tool_args;  // JSON text, passed through verbatim

    bool operator==(const TraceEvent&) const = default;
};

// A contiguous slice of the trace covering one completed tool round.
struct Episode {
    std::size_t index = 0;  // 1-based, contiguous
    std::vector<TraceEvent> events;
    std::size_t token_estimate = 0;  // over serialize_episode(*this)
};

struct Trajectory {
    std::string task_text;
    std::vector<TraceEvent> events;
    std::map<std::string, std::string> metadata;
};

// Pluggable token estimator; the default charges ceil(utf8_bytes / 4).
using TokenEstimator = std::function<std::size_t(std::string_view)>;
std::size_t estimate_tokens(std::string_view text);

// Reads the line format: a header {"task": ..., "metadata": {...}} followed
// by one event object per line (UTF-8, LF). Blank lines are skipped. Throws
// MissingHeader for an empty stream or a non-header first line, MalformedLine
// (message carries line number and byte offset) for any bad event line.
Trajectory read_trajectory(std::istream& in);
Trajectory read_trajectory_file(const std::filesystem::path& path);
void write_trajectory(std::ostream& out, const Trajectory& trajectory);

// Splits the trace into episodes: each tool-calling assistant event opens a
// round that absorbs everything up to the next tool call; leading events
// before the first call attach to the first round; a trace with no tool
// calls is one episode. Concatenating the slices reproduces the trace.
std::vector<Episode> segment_episodes(const Trajectory& trajectory,
                                      const TokenEstimator& estimator = {});

// Deterministic text form of an episode, used for prompts, pending-context
// rendering and token accounting.
std::string serialize_episode(const Episode& episode);

bool is_tool_call(const TraceEvent& event);

}  // namespace exmem
