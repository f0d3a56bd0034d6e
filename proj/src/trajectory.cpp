#include "exmem/trajectory.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "exmem/errors.hpp"

namespace exmem {

const char* to_string(TraceRole role) {
    switch (role) {
        case TraceRole::System: return "system";
        case TraceRole::User: return "user";
        case TraceRole::Assistant: return "assistant";
        case TraceRole::Tool: return "tool";
    }
    return "unknown";
}

TraceRole trace_role_from_string(const std::string& text) {
    if (text == "system") return TraceRole::System;
    if (text == "user") return TraceRole::User;
    if (text == "assistant") return TraceRole::Assistant;
    if (text == "tool") return TraceRole::Tool;
    throw Error(ErrorCode::InvalidArgument, "unknown trace role '" + text + "'");
}

std::size_t estimate_tokens(std::string_view text) {
    return (text.size() + 3) / 4;  // ceil(bytes / 4); "" -> 0
}

bool is_tool_call(const TraceEvent& event) {
    return event.role == TraceRole::Assistant && event.tool_name.has_value();
}

namespace {

[[noreturn]] void malformed(std::size_t line_no, std::size_t byte_offset,
                            const std::string& why) {
    throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + " (byte offset " +
                                              std::to_string(byte_offset) + "): " + why);
}

TraceEvent parse_event(const nlohmann::json& doc, std::size_t line_no,
                       std::size_t byte_offset) {
    if (!doc.is_object()) malformed(line_no, byte_offset, "event must be a JSON object");
    auto role_it = doc.find("role");
    auto content_it = doc.find("content");
    if (role_it == doc.end() || !role_it->is_string()) {
        malformed(line_no, byte_offset, "event needs a string 'role'");
    }
    if (content_it == doc.end() || !content_it->is_string()) {
        malformed(line_no, byte_offset, "event needs a string 'content'");
    }
    TraceEvent event;
    try {
        event.role = trace_role_from_string(role_it->get<std::string>());
    } catch (const Error&) {
        malformed(line_no, byte_offset, "unknown role '" + role_it->get<std::string>() + "'");
    }
    event.content = content_it->get<std::string>();
    if (auto it = doc.find("tool_name"); it != doc.end() && !it->is_null()) {
        if (!it->is_string()) malformed(line_no, byte_offset, "'tool_name' must be a string");
        event.tool_name = it->get<std::string>();
    }
    if (auto it = doc.find("tool_args"); it != doc.end() && !it->is_null()) {
        if (it->is_string()) {
            event.tool_args = it->get<std::string>();
        } else {
            event.tool_args = it->dump();  // accept structured args, keep the JSON text
        }
    }
    if (event.role == TraceRole::Tool && !event.tool_name.has_value()) {
        malformed(line_no, byte_offset, "tool event is missing 'tool_name'");
    }
    return event;
}

}  // namespace

Trajectory read_trajectory(std::istream& in) {
    Trajectory trajectory;
    std::string line;
    std::size_t line_no = 0;
    std::size_t byte_offset = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        line_no++;
        std::size_t line_start = byte_offset;
        byte_offset += line.size() + 1;  // account for the consumed LF
        if (line.empty()) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (!have_header) {
            if (doc.is_discarded() || !doc.is_object() || !doc.contains("task")) {
                throw Error(ErrorCode::MissingHeader,
                            "first line must be a {\"task\", \"metadata\"} header");
            }
            if (!doc["task"].is_string() || doc["task"].get<std::string>().empty()) {
                throw Error(ErrorCode::MissingHeader, "header 'task' must be a non-empty string");
            }
            trajectory.task_text = doc["task"].get<std::string>();
            if (auto it = doc.find("metadata"); it != doc.end() && !it->is_null()) {
                if (!it->is_object()) {
                    throw Error(ErrorCode::MissingHeader, "header 'metadata' must be an object");
                }
                for (const auto& [key, value] : it->items()) {
                    trajectory.metadata[key] =
                        value.is_string() ? value.get<std::string>() : value.dump();
                }
            }
            have_header = true;
            continue;
        }
        if (doc.is_discarded()) malformed(line_no, line_start, "not valid JSON");
        trajectory.events.push_back(parse_event(doc, line_no, line_start));
    }
    if (!have_header) {
        throw Error(ErrorCode::MissingHeader, "trajectory stream is empty");
    }
    return trajectory;
}

Trajectory read_trajectory_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::PersistError, "cannot open " + path.string());
    }
    return read_trajectory(in);
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory) {
    nlohmann::json metadata = nlohmann::json::object();
    for (const auto& [key, value] : trajectory.metadata) metadata[key] = value;
    out << nlohmann::json{{"task", trajectory.task_text}, {"metadata", std::move(metadata)}}.dump()
        << "\n";
    for (const TraceEvent& event : trajectory.events) {
        nlohmann::json doc{{"role", to_string(event.role)}, {"content", event.content}};
        if (event.tool_name) doc["tool_name"] = *event.tool_name;
        if (event.tool_args) doc["tool_args"] = *event.tool_args;
        out << doc.dump() << "\n";
    }
}

std::vector<Episode> segment_episodes(const Trajectory& trajectory,
                                      const TokenEstimator& estimator) {
    const TokenEstimator& estimate =
        estimator ? estimator : TokenEstimator([](std::string_view t) { return estimate_tokens(t); });
    std::vector<Episode> episodes;
    std::vector<TraceEvent> current;
    bool call_in_current = false;
    auto close_current = [&]() {
        if (current.empty()) return;
        Episode episode;
        episode.index = episodes.size() + 1;
        episode.events = std::move(current);
        current.clear();
        episodes.push_back(std::move(episode));
    };
    for (const TraceEvent& event : trajectory.events) {
        if (is_tool_call(event) && call_in_current) {
            close_current();
            call_in_current = false;
        }
        current.push_back(event);
        call_in_current = call_in_current || is_tool_call(event);
    }
    close_current();
    for (Episode& episode : episodes) {
        episode.token_estimate = estimate(serialize_episode(episode));
    }
    return episodes;
}

std::string serialize_episode(const Episode& episode) {
    std::ostringstream out;
    out << "[episode " << episode.index << "]\n";
    for (const TraceEvent& event : episode.events) {
        switch (event.role) {
            case TraceRole::System:
                out << "system: " << event.content << "\n";
                break;
            case TraceRole::User:
                out << "user: " << event.content << "\n";
                break;
            case TraceRole::Assistant:
                if (event.tool_name) {
                    out << "assistant [tool_call " << *event.tool_name << " "
                        << event.tool_args.value_or("{}") << "]: " << event.content << "\n";
                } else {
                    out << "assistant: " << event.content << "\n";
                }
                break;
            case TraceRole::Tool:
                out << "tool " << event.tool_name.value_or("?") << ": " << event.content << "\n";
                break;
        }
    }
    return out.str();
}

}  // namespace exmem
