#include "exmem/sidecar_server.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "exmem/errors.hpp"

namespace exmem {

namespace {

nlohmann::json ok_response(nlohmann::json data) {
    return nlohmann::json{{"ok", true}, {"data", std::move(data)}};
}

nlohmann::json error_response(const std::string& code, const std::string& message) {
    return nlohmann::json{{"ok", false},
                          {"error", {{"code", code}, {"message", message}}}};
}

TraceEvent event_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::ProtocolViolation, "episode event must be a JSON object");
    }
    TraceEvent event;
    try {
        event.role = trace_role_from_string(doc.at("role").get<std::string>());
        event.content = doc.at("content").get<std::string>();
    } catch (const nlohmann::json::exception& err) {
        throw Error(ErrorCode::ProtocolViolation,
                    std::string("episode event is malformed: ") + err.what());
    }
    if (doc.contains("tool_name")) {
        event.tool_name = doc.at("tool_name").get<std::string>();
    }
    if (doc.contains("tool_args")) {
        const nlohmann::json& args = doc.at("tool_args");
        event.tool_args = args.is_string() ? args.get<std::string>() : args.dump();
    }
    return event;
}

void write_all(int fd, const std::string& text) {
    std::size_t sent = 0;
    while (sent < text.size()) {
        ssize_t n = ::send(fd, text.data() + sent, text.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return;  // client went away; nothing sensible to do
        }
        sent += static_cast<std::size_t>(n);
    }
}

}  // namespace

SidecarServer::SidecarServer(std::filesystem::path socket_path, const std::string& task_text,
                             const RuntimeConfig& config, Backend& backend)
    : socket_path_(std::move(socket_path)), handle_(task_text, config, backend) {
    std::string path = socket_path_.string();
    if (path.size() >= sizeof(sockaddr_un{}.sun_path)) {
        throw Error(ErrorCode::ConfigError, "socket path is too long: " + path);
    }
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        throw Error(ErrorCode::ConfigError,
                    std::string("cannot create socket: ") + std::strerror(errno));
    }
    ::unlink(path.c_str());  // stale socket from a previous run
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
        ::listen(listen_fd_, 8) < 0) {
        int saved = errno;
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw Error(ErrorCode::ConfigError,
                    "cannot bind/listen on " + path + ": " + std::strerror(saved));
    }
}

SidecarServer::~SidecarServer() {
    stop();
    try {
        handle_.close();
    } catch (...) {
        // best effort; the handle's destructor also stops the worker
    }
}

void SidecarServer::stop() {
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
        ::unlink(socket_path_.string().c_str());
    }
}

std::string SidecarServer::handle_line(const std::string& line, bool& want_shutdown) {
    nlohmann::json response;
    try {
        nlohmann::json request = nlohmann::json::parse(line, nullptr, false);
        if (request.is_discarded() || !request.is_object() || !request.contains("op") ||
            !request.at("op").is_string()) {
            throw Error(ErrorCode::ProtocolViolation,
                        "request must be a JSON object with a string \"op\" field");
        }
        const std::string op = request.at("op").get<std::string>();
        const nlohmann::json payload = request.value("payload", nlohmann::json::object());
        if (op == "episode") {
            if (!payload.contains("events") || !payload.at("events").is_array() ||
                payload.at("events").empty()) {
                throw Error(ErrorCode::ProtocolViolation,
                            "episode payload needs a non-empty \"events\" array");
            }
            Episode episode;
            episode.index = payload.value("index", std::size_t{0});
            for (const nlohmann::json& item : payload.at("events")) {
                episode.events.push_back(event_from_json(item));
            }
            handle_.on_episode(std::move(episode));
            episodes_accepted_++;
            response = ok_response({{"queued", episodes_accepted_}});
        } else if (op == "context") {
            ProjectedContext context = handle_.get_context();
            response = ok_response({{"rendered", context.rendered},
                                    {"token_count", context.token_count},
                                    {"included_ids", context.included_ids},
                                    {"omitted_inactive", context.omitted_inactive}});
        } else if (op == "stats") {
            response = ok_response(handle_.stats_snapshot().to_json());
        } else if (op == "close") {
            handle_.close();
            want_shutdown = true;
            response = ok_response(nlohmann::json::object());
        } else {
            throw Error(ErrorCode::ProtocolViolation, "unknown op \"" + op + "\"");
        }
    } catch (const Error& err) {
        response = error_response(error_code_name(err.code()), err.what());
    } catch (const std::exception& err) {
        response = error_response("InternalError", err.what());
    }
    return response.dump() + "\n";
}

void SidecarServer::serve_connection(int client_fd, bool& want_shutdown) {
    std::string buffer;
    char chunk[4096];
    while (!want_shutdown) {
        ssize_t n = ::recv(client_fd, chunk, sizeof(chunk), 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;  // client hung up
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t newline;
        while (!want_shutdown && (newline = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, newline);
            buffer.erase(0, newline + 1);
            if (line.empty()) continue;
            write_all(client_fd, handle_line(line, want_shutdown));
        }
    }
}

void SidecarServer::serve() {
    bool want_shutdown = false;
    while (!want_shutdown && listen_fd_ >= 0) {
        int client_fd = ::accept(listen_fd_, nullptr, nullptr);
        if (client_fd < 0) {
            if (errno == EINTR) continue;
            break;  // stop() closed the listener
        }
        serve_connection(client_fd, want_shutdown);
        ::close(client_fd);
    }
    stop();
}

}  // namespace exmem
