#pragma once

#include <filesystem>
#include <string>

#include "exmem/runtime.hpp"

namespace exmem {

// Serves one SidecarHandle over a local stream socket. The wire format is
// one JSON object per line in both directions:
//
//   request   {"op": "episode", "payload": {"events": [...], "index": 0}}
//             {"op": "context"}
//             {"op": "stats"}
//             {"op": "close"}
//   response  {"ok": true,  "data": {...}}
//             {"ok": false, "error": {"code": "...", "message": "..."}}
//
// Episode events carry the same fields as trajectory event records (role,
// content, optional tool_name/tool_args). Clients may connect, disconnect,
// and reconnect; "close" drains the queue, answers, and ends serve().
class SidecarServer {
public:
    SidecarServer(std::filesystem::path socket_path, const std::string& task_text,
                  const RuntimeConfig& config, Backend& backend);
    ~SidecarServer();

    SidecarServer(const SidecarServer&) = delete;
    SidecarServer& operator=(const SidecarServer&) = delete;

    // Accepts clients until a close request (or stop()) arrives. Blocking;
    // callers wanting concurrency run it on their own thread.
    void serve();

    // Unblocks serve() from another thread; safe to call repeatedly.
    void stop();

    const std::filesystem::path& socket_path() const { return socket_path_; }
    SidecarHandle& handle() { return handle_; }

private:
    std::string handle_line(const std::string& line, bool& want_shutdown);
    void serve_connection(int client_fd, bool& want_shutdown);

    std::filesystem::path socket_path_;
    SidecarHandle handle_;
    int listen_fd_ = -1;
    std::size_t episodes_accepted_ = 0;
};

}  // namespace exmem
