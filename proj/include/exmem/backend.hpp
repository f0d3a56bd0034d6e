#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace exmem {

// One turn of a completion request. Role is "system", "user" or "assistant".
struct ChatMessage {
    std::string role;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

enum class BackendKind { Scripted, Http };

struct BackendConfig {
    BackendKind kind = BackendKind::Scripted;
    std::string base_url;        // http backend: scheme://host[:port][/prefix]
    std::string model_id;        // http backend: value of the "model" field
    std::string auth_token_env;  // NAME of the env var holding the bearer token
    int timeout_ms = 30'000;
    double temperature = 0.0;       // validate() requires [0, 1]
    std::string script_path;        // scripted backend: response file

    void validate() const;  // throws ConfigError
};

// Completion source. Implementations never touch graph state; they map a
// message list to raw model text.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

// Replays a fixed queue of responses in order. Overrunning the queue throws
// ScriptExhausted -- a script never silently repeats.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(std::vector<std::string> responses, int latency_ms = 0);

    // Loads a JSON array of strings (or {"responses": [...]}) from disk.
    static ScriptedBackend from_file(const std::filesystem::path& path, int latency_ms = 0);

    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::size_t served() const;
    std::size_t remaining() const;

private:
    // Behind a pointer so the backend stays movable (from_file returns by
    // value); a moved-from backend is only ever destroyed.
    mutable std::unique_ptr<std::mutex> mutex_;
    std::deque<std::string> queue_;
    std::size_t served_ = 0;
    int latency_ms_ = 0;  // simulated per-call latency, used by timing tests
};

// POSTs {base_url}/chat/completions with {"model", "messages",
// "temperature"} and returns choices[0].message.content. The bearer token is
// read from the env var named in the config at request time; no retries.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendConfig config);
    std::string complete(const std::vector<ChatMessage>& messages) override;

private:
    BackendConfig config_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace exmem
