#include "exmem/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "exmem/errors.hpp"

namespace exmem {

void BackendConfig::validate() const {
    if (kind == BackendKind::Http && base_url.empty()) {
        throw Error(ErrorCode::ConfigError, "http backend needs a base_url");
    }
    if (kind == BackendKind::Scripted && script_path.empty()) {
        throw Error(ErrorCode::ConfigError, "scripted backend needs a script path");
    }
    if (temperature < 0.0 || temperature > 1.0) {
        throw Error(ErrorCode::ConfigError, "temperature must be within [0, 1]");
    }
    if (timeout_ms <= 0) {
        throw Error(ErrorCode::ConfigError, "timeout_ms must be positive");
    }
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses, int latency_ms)
    : mutex_(std::make_unique<std::mutex>()),
      queue_(responses.begin(), responses.end()),
      latency_ms_(latency_ms) {}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path, int latency_ms) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot open script file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc = nlohmann::json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::ConfigError, "script file is not valid JSON: " + path.string());
    }
    if (doc.is_object() && doc.contains("responses")) doc = doc["responses"];
    if (!doc.is_array()) {
        throw Error(ErrorCode::ConfigError,
                    "script file must be a JSON array of strings: " + path.string());
    }
    std::vector<std::string> responses;
    for (const nlohmann::json& item : doc) {
        if (!item.is_string()) {
            throw Error(ErrorCode::ConfigError,
                        "script entries must be strings: " + path.string());
        }
        responses.push_back(item.get<std::string>());
    }
    return ScriptedBackend(std::move(responses), latency_ms);
}

std::string ScriptedBackend::complete(const std::vector<ChatMessage>&) {
    if (latency_ms_ > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
    }
    std::lock_guard<std::mutex> lock(*mutex_);
    if (queue_.empty()) {
        throw Error(ErrorCode::ScriptExhausted,
                    "script exhausted after " + std::to_string(served_) + " responses");
    }
    std::string next = std::move(queue_.front());
    queue_.pop_front();
    served_++;
    return next;
}

std::size_t ScriptedBackend::served() const {
    std::lock_guard<std::mutex> lock(*mutex_);
    return served_;
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard<std::mutex> lock(*mutex_);
    return queue_.size();
}

namespace {

struct ParsedUrl {
    std::string host_part;    // scheme://host[:port], what httplib::Client takes
    std::string path_prefix;  // optional path before /chat/completions
};

ParsedUrl split_base_url(const std::string& base_url) {
    std::size_t scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "base_url must start with http:// or https://");
    }
    std::size_t path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {base_url, ""};
    }
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

std::string body_excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return body;
    return body.substr(0, kMax) + "...";
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
}

std::string HttpBackend::complete(const std::vector<ChatMessage>& messages) {
    ParsedUrl url = split_base_url(config_.base_url);
    httplib::Client client(url.host_part);
    client.set_connection_timeout(0, config_.timeout_ms * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    httplib::Headers headers;
    if (!config_.auth_token_env.empty()) {
        if (const char* token = std::getenv(config_.auth_token_env.c_str());
            token != nullptr && token[0] != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    nlohmann::json body{{"model", config_.model_id}, {"temperature", config_.temperature}};
    nlohmann::json msgs = nlohmann::json::array();
    for (const ChatMessage& m : messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    body["messages"] = std::move(msgs);

    httplib::Result res = client.Post(url.path_prefix + "/chat/completions", headers,
                                      body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::BackendUnavailable,
                    "transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::BackendUnavailable, "status " + std::to_string(res->status) +
                                                       ": " + body_excerpt(res->body));
    }
    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty() || !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content") ||
        !doc["choices"][0]["message"]["content"].is_string()) {
        throw Error(ErrorCode::BackendUnavailable,
                    "malformed completion response: " + body_excerpt(res->body));
    }
    return doc["choices"][0]["message"]["content"].get<std::string>();
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    config.validate();
    if (config.kind == BackendKind::Scripted) {
        return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(config.script_path));
    }
    return std::make_unique<HttpBackend>(config);
}

}  // namespace exmem
