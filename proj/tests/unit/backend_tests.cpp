#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "exmem/backend.hpp"
#include "exmem/errors.hpp"

using namespace exmem;

namespace {

bool throws_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& err) {
        return err.code() == code;
    }
    return false;
}

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    return path;
}

// Minimal in-process completion endpoint for exercising the HTTP backend.
class LocalServer {
public:
    explicit LocalServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~LocalServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("scripted backend replays responses in order and then refuses") {
    ScriptedBackend backend({"one", "two"});
    CHECK(backend.remaining() == 2);
    CHECK(backend.complete({}) == "one");
    CHECK(backend.complete({}) == "two");
    CHECK(backend.served() == 2);
    CHECK(backend.remaining() == 0);
    CHECK(throws_code(ErrorCode::ScriptExhausted, [&] { backend.complete({}); }));
}

TEST_CASE("scripted backend loads both accepted file shapes") {
    auto bare = write_temp("exmem_script_bare.json", R"(["a", "b"])");
    ScriptedBackend from_bare = ScriptedBackend::from_file(bare);
    CHECK(from_bare.remaining() == 2);
    CHECK(from_bare.complete({}) == "a");

    auto keyed = write_temp("exmem_script_keyed.json", R"({"responses": ["x"]})");
    ScriptedBackend from_keyed = ScriptedBackend::from_file(keyed);
    CHECK(from_keyed.complete({}) == "x");

    auto bad = write_temp("exmem_script_bad.json", R"({"responses": "not a list"})");
    CHECK(throws_code(ErrorCode::ConfigError, [&] { ScriptedBackend::from_file(bad); }));
    CHECK(throws_code(ErrorCode::ConfigError,
                      [] { ScriptedBackend::from_file("/nonexistent/script.json"); }));
    std::filesystem::remove(bare);
    std::filesystem::remove(keyed);
    std::filesystem::remove(bad);
}

TEST_CASE("backend config validation") {
    BackendConfig config;
    config.kind = BackendKind::Http;
    CHECK(throws_code(ErrorCode::ConfigError, [&] { config.validate(); }));  // no base_url
    config.base_url = "http://localhost:1/v1";
    config.temperature = 1.5;
    CHECK(throws_code(ErrorCode::ConfigError, [&] { config.validate(); }));
    config.temperature = 0.0;
    config.timeout_ms = 0;
    CHECK(throws_code(ErrorCode::ConfigError, [&] { config.validate(); }));
    config.timeout_ms = 1000;
    config.validate();

    BackendConfig scripted;
    scripted.kind = BackendKind::Scripted;
    CHECK(throws_code(ErrorCode::ConfigError, [&] { scripted.validate(); }));  // no path
}

TEST_CASE("http backend posts the chat payload and returns the first choice") {
    nlohmann::json seen_body;
    std::string seen_auth;
    LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        seen_auth = req.get_header_value("Authorization");
        res.set_content(
            nlohmann::json{{"choices",
                            nlohmann::json::array(
                                {{{"message", {{"role", "assistant"}, {"content", "ok!"}}}}})}}
                .dump(),
            "application/json");
    });

    // The config names the variable; the token itself lives only in the env.
    setenv("EXMEM_TEST_TOKEN", "sekrit-token", 1);
    BackendConfig config;
    config.kind = BackendKind::Http;
    config.base_url = server.base_url();
    config.model_id = "demo-model";
    config.auth_token_env = "EXMEM_TEST_TOKEN";
    config.temperature = 0.25;
    HttpBackend backend(config);

    std::string reply = backend.complete({{"system", "be brief"}, {"user", "hi"}});
    CHECK(reply == "ok!");
    CHECK(seen_body["model"] == "demo-model");
    CHECK(seen_body["temperature"] == doctest::Approx(0.25));
    REQUIRE(seen_body["messages"].size() == 2);
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"][1]["content"] == "hi");
    CHECK(seen_auth == "Bearer sekrit-token");
    unsetenv("EXMEM_TEST_TOKEN");
}

TEST_CASE("http backend maps failure modes to BackendUnavailable") {
    SUBCASE("non-2xx status") {
        LocalServer server([](const httplib::Request&, httplib::Response& res) {
            res.status = 503;
            res.set_content("overloaded", "text/plain");
        });
        BackendConfig config;
        config.kind = BackendKind::Http;
        config.base_url = server.base_url();
        HttpBackend backend(config);
        try {
            backend.complete({{"user", "hi"}});
            FAIL("expected BackendUnavailable");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::BackendUnavailable);
            CHECK(std::string(err.what()).find("503") != std::string::npos);
            CHECK(std::string(err.what()).find("overloaded") != std::string::npos);
        }
    }
    SUBCASE("malformed completion body") {
        LocalServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content("this is not a completion", "text/plain");
        });
        BackendConfig config;
        config.kind = BackendKind::Http;
        config.base_url = server.base_url();
        HttpBackend backend(config);
        CHECK(throws_code(ErrorCode::BackendUnavailable,
                          [&] { backend.complete({{"user", "hi"}}); }));
    }
    SUBCASE("unreachable host") {
        BackendConfig config;
        config.kind = BackendKind::Http;
        config.base_url = "http://127.0.0.1:1/v1";  // nothing listens on port 1
        config.timeout_ms = 500;
        HttpBackend backend(config);
        CHECK(throws_code(ErrorCode::BackendUnavailable,
                          [&] { backend.complete({{"user", "hi"}}); }));
    }
}

TEST_CASE("make_backend dispatches on kind") {
    auto script = write_temp("exmem_make_backend.json", R"(["only"])");
    BackendConfig config;
    config.kind = BackendKind::Scripted;
    config.script_path = script.string();
    auto backend = make_backend(config);
    CHECK(backend->complete({}) == "only");
    std::filesystem::remove(script);
}
