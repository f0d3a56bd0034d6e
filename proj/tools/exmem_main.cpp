// Command-line front end: replay recorded trajectories, render persisted
// graphs, lint trajectory files, reformat stats, and serve the sidecar
// socket API.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "exmem/backend.hpp"
#include "exmem/errors.hpp"
#include "exmem/graph.hpp"
#include "exmem/projection.hpp"
#include "exmem/runtime.hpp"
#include "exmem/sidecar_server.hpp"
#include "exmem/trajectory.hpp"

namespace {

using namespace exmem;

struct BackendOptions {
    std::string spec;  // "scripted", "scripted:<path>", or "http"
    std::string script_path;
    std::string base_url;
    std::string model_id;
    std::string auth_env;
    int timeout_ms = 30'000;
    double temperature = 0.0;
    int latency_ms = 0;
};

void add_backend_options(CLI::App* cmd, BackendOptions& opts) {
    cmd->add_option("--backend", opts.spec, "scripted[:<script.json>] or http")->required();
    cmd->add_option("--script", opts.script_path, "response file for the scripted backend");
    cmd->add_option("--base-url", opts.base_url, "http backend base URL");
    cmd->add_option("--model", opts.model_id, "http backend model id");
    cmd->add_option("--auth-env", opts.auth_env,
                    "NAME of the env var holding the bearer token (never the token itself)");
    cmd->add_option("--timeout-ms", opts.timeout_ms, "http request timeout");
    cmd->add_option("--temperature", opts.temperature, "http sampling temperature");
    cmd->add_option("--latency-ms", opts.latency_ms, "simulated scripted-backend latency");
}

std::unique_ptr<Backend> build_backend(const BackendOptions& opts) {
    BackendConfig config;
    if (opts.spec == "http") {
        config.kind = BackendKind::Http;
        config.base_url = opts.base_url;
        config.model_id = opts.model_id;
        config.auth_token_env = opts.auth_env;
        config.timeout_ms = opts.timeout_ms;
        config.temperature = opts.temperature;
        config.validate();
        return make_backend(config);
    }
    if (opts.spec == "scripted" || opts.spec.rfind("scripted:", 0) == 0) {
        config.kind = BackendKind::Scripted;
        config.script_path = opts.spec.size() > 9 ? opts.spec.substr(9) : opts.script_path;
        if (config.script_path.empty()) {
            throw Error(ErrorCode::ConfigError,
                        "scripted backend needs --script <path> or --backend scripted:<path>");
        }
        config.validate();
        return std::make_unique<ScriptedBackend>(
            ScriptedBackend::from_file(config.script_path, opts.latency_ms));
    }
    throw Error(ErrorCode::ConfigError,
                "unknown backend \"" + opts.spec + "\" (expected scripted[:path] or http)");
}

struct ReplayOptions {
    std::string trajectory_path;
    std::size_t budget = 32'768;
    int retry_limit = 2;
    int reasoning_delay_ms = -1;  // <0: use trajectory metadata
    std::string out_path;
    std::string stats_format = "table";
    BackendOptions backend;
};

int cmd_replay(const ReplayOptions& opts) {
    Trajectory trajectory = read_trajectory_file(opts.trajectory_path);
    RuntimeConfig config;
    config.budget_tokens = opts.budget;
    config.retry_limit = opts.retry_limit;
    if (opts.reasoning_delay_ms >= 0) config.reasoning_delay_ms = opts.reasoning_delay_ms;
    if (!opts.out_path.empty()) config.persist_path = opts.out_path;
    std::unique_ptr<Backend> backend = build_backend(opts.backend);
    ReplayResult result = run_replay(trajectory, config, *backend);
    std::cout << report_stats(result.stats, stats_format_from_string(opts.stats_format));
    if (result.stats.episodes_skipped > 0 || result.stats.management_failures > 0) {
        std::cerr << "warning: " << result.stats.episodes_skipped << " episode(s) skipped, "
                  << result.stats.management_failures << " management round(s) failed\n";
        return 2;
    }
    return 0;
}

struct RenderOptions {
    std::string graph_path;
    bool include_inactive = false;
};

int cmd_render(const RenderOptions& opts) {
    MemoryGraph graph = MemoryGraph::load_file(opts.graph_path);
    if (!graph.check_acyclic()) {
        throw Error(ErrorCode::PersistError,
                    "graph file contains a dependency cycle: " + opts.graph_path);
    }
    std::cout << render_graph_outline(graph, opts.include_inactive);
    return 0;
}

int cmd_validate(const std::string& trajectory_path) {
    Trajectory trajectory;
    try {
        trajectory = read_trajectory_file(trajectory_path);
    } catch (const Error& err) {
        std::cout << "invalid: " << err.what() << "\n";
        return 1;
    }
    std::vector<Episode> episodes = segment_episodes(trajectory);
    std::size_t raw_tokens = 0;
    for (const Episode& episode : episodes) raw_tokens += episode.token_estimate;
    std::cout << "ok: " << trajectory.events.size() << " events, " << episodes.size()
              << " episodes, ~" << raw_tokens << " tokens\n";
    return 0;
}

struct StatsOptions {
    std::string in_path;
    std::string format = "table";
};

int cmd_stats(const StatsOptions& opts) {
    std::ifstream in(opts.in_path);
    if (!in) {
        throw Error(ErrorCode::InvalidArgument, "cannot open stats file: " + opts.in_path);
    }
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::InvalidArgument, "stats file is not JSON: " + opts.in_path);
    }
    RunStats stats = RunStats::from_json(doc);
    std::cout << report_stats(stats, stats_format_from_string(opts.format));
    return 0;
}

struct ServeOptions {
    std::string socket_path;
    std::string task_text;
    std::string task_file;
    std::size_t budget = 32'768;
    int retry_limit = 2;
    BackendOptions backend;
};

int cmd_serve(const ServeOptions& opts) {
    std::string task = opts.task_text;
    if (!opts.task_file.empty()) {
        std::ifstream in(opts.task_file);
        if (!in) {
            throw Error(ErrorCode::ConfigError, "cannot open task file: " + opts.task_file);
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        task = buffer.str();
    }
    RuntimeConfig config;
    config.budget_tokens = opts.budget;
    config.retry_limit = opts.retry_limit;
    std::unique_ptr<Backend> backend = build_backend(opts.backend);
    SidecarServer server(opts.socket_path, task, config, *backend);
    std::cout << "listening on " << opts.socket_path << "\n" << std::flush;
    server.serve();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Executive memory engine for tool-augmented reasoning agents"};
    app.require_subcommand(1);

    ReplayOptions replay_opts;
    CLI::App* replay = app.add_subcommand("replay", "replay a recorded trajectory");
    replay->add_option("--trajectory", replay_opts.trajectory_path, "trajectory JSONL file")
        ->required();
    replay->add_option("--budget", replay_opts.budget, "context budget in tokens");
    replay->add_option("--retry-limit", replay_opts.retry_limit, "corrective retries per call");
    replay->add_option("--reasoning-delay-ms", replay_opts.reasoning_delay_ms,
                       "override simulated reasoning delay per episode");
    replay->add_option("--out", replay_opts.out_path, "persist the final graph here");
    replay->add_option("--stats", replay_opts.stats_format, "stats format: table, json, or csv");
    add_backend_options(replay, replay_opts.backend);

    RenderOptions render_opts;
    CLI::App* render = app.add_subcommand("render", "print the outline of a persisted graph");
    render->add_option("--graph", render_opts.graph_path, "graph JSON file")->required();
    render->add_flag("--include-inactive", render_opts.include_inactive,
                     "include inactive nodes");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "lint a trajectory file");
    validate->add_option("--trajectory", validate_path, "trajectory JSONL file")->required();

    StatsOptions stats_opts;
    CLI::App* stats = app.add_subcommand("stats", "reformat a stats JSON document");
    stats->add_option("--in", stats_opts.in_path, "stats JSON file")->required();
    stats->add_option("--format", stats_opts.format, "table, json, or csv");

    ServeOptions serve_opts;
    CLI::App* serve = app.add_subcommand("serve-sidecar", "serve the hook API over a socket");
    serve->add_option("--socket", serve_opts.socket_path, "unix socket path")->required();
    serve->add_option("--task", serve_opts.task_text, "root task text");
    serve->add_option("--task-file", serve_opts.task_file, "file holding the root task text");
    serve->add_option("--budget", serve_opts.budget, "context budget in tokens");
    serve->add_option("--retry-limit", serve_opts.retry_limit, "corrective retries per call");
    add_backend_options(serve, serve_opts.backend);

    CLI11_PARSE(app, argc, argv);

    try {
        if (replay->parsed()) return cmd_replay(replay_opts);
        if (render->parsed()) return cmd_render(render_opts);
        if (validate->parsed()) return cmd_validate(validate_path);
        if (stats->parsed()) return cmd_stats(stats_opts);
        if (serve->parsed()) return cmd_serve(serve_opts);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        switch (err.code()) {
            case ErrorCode::ContextOverflow:
                return 3;
            case ErrorCode::BackendUnavailable:
            case ErrorCode::ScriptExhausted:
                return 4;
            default:
                return 1;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
