// Generates the committed fixtures under fixtures/: the case-study replay
// bundle (trajectory + scripted responses + golden graph/outline) and the
// compression bundle (long trajectory + recorded script). Every bundle is
// verified by actually replaying it before anything is written, so a
// regenerated fixture is frozen only in a known-good state.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exmem/backend.hpp"
#include "exmem/errors.hpp"
#include "exmem/graph.hpp"
#include "exmem/projection.hpp"
#include "exmem/prompts.hpp"
#include "exmem/runtime.hpp"
#include "exmem/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace exmem;

namespace {

[[noreturn]] void fail(const std::string& why) {
    std::cerr << "fixture generation failed: " << why << "\n";
    std::exit(1);
}

void require(bool ok, const std::string& why) {
    if (!ok) fail(why);
}

std::vector<Note> notes(const std::string& assistant, const std::string& user) {
    return {Note{NoteRole::Assistant, assistant}, Note{NoteRole::User, user}};
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot open " + path.string());
    out << content;
    require(static_cast<bool>(out), "short write to " + path.string());
}

void write_trajectory_file(const fs::path& path, const Trajectory& trajectory) {
    std::ostringstream out;
    write_trajectory(out, trajectory);
    write_file(path, out.str());
}

std::string script_document(const std::vector<std::string>& responses) {
    json doc{{"responses", responses}};
    return doc.dump(2) + "\n";
}

// Adapts an arbitrary function to the Backend interface; used to synthesize
// and record responses when generating the compression bundle.
class CallbackBackend final : public Backend {
public:
    explicit CallbackBackend(std::function<std::string(const std::vector<ChatMessage>&)> fn)
        : fn_(std::move(fn)) {}

    std::string complete(const std::vector<ChatMessage>& messages) override {
        std::lock_guard<std::mutex> lock(mutex_);
        std::string response = fn_(messages);
        recorded_.push_back(response);
        return response;
    }

    std::vector<std::string> recorded() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return recorded_;
    }

private:
    mutable std::mutex mutex_;
    std::function<std::string(const std::vector<ChatMessage>&)> fn_;
    std::vector<std::string> recorded_;
};

std::vector<ThoughtId> active_ids_in(const std::string& text) {
    static const std::regex line_re(R"(- Node (\d+): \[[a-z]+\] \[Active\])");
    std::vector<ThoughtId> ids;
    for (std::sregex_iterator it(text.begin(), text.end(), line_re), end; it != end; ++it) {
        ids.push_back(std::stoull((*it)[1].str()));
    }
    return ids;
}

std::size_t episode_index_in(const std::string& text) {
    static const std::regex header_re(R"(\[episode (\d+)\])");
    std::smatch match;
    require(std::regex_search(text, match, header_re), "request carries no episode header");
    return std::stoull(match[1].str());
}

// ---------------------------------------------------------------------------
// Case-study bundle
// ---------------------------------------------------------------------------

const char* kCaseTask =
    "Could you provide the name of the individual who: - As of December 2023, the individual "
    "was the coordinator of a research group founded in 2009. - Co-edited a book published in "
    "2018 by Routledge. - The individual with whom they co-edited the book was a keynote "
    "speaker at a conference in 2019. - Served as the convenor of a panel before 2020. - "
    "Published an article in 2012. - Completed their PhD on the writings of an English writer.";

struct CaseNode {
    ThoughtKind kind;
    std::string assistant;
    std::string user;
    ThoughtId dep;
    std::string rationale;  // on the edge dep -> node
};

// Nodes 2..7 of the worked example graph, with the dependency rationales.
std::vector<CaseNode> case_nodes() {
    return {
        {ThoughtKind::Subtask,
         "Search for individuals co-editing a Routledge book in 2018, focusing on those with a "
         "PhD on an English writer's writings and other criteria.",
         "Return search results from queries about co-edited book 2018 Routledge, research "
         "group founded in 2009 coordinator 2023, and convenor panel 2019 keynote.",
         1,
         "Break down the main task into a subtask to search for relevant information based on "
         "initial criteria."},
        {ThoughtKind::Evidence,
         "Analyze search results to identify potential candidates matching the criteria.",
         "Found multiple results including Mathew Abbott (editor of Michael Fried and "
         "Philosophy: Modernism, Intention, and Theatricality, Routledge 2018), but need to "
         "check other details like research group coordinator, convenor of panel, article in "
         "2012, and PhD on English writer.",
         2,
         "The evidence from search results supports the subtask by providing potential leads "
         "or data to analyze further."},
        {ThoughtKind::Subtask,
         "Refine search queries to focus on specific criteria: co-edited a Routledge book in "
         "2018, research group coordinator founded in 2009, and other details like convenor of "
         "panel before 2020, article in 2012, PhD on English writer.",
         "Search for 'co-edited Routledge book 2018', 'research group founded 2009 "
         "coordinator', 'convenor panel 2019 keynote speaker', 'article published 2012', 'PhD "
         "thesis on English writer'.",
         2,
         "Break down the subtask into more precise search queries to find the individual "
         "matching all criteria."},
        {ThoughtKind::Evidence,
         "Search results from refined queries show potential matches, such as Mona Baker "
         "(co-coordinator of Genealogies of Knowledge Research Network founded in 2009) and "
         "Pooyan Tamimi Arab (co-edited Routledge Handbook of Material Religion in 2023, not "
         "2018). Need to verify other criteria like convenor of panel before 2020, article in "
         "2012, and PhD on English writer.",
         "Results include various faculty profiles but none clearly match all criteria; "
         "further analysis required.",
         4,
         "The evidence from search results supports the subtask by providing data to analyze "
         "for potential candidates matching the criteria."},
        {ThoughtKind::Subtask,
         "Search for 'Routledge 2018 co-edited Keynote 2019' to find books published in 2018 "
         "by Routledge that are co-edited, with one co-editor giving a keynote at a conference "
         "in 2019.",
         "Return search results from query about Routledge 2018 co-edited book and keynote "
         "speaker in 2019.",
         4,
         "Break down the subtask into a more specific search query to find co-edited Routledge "
         "book in 2018 with keynote speaker in 2019."},
        {ThoughtKind::Evidence,
         "Analyze search results from the query to identify potential matches for the "
         "criteria, such as co-edited Routledge book in 2018 and keynote speaker in 2019.",
         "Search results show various faculty profiles and pages but no direct matches; need "
         "to refine further or check other sources.",
         6,
         "The evidence from search results supports the subtask by providing data to analyze "
         "for potential candidates matching the criteria."},
    };
}

MemoryGraph build_case_graph() {
    MemoryGraph graph = MemoryGraph::create(kCaseTask);
    for (const CaseNode& node : case_nodes()) {
        ThoughtId id = graph.add_thought(node.kind, notes(node.assistant, node.user), {});
        graph.add_edge(node.dep, id, node.rationale);
    }
    return graph;
}

// The worked construction example: two proposals with temporary ids, edges
// hanging them under node 4.
std::string case_construction_episode5() {
    json doc{
        {"add_nodes",
         json::array(
             {{{"tmp_id", "tmp6"},
               {"kind", "subtask"},
               {"thought",
                json::array(
                    {{{"role", "assistant"},
                      {"content",
                       "Search for 'Routledge 2018 co-edited Keynote 2019' to find books "
                       "published in 2018 by Routledge that are co-edited, with one co-editor "
                       "giving a keynote at a conference in 2019."}},
                     {{"role", "user"},
                      {"content",
                       "Return search results from query about Routledge 2018 co-edited book "
                       "and keynote speaker in 2019."}}})}},
              {{"tmp_id", "tmp7"},
               {"kind", "evidence"},
               {"thought",
                json::array(
                    {{{"role", "assistant"},
                      {"content",
                       "Analyze search results from the query to identify potential matches "
                       "for the criteria, such as a co-edited Routledge book in 2018 and a "
                       "keynote speaker in 2019."}},
                     {{"role", "user"},
                      {"content",
                       "Search results show various faculty profiles and pages but no direct "
                       "matches; further refinement or alternative sources are required."}}})}}})},
        {"add_edges",
         json::array(
             {{{"src", 4},
               {"dst", "tmp6"},
               {"rationale",
                "Decompose the original task into a focused search for a Routledge co-edited "
                "book published in 2018 with a keynote speaker in 2019."}},
              {{"src", "tmp6"},
               {"dst", "tmp7"},
               {"rationale",
                "The retrieved search results provide evidence to evaluate whether the subtask "
                "criteria are satisfied."}}})}};
    return doc.dump();
}

// The worked management example: three flushes and one fold with fixed
// summary notes.
std::string case_management_response() {
    json doc{
        {"flush_ops",
         json::array(
             {{{"id", 2},
               {"rationale",
                "This node is superseded by Node 20, which provides conclusive evidence that "
                "Laura Lojo-Rodriguez is the coordinator of the Discourse and Identity (D&I) "
                "research group, matching the first clue. Node 2's subtask has been "
                "successfully addressed."}},
              {{"id", 3},
               {"rationale",
                "This node is superseded by Node 30 and subsequent nodes (31-52), which "
                "provide a comprehensive summary and detailed evidence regarding the co-edited "
                "book clue. Node 3's subtask has been refined and addressed through more "
                "specific searches."}},
              {{"id", 47},
               {"rationale",
                "This node is redundant because its subtask to verify the 2012 article "
                "publication has been addressed by evidence nodes (48-50), which consistently "
                "show no direct evidence of a 2012 article, making further exploration "
                "unnecessary."}}})},
        {"fold_ops",
         json::array(
             {{{"ids", json::array({48, 49, 50})},
               {"rationale",
                "These nodes provide conclusive evidence regarding the 2012 article "
                "publication subtask. All searches consistently indicate no confirmed "
                "publication in 2012."},
               {"notes",
                json::array(
                    {{{"role", "assistant"},
                      {"content",
                       "The objective was to determine whether Laura Lojo-Rodriguez published "
                       "an academic article in 2012. The investigation involved targeted "
                       "name-year search queries and a systematic review of her publicly "
                       "available publication records."}},
                     {{"role", "user"},
                      {"content",
                       "No evidence of a 2012 publication was identified. While publications "
                       "from other years are documented, the 2012 criterion is conclusively "
                       "ruled out based on consistent negative findings across all "
                       "sources."}}})}}})}};
    return doc.dump();
}

std::vector<Note> case_fold_notes() {
    return notes(
        "The objective was to determine whether Laura Lojo-Rodriguez published an academic "
        "article in 2012. The investigation involved targeted name-year search queries and a "
        "systematic review of her publicly available publication records.",
        "No evidence of a 2012 publication was identified. While publications from other "
        "years are documented, the 2012 criterion is conclusively ruled out based on "
        "consistent negative findings across all sources.");
}

std::string construction_response(ThoughtId node_id, ThoughtKind kind,
                                  const std::string& assistant, const std::string& user,
                                  ThoughtId dep, const std::string& rationale) {
    std::string tmp = "tmp" + std::to_string(node_id);
    json doc{{"add_nodes",
              json::array({{{"tmp_id", tmp},
                            {"kind", to_string(kind)},
                            {"thought",
                             json::array({{{"role", "assistant"}, {"content", assistant}},
                                          {{"role", "user"}, {"content", user}}})}}})},
             {"add_edges", json::array({{{"src", dep}, {"dst", tmp}, {"rationale", rationale}}})}};
    return doc.dump();
}

// Kind assignment for the filler chain (nodes 8..52): the 2012-article
// cluster (47..50) is pinned so the management example applies; the rest
// alternate.
ThoughtKind chain_kind(ThoughtId node_id) {
    if (node_id == 47) return ThoughtKind::Subtask;
    if (node_id >= 48 && node_id <= 50) return ThoughtKind::Evidence;
    return node_id % 2 == 0 ? ThoughtKind::Subtask : ThoughtKind::Evidence;
}

std::string chain_assistant_note(ThoughtId node_id) {
    switch (node_id) {
        case 20:
            return "Verify the research-group clue: as of December 2023 Laura Lojo-Rodriguez "
                   "coordinates the Discourse and Identity research group, founded in 2009.";
        case 30:
            return "Consolidate the co-edited book clue: the 2018 Routledge volume was "
                   "co-edited by Laura Lojo-Rodriguez, whose co-editor gave a 2019 keynote.";
        case 47:
            return "Verify whether Laura Lojo-Rodriguez published an academic article in "
                   "2012.";
        case 48:
            return "Search 'Laura Lojo-Rodriguez 2012 article' across academic indexes for a "
                   "publication dated 2012.";
        case 49:
            return "Review the publication list on her faculty profile for any 2012 entry.";
        case 50:
            return "Cross-check bibliographic databases for a 2012 article under name "
                   "variants.";
        default:
            return "Investigate lead " + std::to_string(node_id) +
                   " derived from the previous finding and refine the candidate set.";
    }
}

std::string chain_user_note(ThoughtId node_id) {
    switch (node_id) {
        case 20:
            return "Conclusive match for the first clue: the group page lists her as "
                   "coordinator.";
        case 30:
            return "The book clue is satisfied; subsequent nodes record the supporting "
                   "details.";
        case 47:
            return "Run name-year searches and inspect her public publication records.";
        case 48:
            return "No direct evidence of a 2012 article in the search results.";
        case 49:
            return "The profile lists publications from other years; nothing dated 2012.";
        case 50:
            return "Database queries return no confirmed 2012 publication.";
        default:
            return "Recorded findings for step " + std::to_string(node_id) +
                   "; no clue resolved yet, continue with the next refinement.";
    }
}

// Deterministic tool-result filler so each episode carries realistic bulk.
std::string tool_result_text(std::size_t episode_index, std::size_t repeats) {
    std::ostringstream out;
    out << "Search results for query " << episode_index << ":";
    for (std::size_t i = 1; i <= repeats; i++) {
        out << " Result " << i << ": a candidate page mentioning research groups, Routledge "
            << "volumes, conference keynotes and thesis records, none conclusive on its own "
            << "(ref " << episode_index << "." << i << ").";
    }
    return out.str();
}

Trajectory build_case_trajectory() {
    Trajectory trajectory;
    trajectory.task_text = kCaseTask;
    for (std::size_t episode = 1; episode <= 50; episode++) {
        TraceEvent call;
        call.role = TraceRole::Assistant;
        call.content = "Step " + std::to_string(episode) +
                       ": run the next search and evaluate the returned candidates.";
        call.tool_name = "search";
        call.tool_args = json{{"query", "case study query " + std::to_string(episode)}}.dump();
        trajectory.events.push_back(std::move(call));

        TraceEvent result;
        result.role = TraceRole::Tool;
        result.tool_name = "search";
        result.content = tool_result_text(episode, 12);
        trajectory.events.push_back(std::move(result));
    }
    return trajectory;
}

std::vector<std::string> build_case_script() {
    std::vector<std::string> responses;
    // Episodes 1..4 reproduce nodes 2..5 of the worked graph.
    const std::vector<CaseNode> nodes = case_nodes();
    for (std::size_t i = 0; i < 4; i++) {
        const CaseNode& node = nodes[i];
        responses.push_back(construction_response(static_cast<ThoughtId>(i + 2), node.kind,
                                                  node.assistant, node.user, node.dep,
                                                  node.rationale));
    }
    // Episode 5 is the worked two-proposal update (nodes 6 and 7).
    responses.push_back(case_construction_episode5());
    // Episodes 6..50 extend a chain 7 -> 8 -> ... -> 52.
    for (ThoughtId node_id = 8; node_id <= 52; node_id++) {
        responses.push_back(construction_response(
            node_id, chain_kind(node_id), chain_assistant_note(node_id),
            chain_user_note(node_id), node_id - 1,
            "Continue the investigation from the previous step."));
    }
    // The single management round.
    responses.push_back(case_management_response());
    return responses;
}

void verify_case_bundle(const Trajectory& trajectory, const std::vector<std::string>& script,
                        std::size_t budget) {
    ScriptedBackend backend{script};
    RuntimeConfig config;
    config.budget_tokens = budget;
    auto started = std::chrono::steady_clock::now();
    ReplayResult result = run_replay(trajectory, config, backend);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    require(result.stats.episodes_total == 50, "case: expected 50 episodes");
    require(result.stats.episodes_skipped == 0, "case: no episode may be skipped");
    require(result.stats.management_rounds == 1, "case: expected exactly one management round");
    require(result.stats.management_failures == 0, "case: management must validate");
    require(result.stats.folds_applied == 1, "case: expected 1 fold");
    require(result.stats.flushes_applied == 3, "case: expected 3 flushes");
    require(result.stats.thoughts_created == 51, "case: expected 51 constructed thoughts");
    require(backend.remaining() == 0, "case: script must be fully consumed");

    const MemoryGraph& graph = result.graph;
    require(graph.node_count() == 53, "case: expected 53 nodes");
    std::set<ThoughtId> flushed, summaries;
    for (ThoughtId id : graph.ids()) {
        if (graph.thought(id).origin == ThoughtOrigin::FlushCompact) flushed.insert(id);
        if (graph.thought(id).origin == ThoughtOrigin::FoldSummary) summaries.insert(id);
    }
    require(flushed == std::set<ThoughtId>{2, 3, 47}, "case: flushed set mismatch");
    require(summaries == std::set<ThoughtId>{53}, "case: summary set mismatch");
    require(graph.thought(53).notes == case_fold_notes(), "case: summary notes mismatch");
    for (ThoughtId id : {48, 49, 50}) {
        require(graph.thought(id).state == ActivationState::Inactive,
                "case: fold member still active");
    }
    require(graph.has_edge(47, 53) && graph.has_edge(53, 51),
            "case: summary boundary edges mismatch");
    require(elapsed < 1.0, "case: replay took too long");
}

void generate_case_bundle(const fs::path& dir) {
    fs::create_directories(dir);

    MemoryGraph golden = build_case_graph();
    std::string outline = render_graph_outline(golden, false);
    {
        std::istringstream lines(outline);
        std::string line;
        std::size_t node_lines = 0, edge_lines = 0;
        while (std::getline(lines, line)) {
            if (line.find("- Node ") != std::string::npos) node_lines++;
            if (line.find("--[->] Node ") != std::string::npos) edge_lines++;
        }
        require(node_lines == 7 && edge_lines == 6, "golden outline structure mismatch");
        require(outline.find("[task]") != std::string::npos &&
                    outline.find("[subtask]") != std::string::npos &&
                    outline.find("[evidence]") != std::string::npos &&
                    outline.find("[Active]") != std::string::npos,
                "golden outline markers missing");
    }

    Trajectory trajectory = build_case_trajectory();
    std::vector<std::string> script = build_case_script();

    std::size_t base = estimate_tokens(render_graph_outline(MemoryGraph::create(kCaseTask), false));
    std::size_t raw = 0;
    for (const Episode& episode : segment_episodes(trajectory)) raw += episode.token_estimate;
    std::size_t budget = base + raw;  // the trigger fires exactly at episode 50

    verify_case_bundle(trajectory, script, budget);

    golden.save_file(dir / "seven_node_graph.json");
    write_file(dir / "golden_outline.txt", outline);
    write_trajectory_file(dir / "trajectory.jsonl", trajectory);
    write_file(dir / "script.json", script_document(script));
    json manifest{{"budget_tokens", budget},
                  {"base_outline_tokens", base},
                  {"raw_trajectory_tokens", raw},
                  {"episodes", 50},
                  {"responses", script.size()}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "case_study: budget " << budget << ", raw " << raw << " tokens, "
              << script.size() << " responses\n";
}

// ---------------------------------------------------------------------------
// Compression bundle
// ---------------------------------------------------------------------------

constexpr std::size_t kCompressionEpisodes = 24;
constexpr std::size_t kCompressionBudget = 4'096;

Trajectory build_compression_trajectory() {
    Trajectory trajectory;
    trajectory.task_text =
        "Trace a long investigation across many search rounds and keep only the conclusions "
        "that still matter.";
    for (std::size_t episode = 1; episode <= kCompressionEpisodes; episode++) {
        TraceEvent call;
        call.role = TraceRole::Assistant;
        call.content = "Round " + std::to_string(episode) + ": query the next source.";
        call.tool_name = "search";
        call.tool_args = json{{"query", "round " + std::to_string(episode)}}.dump();
        trajectory.events.push_back(std::move(call));

        TraceEvent result;
        result.role = TraceRole::Tool;
        result.tool_name = "search";
        result.content = tool_result_text(episode, 20);
        trajectory.events.push_back(std::move(result));
    }
    return trajectory;
}

// Synthesizes compact construction updates and rolling fold operations from
// the request text alone, so the recorded script replays identically.
std::string synthesize_response(const std::vector<ChatMessage>& messages) {
    require(!messages.empty(), "compression: empty request");
    const std::string& system = messages.front().content;
    const std::string& user = messages.back().content;
    const bool management = system == management_system_prompt();
    if (!management) {
        require(system == memorize_system_prompt(), "compression: unexpected system prompt");
        std::vector<ThoughtId> active = active_ids_in(user);
        require(!active.empty(), "compression: no active nodes in request");
        ThoughtId dep = active.back();
        std::size_t episode = episode_index_in(user);
        json doc{{"add_nodes",
                  json::array({{{"tmp_id", "tmp1"},
                                {"kind", episode % 2 == 0 ? "evidence" : "subtask"},
                                {"thought",
                                 json::array(
                                     {{{"role", "assistant"},
                                       {"content", "Finding " + std::to_string(episode) +
                                                       ": one candidate lead survives."}},
                                      {{"role", "user"},
                                       {"content", "Recorded outcome of round " +
                                                       std::to_string(episode) + "."}}})}}})},
                 {"add_edges",
                  json::array({{{"src", dep},
                                {"dst", "tmp1"},
                                {"rationale", "Continue from the latest finding."}}})}};
        return doc.dump();
    }
    // Management: fold every active non-root node except the newest one.
    std::vector<ThoughtId> active = active_ids_in(user);
    require(active.size() >= 3, "compression: too few active nodes to fold");
    json ids = json::array();
    for (ThoughtId id : active) {
        if (id != 1 && id != active.back()) ids.push_back(id);
    }
    require(ids.size() >= 2, "compression: fold needs at least two members");
    json doc{{"flush_ops", json::array()},
             {"fold_ops",
              json::array({{{"ids", std::move(ids)},
                            {"rationale", "These rounds reached settled conclusions."},
                            {"notes",
                             json::array(
                                 {{{"role", "assistant"},
                                   {"content",
                                    "Earlier rounds were consolidated; surviving conclusions "
                                    "carry forward."}},
                                  {{"role", "user"},
                                   {"content",
                                    "No open question remains in the folded range."}}})}}})}};
    return doc.dump();
}

void generate_compression_bundle(const fs::path& dir) {
    fs::create_directories(dir);
    Trajectory trajectory = build_compression_trajectory();

    RuntimeConfig config;
    config.budget_tokens = kCompressionBudget;

    // Recording pass: synthesize responses against the live engine.
    CallbackBackend recorder{synthesize_response};
    ReplayResult recorded = run_replay(trajectory, config, recorder);
    std::vector<std::string> script = recorder.recorded();

    // Replay pass: the frozen script must reproduce the same run.
    ScriptedBackend scripted{script};
    ReplayResult replayed = run_replay(trajectory, config, scripted);
    require(replayed.graph == recorded.graph, "compression: scripted replay diverged");
    require(scripted.remaining() == 0, "compression: script must be fully consumed");
    require(replayed.stats.episodes_skipped == 0, "compression: no episode may be skipped");
    require(replayed.stats.management_rounds >= 2, "compression: expected several rounds");
    require(replayed.stats.raw_trajectory_tokens >= 17'000,
            "compression: trajectory too small");
    require(replayed.stats.compression_ratio <= 0.10, "compression: ratio above bound");

    write_trajectory_file(dir / "trajectory.jsonl", trajectory);
    write_file(dir / "script.json", script_document(script));
    json manifest{{"budget_tokens", kCompressionBudget},
                  {"episodes", kCompressionEpisodes},
                  {"responses", script.size()},
                  {"raw_trajectory_tokens", replayed.stats.raw_trajectory_tokens},
                  {"final_outline_tokens", replayed.stats.final_outline_tokens},
                  {"compression_ratio", replayed.stats.compression_ratio}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "compression: raw " << replayed.stats.raw_trajectory_tokens << " tokens, ratio "
              << replayed.stats.compression_ratio << ", " << script.size() << " responses\n";
}

}  // namespace

int main(int argc, char** argv) {
    fs::path out_root = argc > 1 ? fs::path(argv[1]) : fs::path("fixtures");
    try {
        generate_case_bundle(out_root / "case_study");
        generate_compression_bundle(out_root / "compression");
    } catch (const std::exception& err) {
        fail(err.what());
    }
    std::cout << "fixtures written under " << out_root << "\n";
    return 0;
}
