#include "exmem/construction.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "exmem/errors.hpp"
#include "exmem/json_extract.hpp"
#include "exmem/projection.hpp"
#include "exmem/prompts.hpp"

namespace exmem {

std::vector<ChatMessage> render_memorize_prompt(const MemoryGraph& graph,
                                                const Episode& episode) {
    std::string user = render_graph_outline(graph, /*include_inactive=*/true);
    user += "\n";
    user += serialize_episode(episode);
    return {ChatMessage{"system", memorize_system_prompt()}, ChatMessage{"user", user}};
}

namespace {

[[noreturn]] void violation(const std::string& why) {
    throw Error(ErrorCode::ProtocolViolation, why);
}

bool is_tmp_id(const std::string& text) {
    if (text.size() < 4 || text.compare(0, 3, "tmp") != 0) return false;
    return std::all_of(text.begin() + 3, text.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::vector<Note> parse_note_list(const nlohmann::json& value, const std::string& where) {
    if (!value.is_array() || value.empty()) {
        violation(where + ": notes must be a non-empty list");
    }
    std::vector<Note> notes;
    for (const nlohmann::json& item : value) {
        if (!item.is_object() || !item.contains("role") || !item.contains("content") ||
            !item["role"].is_string() || !item["content"].is_string()) {
            violation(where + ": each note needs string 'role' and 'content'");
        }
        std::string role = item["role"].get<std::string>();
        if (role != "assistant" && role != "user") {
            violation(where + ": note role must be 'assistant' or 'user', got '" + role + "'");
        }
        std::string content = item["content"].get<std::string>();
        if (content.empty()) violation(where + ": note content must not be empty");
        notes.push_back(Note{note_role_from_string(role), std::move(content)});
    }
    return notes;
}

}  // namespace

ConstructionUpdate parse_construction_update(const std::string& text) {
    nlohmann::json doc = extract_first_json_object(text);
    if (!doc.contains("add_nodes")) violation("missing key add_nodes");
    if (!doc.contains("add_edges")) violation("missing key add_edges");
    if (!doc["add_nodes"].is_array()) violation("add_nodes must be a list");
    if (!doc["add_edges"].is_array()) violation("add_edges must be a list");

    ConstructionUpdate update;
    std::set<std::string> tmp_ids;
    for (const nlohmann::json& item : doc["add_nodes"]) {
        if (!item.is_object()) violation("add_nodes entries must be objects");
        if (!item.contains("tmp_id") || !item["tmp_id"].is_string()) {
            violation("node entry needs a string tmp_id");
        }
        ProposedNode node;
        node.tmp_id = item["tmp_id"].get<std::string>();
        if (!is_tmp_id(node.tmp_id)) {
            violation("tmp_id '" + node.tmp_id + "' must be 'tmp' followed by digits");
        }
        if (!tmp_ids.insert(node.tmp_id).second) {
            violation("duplicate tmp_id " + node.tmp_id);
        }
        if (!item.contains("kind") || !item["kind"].is_string()) {
            violation(node.tmp_id + ": node entry needs a string kind");
        }
        std::string kind = item["kind"].get<std::string>();
        if (kind == "subtask") {
            node.kind = ThoughtKind::Subtask;
        } else if (kind == "evidence") {
            node.kind = ThoughtKind::Evidence;
        } else {
            violation(node.tmp_id + ": illegal kind '" + kind +
                      "' (only subtask or evidence may be constructed)");
        }
        // The wire format calls the note list "thought"; "notes" is accepted
        // as an alias.
        const char* notes_key =
            item.contains("thought") ? "thought" : (item.contains("notes") ? "notes" : nullptr);
        if (notes_key == nullptr) violation(node.tmp_id + ": node entry needs 'thought' notes");
        node.notes = parse_note_list(item[notes_key], node.tmp_id);
        update.add_nodes.push_back(std::move(node));
    }

    for (const nlohmann::json& item : doc["add_edges"]) {
        if (!item.is_object() || !item.contains("src") || !item.contains("dst")) {
            violation("edge entries need 'src' and 'dst'");
        }
        ProposedEdge edge;
        const nlohmann::json& src = item["src"];
        if (src.is_number_integer() || src.is_number_unsigned()) {
            if (src.is_number_integer() && src.get<std::int64_t>() <= 0) {
                violation("edge src must be a positive id");
            }
            edge.src = src.get<ThoughtId>();
        } else if (src.is_string()) {
            std::string s = src.get<std::string>();
            if (is_tmp_id(s)) {
                if (tmp_ids.count(s) == 0) violation("dangling tmp_id " + s);
                edge.src = s;
            } else if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
                           return std::isdigit(c) != 0;
                       })) {
                edge.src = static_cast<ThoughtId>(std::stoull(s));  // "4" treated as id 4
            } else {
                violation("edge src '" + s + "' is neither a node id nor a tmp_id");
            }
        } else {
            violation("edge src must be a node id or tmp_id");
        }
        if (!item["dst"].is_string()) violation("edge dst must be a tmp_id string");
        edge.dst = item["dst"].get<std::string>();
        if (!is_tmp_id(edge.dst)) violation("edge dst '" + edge.dst + "' must be a tmp_id");
        if (tmp_ids.count(edge.dst) == 0) violation("dangling tmp_id " + edge.dst);
        if (auto it = item.find("rationale"); it != item.end() && it->is_string()) {
            edge.rationale = it->get<std::string>();
        }
        update.add_edges.push_back(std::move(edge));
    }

    // Internal (tmp -> tmp) edges must already be acyclic.
    std::map<std::string, std::set<std::string>> internal;
    for (const ProposedEdge& edge : update.add_edges) {
        if (const std::string* src = std::get_if<std::string>(&edge.src)) {
            if (*src == edge.dst) violation("self edge on " + edge.dst);
            internal[*src].insert(edge.dst);
        }
    }
    std::map<std::string, int> indegree;
    for (const ProposedNode& node : update.add_nodes) indegree[node.tmp_id] = 0;
    for (const auto& [src, dsts] : internal) {
        for (const std::string& dst : dsts) indegree[dst]++;
    }
    std::vector<std::string> ready;
    for (const auto& [tmp, deg] : indegree) {
        if (deg == 0) ready.push_back(tmp);
    }
    std::size_t peeled = 0;
    while (!ready.empty()) {
        std::string cur = ready.back();
        ready.pop_back();
        peeled++;
        for (const std::string& dst : internal[cur]) {
            if (--indegree[dst] == 0) ready.push_back(dst);
        }
    }
    if (peeled != update.add_nodes.size()) violation("cycle among proposed nodes");
    return update;
}

std::vector<ThoughtId> integrate_update(MemoryGraph& graph, const ConstructionUpdate& update) {
    // Stage everything on a copy so a failing edge leaves the graph intact.
    MemoryGraph staged = graph;

    // Topological order over internal edges; document order breaks ties
    // (ready list keyed by the node's position in add_nodes).
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < update.add_nodes.size(); i++) {
        position[update.add_nodes[i].tmp_id] = i;
    }
    std::map<std::string, std::set<std::string>> internal;
    std::map<std::string, int> indegree;
    for (const ProposedNode& node : update.add_nodes) indegree[node.tmp_id] = 0;
    for (const ProposedEdge& edge : update.add_edges) {
        if (const std::string* src = std::get_if<std::string>(&edge.src)) {
            if (internal[*src].insert(edge.dst).second) indegree[edge.dst]++;
        }
    }
    std::set<std::size_t> ready;
    for (const auto& [tmp, deg] : indegree) {
        if (deg == 0) ready.insert(position.at(tmp));
    }
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        std::size_t pos = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(pos);
        for (const std::string& dst : internal[update.add_nodes[pos].tmp_id]) {
            if (--indegree[dst] == 0) ready.insert(position.at(dst));
        }
    }
    if (order.size() != update.add_nodes.size()) {
        throw Error(ErrorCode::CycleDetected, "cycle among proposed nodes");
    }

    std::map<std::string, ThoughtId> assigned;
    std::vector<ThoughtId> created;
    for (std::size_t pos : order) {
        const ProposedNode& node = update.add_nodes[pos];
        ThoughtId id = staged.add_thought(node.kind, node.notes, {});
        assigned[node.tmp_id] = id;
        created.push_back(id);
    }
    for (const ProposedEdge& edge : update.add_edges) {
        ThoughtId src_id;
        if (const ThoughtId* fixed = std::get_if<ThoughtId>(&edge.src)) {
            if (!staged.contains(*fixed)) {
                throw Error(ErrorCode::UnknownDependency,
                            "edge source " + std::to_string(*fixed) + " does not exist");
            }
            src_id = *fixed;
        } else {
            src_id = assigned.at(std::get<std::string>(edge.src));
        }
        staged.add_edge(src_id, assigned.at(edge.dst), edge.rationale);
    }
    // Proposals nothing points at get hung off the root so they stay
    // reachable.
    std::set<std::string> targeted;
    for (const ProposedEdge& edge : update.add_edges) targeted.insert(edge.dst);
    for (const ProposedNode& node : update.add_nodes) {
        if (targeted.count(node.tmp_id) == 0) {
            staged.add_edge(staged.root(), assigned.at(node.tmp_id),
                            "auto-attached: orphan proposal");
        }
    }

    graph = std::move(staged);
    return created;
}

MemorizeOutcome memorize_episode(MemoryGraph& graph, const Episode& episode,
                                 Backend& backend, int retry_limit) {
    MemorizeOutcome outcome;
    std::vector<ChatMessage> messages = render_memorize_prompt(graph, episode);
    for (int attempt = 0; attempt <= retry_limit; attempt++) {
        std::string text = backend.complete(messages);
        outcome.attempts++;
        try {
            ConstructionUpdate update = parse_construction_update(text);
            outcome.created = integrate_update(graph, update);
            return outcome;
        } catch (const Error& err) {
            // Defective model output (bad protocol, unknown src, would-be
            // cycle) is correctable; anything else is an infrastructure
            // failure and propagates.
            if (err.code() != ErrorCode::ProtocolViolation &&
                err.code() != ErrorCode::UnknownDependency &&
                err.code() != ErrorCode::CycleDetected) {
                throw;
            }
            outcome.failure_reason = err.what();
            messages.push_back(ChatMessage{"assistant", text});
            messages.push_back(
                ChatMessage{"user", std::string("Your previous update was rejected: ") +
                                        err.what() +
                                        ". Respond again with a single corrected JSON object "
                                        "that satisfies the protocol."});
        }
    }
    outcome.skipped = true;
    return outcome;
}

}  // namespace exmem
