#include "exmem/projection.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "exmem/errors.hpp"

namespace exmem {

namespace {

const char* state_label(ActivationState state) {
    return state == ActivationState::Active ? "Active" : "Inactive";
}

std::string collapse_newlines(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (c == '\n' || c == '\r') {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

// Task nodes show the task text directly; every other node shows its note
// list in JSON form (role first), which keeps each node on a single line.
std::string notes_text(const Thought& node) {
    if (node.kind == ThoughtKind::Task) {
        std::string joined;
        for (const Note& note : node.notes) {
            if (!joined.empty()) joined += " ";
            joined += note.content;
        }
        return "Begin to solve the task: " + collapse_newlines(joined);
    }
    std::string out = "[";
    bool first = true;
    for (const Note& note : node.notes) {
        if (!first) out += ", ";
        first = false;
        out += "{\"role\": \"";
        out += to_string(note.role);
        out += "\", \"content\": ";
        out += nlohmann::json(note.content).dump();
        out += "}";
    }
    out += "]";
    return out;
}

// Longest-path depth from the component roots (nodes with no in-edges in
// this view); drives indentation only.
std::map<ThoughtId, std::size_t> longest_path_depths(const MemoryGraph& view) {
    std::map<ThoughtId, std::size_t> indegree;
    std::map<ThoughtId, std::size_t> depth;
    for (ThoughtId id : view.ids()) {
        indegree[id] = 0;
        depth[id] = 0;
    }
    for (const DependencyEdge& e : view.edges()) indegree[e.dst]++;
    std::deque<ThoughtId> ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.push_back(id);
    }
    while (!ready.empty()) {
        ThoughtId cur = ready.front();
        ready.pop_front();
        for (const DependencyEdge& e : view.edges_from(cur)) {
            depth[e.dst] = std::max(depth[e.dst], depth[cur] + 1);
            if (--indegree[e.dst] == 0) ready.push_back(e.dst);
        }
    }
    return depth;
}

}  // namespace

std::string render_graph_outline(const MemoryGraph& graph, bool include_inactive) {
    const MemoryGraph view = include_inactive ? graph : graph.active_view();
    const std::map<ThoughtId, std::size_t> depth = longest_path_depths(view);

    // Children sorted by id, precomputed per source.
    std::map<ThoughtId, std::vector<DependencyEdge>> children;
    for (const DependencyEdge& e : view.edges()) children[e.src].push_back(e);
    for (auto& [src, list] : children) {
        std::sort(list.begin(), list.end(),
                  [](const DependencyEdge& a, const DependencyEdge& b) { return a.dst < b.dst; });
    }

    std::ostringstream out;
    std::set<ThoughtId> visited;
    // Pre-order walk: print the node, then each out-edge followed by the
    // target's subtree (first visit only; later edges print the line alone).
    auto walk = [&](ThoughtId start, auto&& self) -> void {
        if (!visited.insert(start).second) return;
        const Thought& node = view.thought(start);
        out << std::string(2 * depth.at(start), ' ') << "- Node " << start << ": ["
            << to_string(node.kind) << "] [" << state_label(node.state) << "] "
            << notes_text(node) << "\n";
        auto it = children.find(start);
        if (it == children.end()) return;
        for (const DependencyEdge& e : it->second) {
            out << std::string(2 * depth.at(start) + 4, ' ') << "--[->] Node " << e.dst;
            if (!e.rationale.empty()) {
                out << " [Rationale: " << collapse_newlines(e.rationale) << "]";
            }
            out << "\n";
            self(e.dst, self);
        }
    };
    if (view.contains(view.root())) walk(view.root(), walk);
    for (ThoughtId id : view.ids()) walk(id, walk);  // disconnected components, id order
    return out.str();
}

ProjectedContext project_context(const MemoryGraph& graph,
                                 const std::vector<Episode>& recent_episodes,
                                 std::size_t budget_tokens,
                                 const TokenEstimator& estimator) {
    const TokenEstimator& estimate =
        estimator ? estimator : TokenEstimator([](std::string_view t) { return estimate_tokens(t); });

    ProjectedContext ctx;
    const MemoryGraph view = graph.active_view();
    std::string outline = render_graph_outline(graph, /*include_inactive=*/false);
    std::size_t outline_tokens = estimate(outline);
    if (outline_tokens > budget_tokens) {
        throw Error(ErrorCode::BudgetUnsatisfiable,
                    "outline alone is " + std::to_string(outline_tokens) + " tokens, budget is " +
                        std::to_string(budget_tokens));
    }

    // Oldest episodes go first on the floor: drop from the front until the
    // remainder fits. The outline is never trimmed here.
    std::vector<std::string> parts;
    std::vector<std::size_t> part_tokens;
    std::size_t pending_total = 0;
    for (const Episode& episode : recent_episodes) {
        parts.push_back(serialize_episode(episode));
        part_tokens.push_back(estimate(parts.back()));
        pending_total += part_tokens.back();
    }
    std::size_t first_kept = 0;
    while (first_kept < parts.size() && outline_tokens + pending_total > budget_tokens) {
        pending_total -= part_tokens[first_kept];
        first_kept++;
    }

    ctx.rendered = std::move(outline);
    for (std::size_t i = first_kept; i < parts.size(); i++) ctx.rendered += parts[i];
    ctx.token_count = estimate(ctx.rendered);
    ctx.included_ids = view.ids();
    ctx.omitted_inactive = graph.node_count() - view.node_count();
    return ctx;
}

}  // namespace exmem
