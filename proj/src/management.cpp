#include "exmem/management.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "exmem/errors.hpp"
#include "exmem/json_extract.hpp"
#include "exmem/projection.hpp"
#include "exmem/prompts.hpp"

namespace exmem {

bool should_trigger(std::size_t context_tokens, std::size_t budget_tokens) {
    return context_tokens >= budget_tokens;
}

std::vector<ChatMessage> render_management_prompt(const MemoryGraph& graph) {
    return {ChatMessage{"system", management_system_prompt()},
            ChatMessage{"user", render_graph_outline(graph, /*include_inactive=*/true)}};
}

namespace {

[[noreturn]] void violation(const std::string& why) {
    throw Error(ErrorCode::ProtocolViolation, why);
}

ThoughtId parse_id(const nlohmann::json& value, const char* where) {
    if (value.is_number_unsigned()) return value.get<ThoughtId>();
    if (value.is_number_integer() && value.get<std::int64_t>() > 0) {
        return value.get<ThoughtId>();
    }
    violation(std::string(where) + " id must be a positive integer");
}

std::string describe_ids(const std::vector<ThoughtId>& ids) {
    std::string out = "[";
    for (std::size_t i = 0; i < ids.size(); i++) {
        if (i > 0) out += ", ";
        out += std::to_string(ids[i]);
    }
    return out + "]";
}

}  // namespace

OperationSet parse_operation_set(const std::string& text) {
    nlohmann::json doc = extract_first_json_object(text);
    OperationSet ops;
    if (auto it = doc.find("flush_ops"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) violation("flush_ops must be a list");
        for (const nlohmann::json& item : *it) {
            if (!item.is_object() || !item.contains("id")) violation("flush entry needs an id");
            FlushOp op;
            op.id = parse_id(item["id"], "flush");
            if (auto r = item.find("rationale"); r != item.end() && r->is_string()) {
                op.rationale = r->get<std::string>();
            }
            ops.flush_ops.push_back(std::move(op));
        }
    }
    if (auto it = doc.find("fold_ops"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) violation("fold_ops must be a list");
        for (const nlohmann::json& item : *it) {
            if (!item.is_object() || !item.contains("ids")) violation("fold entry needs ids");
            if (!item["ids"].is_array() || item["ids"].empty()) {
                violation("fold ids must be a non-empty list");
            }
            FoldOp op;
            for (const nlohmann::json& id : item["ids"]) {
                op.ids.push_back(parse_id(id, "fold"));
            }
            if (auto r = item.find("rationale"); r != item.end() && r->is_string()) {
                op.rationale = r->get<std::string>();
            }
            auto notes = item.find("notes");
            if (notes == item.end()) violation("fold missing notes");
            if (!notes->is_array() || notes->empty()) {
                violation("fold notes must be a non-empty list");
            }
            for (const nlohmann::json& note : *notes) {
                if (!note.is_object() || !note.contains("role") || !note.contains("content") ||
                    !note["role"].is_string() || !note["content"].is_string() ||
                    note["content"].get<std::string>().empty()) {
                    violation("fold notes entries need string 'role' and non-empty 'content'");
                }
                std::string role = note["role"].get<std::string>();
                if (role != "assistant" && role != "user") {
                    violation("fold note role must be 'assistant' or 'user'");
                }
                op.notes.push_back(Note{note_role_from_string(role),
                                        note["content"].get<std::string>()});
            }
            ops.fold_ops.push_back(std::move(op));
        }
    }
    return ops;
}

namespace {

// True iff the region members form one weakly connected component of the
// subgraph induced on them (members are all active, so this equals the
// active-view induced subgraph).
bool weakly_connected(const MemoryGraph& graph, const std::set<ThoughtId>& region) {
    if (region.size() <= 1) return true;
    std::map<ThoughtId, std::vector<ThoughtId>> adj;
    for (const DependencyEdge& e : graph.edges()) {
        if (region.count(e.src) != 0 && region.count(e.dst) != 0) {
            adj[e.src].push_back(e.dst);
            adj[e.dst].push_back(e.src);
        }
    }
    std::set<ThoughtId> seen{*region.begin()};
    std::deque<ThoughtId> frontier{*region.begin()};
    while (!frontier.empty()) {
        ThoughtId cur = frontier.front();
        frontier.pop_front();
        for (ThoughtId next : adj[cur]) {
            if (seen.insert(next).second) frontier.push_back(next);
        }
    }
    return seen.size() == region.size();
}

// True iff some directed path leaves the region and re-enters it. Folding
// such a region would route that path through the summary node twice and
// close a cycle, so validation refuses it.
bool has_external_reentry(const MemoryGraph& graph, const std::set<ThoughtId>& region) {
    std::deque<ThoughtId> frontier;
    std::set<ThoughtId> seen;
    for (const DependencyEdge& e : graph.edges()) {
        if (region.count(e.src) != 0 && region.count(e.dst) == 0 &&
            seen.insert(e.dst).second) {
            frontier.push_back(e.dst);
        }
    }
    while (!frontier.empty()) {
        ThoughtId cur = frontier.front();
        frontier.pop_front();
        for (const DependencyEdge& e : graph.edges_from(cur)) {
            if (region.count(e.dst) != 0) return true;
            if (seen.insert(e.dst).second) frontier.push_back(e.dst);
        }
    }
    return false;
}

}  // namespace

ValidatedOperationSet validate_operation_set(const MemoryGraph& graph,
                                             const OperationSet& ops) {
    ValidatedOperationSet out;
    std::set<ThoughtId> claimed;

    auto check_target = [&](ThoughtId id, std::string* reason) {
        if (!graph.contains(id)) {
            *reason = "node " + std::to_string(id) + " does not exist";
            return false;
        }
        if (id == graph.root()) {
            *reason = "the root task node is protected";
            return false;
        }
        if (graph.thought(id).state != ActivationState::Active) {
            *reason = "node " + std::to_string(id) + " is not active";
            return false;
        }
        return true;
    };

    for (const FlushOp& op : ops.flush_ops) {
        std::string reason;
        if (!check_target(op.id, &reason)) {
            out.dropped.push_back({"flush " + std::to_string(op.id), reason});
            continue;
        }
        if (claimed.count(op.id) != 0) {
            out.dropped.push_back({"flush " + std::to_string(op.id),
                                   "overlaps an earlier operation (later one dropped)"});
            continue;
        }
        claimed.insert(op.id);
        out.ops.flush_ops.push_back(op);
    }

    for (const FoldOp& op : ops.fold_ops) {
        FoldOp kept = op;
        // Duplicate ids inside one fold collapse to the first occurrence.
        std::set<ThoughtId> unique;
        kept.ids.clear();
        for (ThoughtId id : op.ids) {
            if (unique.insert(id).second) kept.ids.push_back(id);
        }
        if (kept.ids.size() != op.ids.size()) {
            out.dropped.push_back({"fold " + describe_ids(op.ids),
                                   "duplicate ids within the fold were collapsed"});
        }
        std::string reason;
        bool valid = true;
        for (ThoughtId id : kept.ids) {
            if (!check_target(id, &reason)) {
                valid = false;
                break;
            }
        }
        if (valid) {
            std::set<ThoughtId> region(kept.ids.begin(), kept.ids.end());
            if (std::any_of(kept.ids.begin(), kept.ids.end(),
                            [&](ThoughtId id) { return claimed.count(id) != 0; })) {
                valid = false;
                reason = "overlaps an earlier operation (later one dropped)";
            } else if (!weakly_connected(graph, region)) {
                valid = false;
                reason = "ids do not form a connected region of the active view";
            } else if (has_external_reentry(graph, region)) {
                valid = false;
                reason = "a path leaves and re-enters the region; folding would close a cycle";
            }
        }
        if (!valid) {
            out.dropped.push_back({"fold " + describe_ids(kept.ids), reason});
            continue;
        }
        claimed.insert(kept.ids.begin(), kept.ids.end());
        out.ops.fold_ops.push_back(std::move(kept));
    }
    return out;
}

ApplyReport apply_operations(MemoryGraph& graph, const ValidatedOperationSet& validated) {
    MemoryGraph staged = graph;
    ApplyReport report;

    for (const FoldOp& op : validated.ops.fold_ops) {
        std::set<ThoughtId> region(op.ids.begin(), op.ids.end());
        ThoughtId summary = staged.add_fold_summary(op.notes);
        // Boundary rewiring: predecessors of the region feed the summary,
        // the summary feeds its successors. Scan order keeps this
        // deterministic; add_edge drops duplicates.
        std::vector<DependencyEdge> snapshot = staged.edges();
        for (const DependencyEdge& e : snapshot) {
            if (region.count(e.src) == 0 && region.count(e.dst) != 0) {
                staged.add_edge(e.src, summary, "");
            }
        }
        for (const DependencyEdge& e : snapshot) {
            if (region.count(e.src) != 0 && region.count(e.dst) == 0 && e.dst != summary) {
                staged.add_edge(summary, e.dst, "");
            }
        }
        for (ThoughtId id : op.ids) {
            staged.set_state(id, ActivationState::Inactive);
        }
        report.summary_ids.push_back(summary);
        report.folded++;
    }

    for (const FlushOp& op : validated.ops.flush_ops) {
        staged.flush_compact(op.id, op.rationale);
        report.flushed++;
    }

    if (!staged.check_acyclic()) {
        // Unreachable for validated input (convexity is checked); kept as a
        // hard stop so a bug can never corrupt the live graph.
        throw Error(ErrorCode::CycleDetected, "apply would break acyclicity; graph rolled back");
    }
    graph = std::move(staged);
    return report;
}

}  // namespace exmem
