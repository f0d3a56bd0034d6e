#pragma once

#include <string>
#include <variant>
#include <vector>

#include "exmem/backend.hpp"
#include "exmem/graph.hpp"
#include "exmem/trajectory.hpp"

namespace exmem {

// A node proposed by the model, addressed by a temporary id ("tmp" +
// digits) until integration assigns the real one.
struct ProposedNode {
    std::string tmp_id;
    ThoughtKind kind = ThoughtKind::Subtask;  // Subtask or Evidence only
    std::vector<Note> notes;

    bool operator==(const ProposedNode&) const = default;
};

// Proposed edge: src is either an existing node id or the tmp id of another
// proposed node; dst is always a tmp id (new edges only ever point into new
// nodes).
struct ProposedEdge {
    std::variant<ThoughtId, std::string> src;
    std::string dst;
    std::string rationale;

    bool operator==(const ProposedEdge&) const = default;
};

struct ConstructionUpdate {
    std::vector<ProposedNode> add_nodes;
    std::vector<ProposedEdge> add_edges;

    bool operator==(const ConstructionUpdate&) const = default;
};

// [system: memorization prompt, user: full graph outline + the episode's
// serialized events]. Pure: equal inputs give byte-identical messages.
std::vector<ChatMessage> render_memorize_prompt(const MemoryGraph& graph,
                                                const Episode& episode);

// Parses model output into an update. Tolerates code fences and prose around
// the JSON object; ignores unknown fields; accepts "thought" or "notes" for
// a node's note list. Throws ProtocolViolation with a reason on anything
// else: missing keys, bad tmp ids, illegal kinds, empty notes, dangling tmp
// references, cycles among proposed edges.
ConstructionUpdate parse_construction_update(const std::string& text);

// Applies an update atomically: proposed nodes are created in topological
// order of their internal edges (document order breaks ties), ids assigned
// sequentially, tmp ids remapped, then all edges inserted. Proposals with no
// incoming edge are attached to the root ("auto-attached: orphan proposal").
// Throws UnknownDependency / CycleDetected with the graph unchanged.
std::vector<ThoughtId> integrate_update(MemoryGraph& graph, const ConstructionUpdate& update);

struct MemorizeOutcome {
    std::vector<ThoughtId> created;
    bool skipped = false;     // retries exhausted; graph untouched
    int attempts = 0;         // completion calls made (1 + retries used)
    std::string failure_reason;
};

// One full memorization step: render, complete, parse, integrate. A protocol
// violation (including integrate-time unknown src or cycle) is fed back to
// the backend as a corrective user message, up to retry_limit extra calls;
// exhaustion records a skip and leaves the graph unchanged.
MemorizeOutcome memorize_episode(MemoryGraph& graph, const Episode& episode,
                                 Backend& backend, int retry_limit);

}  // namespace exmem
