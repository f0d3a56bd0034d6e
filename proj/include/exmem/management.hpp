#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "exmem/backend.hpp"
#include "exmem/graph.hpp"

namespace exmem {

// Replace a node's content with a one-line compact record and deactivate it.
struct FlushOp {
    ThoughtId id = 0;
    std::string rationale;

    bool operator==(const FlushOp&) const = default;
};

// Collapse a connected group of nodes into one summary node.
struct FoldOp {
    std::vector<ThoughtId> ids;  // ordered, at least one
    std::string rationale;
    std::vector<Note> notes;  // content of the replacement summary

    bool operator==(const FoldOp&) const = default;
};

struct OperationSet {
    std::vector<FlushOp> flush_ops;
    std::vector<FoldOp> fold_ops;

    bool empty() const { return flush_ops.empty() && fold_ops.empty(); }
    bool operator==(const OperationSet&) const = default;
};

// Management fires as soon as the running context total reaches the budget.
bool should_trigger(std::size_t context_tokens, std::size_t budget_tokens);

// [system: management prompt with examples spliced in, user: the full
// outline including inactive nodes].
std::vector<ChatMessage> render_management_prompt(const MemoryGraph& graph);

// Parses model output. Missing flush_ops/fold_ops keys default to empty
// lists; structural defects (non-integer ids, fold missing notes, ...) throw
// ProtocolViolation.
OperationSet parse_operation_set(const std::string& text);

struct DroppedOp {
    std::string what;    // e.g. "flush 5", "fold [3, 4]"
    std::string reason;
};

struct ValidatedOperationSet {
    OperationSet ops;                // only operations that passed every check
    std::vector<DroppedOp> dropped;  // audit log of everything removed
};

// Total function: never throws on model-shaped input. Checks, per operation
// in document order (flushes first, then folds): target existence, Active
// state, root protection, duplicate ids within a fold (deduplicated), fold
// connectivity in the active view, fold convexity (no path leaving and
// re-entering the region -- rewiring such a region would close a cycle), and
// disjointness across operations (the later operation is dropped).
ValidatedOperationSet validate_operation_set(const MemoryGraph& graph,
                                             const OperationSet& ops);

struct ApplyReport {
    std::vector<ThoughtId> summary_ids;
    std::size_t flushed = 0;
    std::size_t folded = 0;  // fold operations applied
};

// Applies folds (document order) then flushes. A fold creates the summary
// node, rewires the region boundary onto it (external->summary and
// summary->external, deduplicated, empty rationale) and deactivates the
// members; member-to-member edges are kept for provenance. Requires a
// validated set; an internal invariant breach aborts with the graph
// unchanged.
ApplyReport apply_operations(MemoryGraph& graph, const ValidatedOperationSet& validated);

}  // namespace exmem
