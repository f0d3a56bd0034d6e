#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "exmem/types.hpp"

namespace exmem {

// Directed acyclic graph of thoughts. Mutators preserve the structural
// invariants (acyclicity, sequential ids, referential integrity, one active
// root task); activation is additionally one-way per node. The graph is a
// value type: copies are independent snapshots.
class MemoryGraph {
public:
    // Creates a graph holding only the root task node (id 1) whose single
    // note carries the task description. Throws EmptyTask on an empty string.
    static MemoryGraph create(const std::string& task_text);

    // Appends a constructed thought (Subtask or Evidence only; other kinds
    // throw IllegalKind) with one rationale-free edge per dependency. The
    // dependency list may be empty: reattachment policy is the caller's job.
    // Throws UnknownDependency if a dep id is absent, InvalidArgument on
    // empty notes or empty note content.
    ThoughtId add_thought(ThoughtKind kind, std::vector<Note> notes,
                          const std::vector<ThoughtId>& deps);

    // Appends the replacement node of a fold: kind Summary, origin
    // FoldSummary, Active, no edges (the caller rewires the boundary).
    ThoughtId add_fold_summary(std::vector<Note> notes);

    // Inserts src -> dst. Idempotent on duplicates (the first rationale
    // wins). Throws UnknownNode for absent endpoints, CycleDetected (graph
    // unchanged) if dst already reaches src or src == dst.
    void add_edge(ThoughtId src, ThoughtId dst, const std::string& rationale);

    // Deactivation is idempotent; reactivation and deactivating the root
    // throw IllegalTransition. Throws UnknownNode for absent ids.
    void set_state(ThoughtId id, ActivationState state);

    // Replaces a thought with its flushed residue: a single assistant note
    // "flushed: <rationale>", origin FlushCompact, Inactive. Edges are left
    // untouched. Throws UnknownNode; IllegalTransition for the root.
    void flush_compact(ThoughtId id, const std::string& rationale);

    // Induced subgraph on Active nodes (edges with both endpoints Active).
    // The view is a detached copy; root and next_id carry over.
    MemoryGraph active_view() const;

    // Full independent traversal (Kahn peeling); true iff no directed cycle.
    // Deliberately does not share logic with add_edge's incremental check.
    bool check_acyclic() const;

    // --- queries -----------------------------------------------------------
    ThoughtId root() const { return root_; }
    ThoughtId next_id() const { return next_id_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    bool contains(ThoughtId id) const { return nodes_.count(id) != 0; }
    const Thought& thought(ThoughtId id) const;  // throws UnknownNode
    std::vector<ThoughtId> ids() const;          // ascending
    const std::vector<DependencyEdge>& edges() const { return edges_; }
    std::vector<DependencyEdge> edges_from(ThoughtId src) const;
    std::vector<DependencyEdge> edges_into(ThoughtId dst) const;
    bool has_edge(ThoughtId src, ThoughtId dst) const;
    std::size_t count_state(ActivationState state) const;

    bool operator==(const MemoryGraph& other) const;

    // --- persistence -------------------------------------------------------
    // Versioned document {version, root, next_id, nodes, edges}; nodes in id
    // order, edges in insertion order. save(load(x)) == x byte for byte.
    nlohmann::json to_json() const;
    std::string save_string() const;
    void save_file(const std::filesystem::path& path) const;  // temp + rename

    // Load validates shape, referential integrity, id bounds and duplicate
    // edges (PersistError) but not acyclicity: call check_acyclic when the
    // source is untrusted.
    static MemoryGraph from_json(const nlohmann::json& doc);
    static MemoryGraph load_string(const std::string& text);
    static MemoryGraph load_file(const std::filesystem::path& path);

private:
    MemoryGraph() = default;

    ThoughtId insert_node(ThoughtKind kind, ActivationState state,
                          std::vector<Note> notes, ThoughtOrigin origin);
    bool reaches(ThoughtId from, ThoughtId to) const;  // BFS over out-edges

    std::map<ThoughtId, Thought> nodes_;
    std::vector<DependencyEdge> edges_;             // insertion order
    std::set<std::pair<ThoughtId, ThoughtId>> edge_index_;
    ThoughtId root_ = 1;
    ThoughtId next_id_ = 1;
    std::uint64_t next_seq_ = 0;
};

}  // namespace exmem
