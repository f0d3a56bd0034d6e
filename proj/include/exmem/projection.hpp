#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "exmem/graph.hpp"
#include "exmem/trajectory.hpp"

namespace exmem {

// What the agent would see: the rendered memory outline plus whatever raw
// episodes were still pending, trimmed to the budget.
struct ProjectedContext {
    std::string rendered;
    std::size_t token_count = 0;           // estimator over `rendered`
    std::vector<ThoughtId> included_ids;   // nodes present in the outline, ascending
    std::size_t omitted_inactive = 0;      // inactive nodes hidden from this projection
};

// Renders the graph as an indented pre-order outline: one "- Node <id>: ..."
// line per node, one "--[->] Node <dst> ..." line per edge under its source,
// children ordered by id, indentation two spaces per level of the longest
// path from a component root. include_inactive=false renders the active view
// (inactive nodes and their incident edges disappear). Output always has
// exactly node_count + edge_count lines.
std::string render_graph_outline(const MemoryGraph& graph, bool include_inactive);

// Outline over the active view followed by the pending episodes, oldest
// first. Episodes are dropped oldest-first until the total fits the budget;
// the outline itself is never truncated here. Throws BudgetUnsatisfiable if
// the outline alone exceeds the budget.
ProjectedContext project_context(const MemoryGraph& graph,
                                 const std::vector<Episode>& recent_episodes,
                                 std::size_t budget_tokens,
                                 const TokenEstimator& estimator = {});

}  // namespace exmem
