#include <doctest.h>

#include <functional>
#include <random>
#include <set>

#include "exmem/errors.hpp"
#include "exmem/graph.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace exmem;
using namespace exmem::testing;

namespace {

MemoryGraph small_graph() {
    MemoryGraph graph = MemoryGraph::create("solve the demo task");
    graph.add_thought(ThoughtKind::Subtask, {Note{NoteRole::Assistant, "plan"}}, {1});     // 2
    graph.add_thought(ThoughtKind::Evidence, {Note{NoteRole::User, "observed"}}, {2});     // 3
    graph.add_thought(ThoughtKind::Subtask, {Note{NoteRole::Assistant, "branch"}}, {2});   // 4
    return graph;
}

bool throws_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& err) {
        return err.code() == code;
    }
    return false;
}

}  // namespace

TEST_CASE("create seeds the root task node") {
    MemoryGraph graph = MemoryGraph::create("find the author");
    CHECK(graph.root() == 1);
    CHECK(graph.node_count() == 1);
    CHECK(graph.edge_count() == 0);
    CHECK(graph.next_id() == 2);
    const Thought& root = graph.thought(1);
    CHECK(root.kind == ThoughtKind::Task);
    CHECK(root.state == ActivationState::Active);
    CHECK(root.origin == ThoughtOrigin::Constructed);
    REQUIRE(root.notes.size() == 1);
    CHECK(root.notes[0].role == NoteRole::User);
    CHECK(root.notes[0].content == "find the author");
}

TEST_CASE("create rejects blank task text") {
    CHECK(throws_code(ErrorCode::EmptyTask, [] { MemoryGraph::create(""); }));
    CHECK(throws_code(ErrorCode::EmptyTask, [] { MemoryGraph::create("   \n\t "); }));
}

TEST_CASE("add_thought assigns sequential ids and dependency edges") {
    MemoryGraph graph = MemoryGraph::create("t");
    ThoughtId a = graph.add_thought(ThoughtKind::Subtask, {Note{NoteRole::Assistant, "a"}}, {1});
    ThoughtId b = graph.add_thought(ThoughtKind::Evidence, {Note{NoteRole::User, "b"}}, {1, a});
    CHECK(a == 2);
    CHECK(b == 3);
    CHECK(graph.has_edge(1, 2));
    CHECK(graph.has_edge(1, 3));
    CHECK(graph.has_edge(2, 3));
    CHECK(graph.edges_into(3).size() == 2);
    // Dependency edges synthesized by add_thought carry no rationale.
    for (const DependencyEdge& edge : graph.edges_into(3)) CHECK(edge.rationale.empty());
}

TEST_CASE("add_thought validates kind, notes and dependencies") {
    MemoryGraph graph = small_graph();
    CHECK(throws_code(ErrorCode::IllegalKind, [&] {
        graph.add_thought(ThoughtKind::Task, {Note{NoteRole::User, "x"}}, {});
    }));
    CHECK(throws_code(ErrorCode::IllegalKind, [&] {
        graph.add_thought(ThoughtKind::Summary, {Note{NoteRole::User, "x"}}, {});
    }));
    CHECK(throws_code(ErrorCode::InvalidArgument,
                      [&] { graph.add_thought(ThoughtKind::Subtask, {}, {1}); }));
    CHECK(throws_code(ErrorCode::InvalidArgument, [&] {
        graph.add_thought(ThoughtKind::Subtask, {Note{NoteRole::User, ""}}, {1});
    }));
    CHECK(throws_code(ErrorCode::UnknownDependency, [&] {
        graph.add_thought(ThoughtKind::Subtask, {Note{NoteRole::User, "x"}}, {99});
    }));
    // Failed inserts must not burn an id.
    CHECK(graph.next_id() == 5);
    CHECK(graph.add_thought(ThoughtKind::Subtask, {Note{NoteRole::User, "ok"}}, {}) == 5);
}

TEST_CASE("ids are strictly increasing and never reused") {
    MemoryGraph graph = small_graph();
    std::vector<ThoughtId> seen;
    seen.push_back(graph.add_thought(ThoughtKind::Subtask, {Note{NoteRole::User, "n"}}, {1}));
    seen.push_back(graph.add_fold_summary({Note{NoteRole::Assistant, "s"}}));
    seen.push_back(graph.add_thought(ThoughtKind::Evidence, {Note{NoteRole::User, "n"}}, {2}));
    for (std::size_t i = 1; i < seen.size(); i++) CHECK(seen[i] > seen[i - 1]);
}

TEST_CASE("add_edge rejects unknown endpoints, self loops and duplicates") {
    MemoryGraph graph = small_graph();
    CHECK(throws_code(ErrorCode::UnknownNode, [&] { graph.add_edge(1, 42, "r"); }));
    CHECK(throws_code(ErrorCode::UnknownNode, [&] { graph.add_edge(42, 1, "r"); }));
    CHECK(throws_code(ErrorCode::CycleDetected, [&] { graph.add_edge(2, 2, "self"); }));

    std::size_t edges_before = graph.edge_count();
    graph.add_edge(1, 3, "first rationale");
    CHECK(graph.edge_count() == edges_before + 1);
    graph.add_edge(1, 3, "second rationale");  // duplicate: silently kept as-is
    CHECK(graph.edge_count() == edges_before + 1);
    for (const DependencyEdge& edge : graph.edges_into(3)) {
        if (edge.src == 1) CHECK(edge.rationale == "first rationale");
    }
}

TEST_CASE("add_edge refuses edges that would close a cycle, leaving the graph unchanged") {
    MemoryGraph graph = small_graph();  // 1 -> 2 -> {3, 4}
    MemoryGraph snapshot = graph;
    CHECK(throws_code(ErrorCode::CycleDetected, [&] { graph.add_edge(3, 1, "back"); }));
    CHECK(throws_code(ErrorCode::CycleDetected, [&] { graph.add_edge(4, 2, "back"); }));
    CHECK(graph == snapshot);
    // A diagonal that closes no cycle is fine.
    graph.add_edge(3, 4, "cross");
    CHECK(graph.has_edge(3, 4));
    CHECK(graph.check_acyclic());
}

TEST_CASE("set_state transitions are one-way and root-protected") {
    MemoryGraph graph = small_graph();
    graph.set_state(3, ActivationState::Inactive);
    CHECK(graph.thought(3).state == ActivationState::Inactive);
    graph.set_state(3, ActivationState::Inactive);  // idempotent
    CHECK(throws_code(ErrorCode::IllegalTransition,
                      [&] { graph.set_state(3, ActivationState::Active); }));
    CHECK(throws_code(ErrorCode::IllegalTransition,
                      [&] { graph.set_state(1, ActivationState::Inactive); }));
    CHECK(throws_code(ErrorCode::UnknownNode,
                      [&] { graph.set_state(42, ActivationState::Inactive); }));
}

TEST_CASE("flush_compact replaces content and deactivates, keeping edges") {
    MemoryGraph graph = small_graph();
    std::size_t edges_before = graph.edge_count();
    graph.flush_compact(2, "superseded by later evidence");
    const Thought& flushed = graph.thought(2);
    CHECK(flushed.origin == ThoughtOrigin::FlushCompact);
    CHECK(flushed.state == ActivationState::Inactive);
    REQUIRE(flushed.notes.size() == 1);
    CHECK(flushed.notes[0].role == NoteRole::Assistant);
    CHECK(flushed.notes[0].content == "flushed: superseded by later evidence");
    CHECK(graph.edge_count() == edges_before);
    CHECK(throws_code(ErrorCode::IllegalTransition, [&] { graph.flush_compact(1, "nope"); }));
}

TEST_CASE("fold summaries enter active with no edges") {
    MemoryGraph graph = small_graph();
    ThoughtId summary = graph.add_fold_summary({Note{NoteRole::Assistant, "rolled up"}});
    CHECK(graph.thought(summary).kind == ThoughtKind::Summary);
    CHECK(graph.thought(summary).origin == ThoughtOrigin::FoldSummary);
    CHECK(graph.thought(summary).state == ActivationState::Active);
    CHECK(graph.edges_into(summary).empty());
    CHECK(graph.edges_from(summary).empty());
}

TEST_CASE("active_view drops inactive nodes and their incident edges") {
    MemoryGraph graph = small_graph();
    graph.add_edge(3, 4, "cross");
    graph.set_state(3, ActivationState::Inactive);
    MemoryGraph view = graph.active_view();
    CHECK(view.node_count() == 3);
    CHECK_FALSE(view.contains(3));
    CHECK(view.has_edge(1, 2));
    CHECK(view.has_edge(2, 4));
    CHECK_FALSE(view.has_edge(2, 3));
    CHECK_FALSE(view.has_edge(3, 4));
    CHECK(view.root() == graph.root());
    CHECK(view.next_id() == graph.next_id());
    // The view is detached: mutating it leaves the original alone.
    view.add_thought(ThoughtKind::Subtask, {Note{NoteRole::User, "detached"}}, {1});
    CHECK_FALSE(graph.contains(5));
}

TEST_CASE("check_acyclic agrees with the DFS oracle on random graphs") {
    std::mt19937_64 rng(20260825);
    for (int round = 0; round < 50; round++) {
        MemoryGraph graph = random_graph(rng, 30);
        CHECK(graph.check_acyclic());
        CHECK_FALSE(oracle_has_cycle(graph));
    }
}

TEST_CASE("check_acyclic catches a cycle smuggled in through load") {
    // The loader deliberately skips cycle checking; build a cyclic document.
    MemoryGraph graph = small_graph();
    nlohmann::json doc = graph.to_json();
    doc["edges"].push_back({{"src", 4}, {"dst", 2}, {"rationale", "closes 2->4->2"}});
    MemoryGraph loaded = MemoryGraph::from_json(doc);
    CHECK_FALSE(loaded.check_acyclic());
    CHECK(oracle_has_cycle(loaded));
}

TEST_CASE("persistence round-trips exactly") {
    MemoryGraph graph = small_graph();
    graph.add_fold_summary({Note{NoteRole::Assistant, "s"}});
    graph.flush_compact(3, "done");
    graph.add_edge(1, 4, "with rationale");

    std::string saved = graph.save_string();
    MemoryGraph loaded = MemoryGraph::load_string(saved);
    CHECK(loaded == graph);
    CHECK(loaded.save_string() == saved);  // byte-for-byte stable
}

TEST_CASE("save_file writes atomically and load_file reads it back") {
    MemoryGraph graph = small_graph();
    auto path = std::filesystem::temp_directory_path() / "exmem_graph_roundtrip.json";
    graph.save_file(path);
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    MemoryGraph loaded = MemoryGraph::load_file(path);
    CHECK(loaded == graph);
    std::filesystem::remove(path);
}

TEST_CASE("load rejects malformed documents") {
    MemoryGraph graph = small_graph();
    auto expect_reject = [&](const std::function<void(nlohmann::json&)>& corrupt) {
        nlohmann::json doc = graph.to_json();
        corrupt(doc);
        return throws_code(ErrorCode::PersistError, [&] { MemoryGraph::from_json(doc); });
    };
    CHECK(throws_code(ErrorCode::PersistError, [] { MemoryGraph::load_string("not json"); }));
    CHECK(throws_code(ErrorCode::PersistError, [] { MemoryGraph::load_string("[1,2]"); }));
    CHECK(expect_reject([](nlohmann::json& d) { d.erase("version"); }));
    CHECK(expect_reject([](nlohmann::json& d) { d["version"] = 99; }));
    CHECK(expect_reject([](nlohmann::json& d) { d.erase("nodes"); }));
    CHECK(expect_reject([](nlohmann::json& d) { d["nodes"][0]["kind"] = "banana"; }));
    CHECK(expect_reject([](nlohmann::json& d) { d["nodes"][0]["kind"] = "subtask"; }));  // root
    CHECK(expect_reject([](nlohmann::json& d) { d["nodes"][1]["id"] = 1; }));  // duplicate
    CHECK(expect_reject([](nlohmann::json& d) { d["next_id"] = 2; }));
    CHECK(expect_reject([](nlohmann::json& d) {
        d["edges"].push_back({{"src", 2}, {"dst", 2}, {"rationale", ""}});
    }));
    CHECK(expect_reject([](nlohmann::json& d) {
        d["edges"].push_back(d["edges"][0]);  // duplicate edge
    }));
    CHECK(expect_reject([](nlohmann::json& d) {
        d["edges"].push_back({{"src", 2}, {"dst", 77}, {"rationale", ""}});
    }));
    CHECK(expect_reject([](nlohmann::json& d) {
        // A fold summary must be a Summary node.
        d["nodes"][1]["origin"] = "fold_summary";
    }));
    CHECK(expect_reject([](nlohmann::json& d) {
        // Flush residue can never be active.
        d["nodes"][1]["origin"] = "flush_compact";
        d["nodes"][1]["state"] = "active";
    }));
}

TEST_CASE("graph equality spots content differences") {
    MemoryGraph a = small_graph();
    MemoryGraph b = small_graph();
    CHECK(a == b);
    b.flush_compact(3, "diverge");
    CHECK_FALSE(a == b);
}
