#include "exmem/graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <sstream>

#include "exmem/errors.hpp"

namespace exmem {

namespace {

bool is_blank(const std::string& text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

void require_notes(const std::vector<Note>& notes) {
    if (notes.empty()) {
        throw Error(ErrorCode::InvalidArgument, "note list must not be empty");
    }
    for (const Note& note : notes) {
        if (note.content.empty()) {
            throw Error(ErrorCode::InvalidArgument, "note content must not be empty");
        }
    }
}

}  // namespace

MemoryGraph MemoryGraph::create(const std::string& task_text) {
    if (task_text.empty() || is_blank(task_text)) {
        throw Error(ErrorCode::EmptyTask, "task description must not be empty");
    }
    MemoryGraph g;
    g.insert_node(ThoughtKind::Task, ActivationState::Active,
                  {Note{NoteRole::User, task_text}}, ThoughtOrigin::Constructed);
    return g;
}

ThoughtId MemoryGraph::insert_node(ThoughtKind kind, ActivationState state,
                                   std::vector<Note> notes, ThoughtOrigin origin) {
    Thought t;
    t.id = next_id_++;
    t.kind = kind;
    t.state = state;
    t.notes = std::move(notes);
    t.origin = origin;
    t.created_seq = next_seq_++;
    ThoughtId id = t.id;
    nodes_.emplace(id, std::move(t));
    return id;
}

ThoughtId MemoryGraph::add_thought(ThoughtKind kind, std::vector<Note> notes,
                                   const std::vector<ThoughtId>& deps) {
    if (kind != ThoughtKind::Subtask && kind != ThoughtKind::Evidence) {
        throw Error(ErrorCode::IllegalKind,
                    std::string("constructed thoughts must be subtask or evidence, got '") +
                        to_string(kind) + "'");
    }
    require_notes(notes);
    for (ThoughtId dep : deps) {
        if (!contains(dep)) {
            throw Error(ErrorCode::UnknownDependency,
                        "dependency " + std::to_string(dep) + " does not exist");
        }
    }
    ThoughtId id = insert_node(kind, ActivationState::Active, std::move(notes),
                               ThoughtOrigin::Constructed);
    for (ThoughtId dep : deps) {
        add_edge(dep, id, "");
    }
    return id;
}

ThoughtId MemoryGraph::add_fold_summary(std::vector<Note> notes) {
    require_notes(notes);
    return insert_node(ThoughtKind::Summary, ActivationState::Active, std::move(notes),
                       ThoughtOrigin::FoldSummary);
}

bool MemoryGraph::reaches(ThoughtId from, ThoughtId to) const {
    if (from == to) return true;
    std::deque<ThoughtId> frontier{from};
    std::set<ThoughtId> seen{from};
    while (!frontier.empty()) {
        ThoughtId cur = frontier.front();
        frontier.pop_front();
        auto it = edge_index_.lower_bound({cur, 0});
        for (; it != edge_index_.end() && it->first == cur; ++it) {
            ThoughtId next = it->second;
            if (next == to) return true;
            if (seen.insert(next).second) frontier.push_back(next);
        }
    }
    return false;
}

void MemoryGraph::add_edge(ThoughtId src, ThoughtId dst, const std::string& rationale) {
    if (!contains(src)) {
        throw Error(ErrorCode::UnknownNode, "edge source " + std::to_string(src) + " does not exist");
    }
    if (!contains(dst)) {
        throw Error(ErrorCode::UnknownNode, "edge target " + std::to_string(dst) + " does not exist");
    }
    if (src == dst) {
        throw Error(ErrorCode::CycleDetected, "self edge on " + std::to_string(src));
    }
    if (edge_index_.count({src, dst}) != 0) {
        return;  // idempotent: the first rationale wins
    }
    // The new edge closes a cycle exactly when dst already reaches src.
    if (reaches(dst, src)) {
        throw Error(ErrorCode::CycleDetected,
                    "edge " + std::to_string(src) + " -> " + std::to_string(dst) +
                        " would close a cycle");
    }
    edges_.push_back(DependencyEdge{src, dst, rationale});
    edge_index_.insert({src, dst});
}

void MemoryGraph::set_state(ThoughtId id, ActivationState state) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id) + " does not exist");
    }
    if (state == ActivationState::Active && it->second.state == ActivationState::Inactive) {
        throw Error(ErrorCode::IllegalTransition,
                    "node " + std::to_string(id) + " cannot be reactivated");
    }
    if (state == ActivationState::Inactive && id == root_) {
        throw Error(ErrorCode::IllegalTransition, "the root task node cannot be deactivated");
    }
    it->second.state = state;  // deactivation is idempotent
}

void MemoryGraph::flush_compact(ThoughtId id, const std::string& rationale) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id) + " does not exist");
    }
    if (id == root_) {
        throw Error(ErrorCode::IllegalTransition, "the root task node cannot be flushed");
    }
    it->second.notes = {Note{NoteRole::Assistant, "flushed: " + rationale}};
    it->second.origin = ThoughtOrigin::FlushCompact;
    it->second.state = ActivationState::Inactive;
}

MemoryGraph MemoryGraph::active_view() const {
    MemoryGraph view;
    view.root_ = root_;
    view.next_id_ = next_id_;
    view.next_seq_ = next_seq_;
    for (const auto& [id, node] : nodes_) {
        if (node.state == ActivationState::Active) view.nodes_.emplace(id, node);
    }
    for (const DependencyEdge& e : edges_) {
        if (view.contains(e.src) && view.contains(e.dst)) {
            view.edges_.push_back(e);
            view.edge_index_.insert({e.src, e.dst});
        }
    }
    return view;
}

bool MemoryGraph::check_acyclic() const {
    // Kahn peeling over the full edge set; independent of add_edge's
    // reachability test on purpose.
    std::map<ThoughtId, std::size_t> indegree;
    for (const auto& [id, node] : nodes_) indegree[id] = 0;
    for (const DependencyEdge& e : edges_) indegree[e.dst]++;
    std::deque<ThoughtId> ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.push_back(id);
    }
    std::size_t peeled = 0;
    while (!ready.empty()) {
        ThoughtId cur = ready.front();
        ready.pop_front();
        peeled++;
        auto it = edge_index_.lower_bound({cur, 0});
        for (; it != edge_index_.end() && it->first == cur; ++it) {
            if (--indegree[it->second] == 0) ready.push_back(it->second);
        }
    }
    return peeled == nodes_.size();
}

const Thought& MemoryGraph::thought(ThoughtId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id) + " does not exist");
    }
    return it->second;
}

std::vector<ThoughtId> MemoryGraph::ids() const {
    std::vector<ThoughtId> out;
    out.reserve(nodes_.size());
    for (const auto& [id, node] : nodes_) out.push_back(id);
    return out;
}

std::vector<DependencyEdge> MemoryGraph::edges_from(ThoughtId src) const {
    std::vector<DependencyEdge> out;
    for (const DependencyEdge& e : edges_) {
        if (e.src == src) out.push_back(e);
    }
    return out;
}

std::vector<DependencyEdge> MemoryGraph::edges_into(ThoughtId dst) const {
    std::vector<DependencyEdge> out;
    for (const DependencyEdge& e : edges_) {
        if (e.dst == dst) out.push_back(e);
    }
    return out;
}

bool MemoryGraph::has_edge(ThoughtId src, ThoughtId dst) const {
    return edge_index_.count({src, dst}) != 0;
}

std::size_t MemoryGraph::count_state(ActivationState state) const {
    std::size_t n = 0;
    for (const auto& [id, node] : nodes_) {
        if (node.state == state) n++;
    }
    return n;
}

bool MemoryGraph::operator==(const MemoryGraph& other) const {
    return root_ == other.root_ && next_id_ == other.next_id_ && nodes_ == other.nodes_ &&
           edges_ == other.edges_;
}

nlohmann::json MemoryGraph::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, node] : nodes_) {
        nlohmann::json notes = nlohmann::json::array();
        for (const Note& note : node.notes) {
            notes.push_back({{"role", to_string(note.role)}, {"content", note.content}});
        }
        nodes.push_back({{"id", node.id},
                         {"kind", to_string(node.kind)},
                         {"state", to_string(node.state)},
                         {"notes", std::move(notes)},
                         {"origin", to_string(node.origin)},
                         {"created_seq", node.created_seq}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const DependencyEdge& e : edges_) {
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"rationale", e.rationale}});
    }
    return nlohmann::json{{"version", 1},
                          {"root", root_},
                          {"next_id", next_id_},
                          {"nodes", std::move(nodes)},
                          {"edges", std::move(edges)}};
}

std::string MemoryGraph::save_string() const { return to_json().dump(2) + "\n"; }

void MemoryGraph::save_file(const std::filesystem::path& path) const {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::PersistError, "cannot open " + tmp.string() + " for writing");
        }
        out << save_string();
        if (!out.good()) {
            throw Error(ErrorCode::PersistError, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(ErrorCode::PersistError,
                    "rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
    }
}

namespace {

const nlohmann::json& require_field(const nlohmann::json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) {
        throw Error(ErrorCode::PersistError, std::string("missing field '") + key + "'");
    }
    return *it;
}

std::uint64_t require_uint(const nlohmann::json& doc, const char* key) {
    const nlohmann::json& value = require_field(doc, key);
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
        throw Error(ErrorCode::PersistError, std::string("field '") + key + "' must be a non-negative integer");
    }
    return value.get<std::uint64_t>();
}

std::string require_string(const nlohmann::json& doc, const char* key) {
    const nlohmann::json& value = require_field(doc, key);
    if (!value.is_string()) {
        throw Error(ErrorCode::PersistError, std::string("field '") + key + "' must be a string");
    }
    return value.get<std::string>();
}

}  // namespace

MemoryGraph MemoryGraph::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::PersistError, "graph document must be a JSON object");
    }
    if (require_uint(doc, "version") != 1) {
        throw Error(ErrorCode::PersistError, "unsupported graph version");
    }
    MemoryGraph g;
    g.root_ = require_uint(doc, "root");
    g.next_id_ = require_uint(doc, "next_id");
    const nlohmann::json& nodes = require_field(doc, "nodes");
    const nlohmann::json& edges = require_field(doc, "edges");
    if (!nodes.is_array() || !edges.is_array()) {
        throw Error(ErrorCode::PersistError, "'nodes' and 'edges' must be arrays");
    }
    ThoughtId max_id = 0;
    std::uint64_t max_seq = 0;
    try {
        for (const nlohmann::json& item : nodes) {
            Thought t;
            t.id = require_uint(item, "id");
            t.kind = thought_kind_from_string(require_string(item, "kind"));
            t.state = activation_state_from_string(require_string(item, "state"));
            t.origin = thought_origin_from_string(require_string(item, "origin"));
            t.created_seq = require_uint(item, "created_seq");
            const nlohmann::json& notes = require_field(item, "notes");
            if (!notes.is_array()) {
                throw Error(ErrorCode::PersistError, "'notes' must be an array");
            }
            for (const nlohmann::json& note : notes) {
                t.notes.push_back(Note{note_role_from_string(require_string(note, "role")),
                                       require_string(note, "content")});
            }
            if (t.id == 0) {
                throw Error(ErrorCode::PersistError, "node id 0 is not allowed");
            }
            if ((t.origin == ThoughtOrigin::FoldSummary) != (t.kind == ThoughtKind::Summary)) {
                throw Error(ErrorCode::PersistError,
                            "fold_summary origin and summary kind must coincide (node " +
                                std::to_string(t.id) + ")");
            }
            if (t.origin == ThoughtOrigin::FlushCompact &&
                (t.state != ActivationState::Inactive || t.notes.size() > 2)) {
                throw Error(ErrorCode::PersistError,
                            "flush_compact node " + std::to_string(t.id) +
                                " must be inactive with at most two notes");
            }
            max_id = std::max(max_id, t.id);
            max_seq = std::max(max_seq, t.created_seq + 1);
            if (!g.nodes_.emplace(t.id, std::move(t)).second) {
                throw Error(ErrorCode::PersistError, "duplicate node id");
            }
        }
        for (const nlohmann::json& item : edges) {
            DependencyEdge e;
            e.src = require_uint(item, "src");
            e.dst = require_uint(item, "dst");
            e.rationale = require_string(item, "rationale");
            if (!g.contains(e.src) || !g.contains(e.dst)) {
                throw Error(ErrorCode::PersistError, "edge references a missing node");
            }
            if (e.src == e.dst) {
                throw Error(ErrorCode::PersistError, "self edge is not allowed");
            }
            if (!g.edge_index_.insert({e.src, e.dst}).second) {
                throw Error(ErrorCode::PersistError, "duplicate edge");
            }
            g.edges_.push_back(std::move(e));
        }
    } catch (const Error& err) {
        if (err.code() == ErrorCode::PersistError) throw;
        throw Error(ErrorCode::PersistError, err.what());
    }
    if (!g.contains(g.root_)) {
        throw Error(ErrorCode::PersistError, "root node is missing");
    }
    if (g.thought(g.root_).kind != ThoughtKind::Task) {
        throw Error(ErrorCode::PersistError, "root node must be a task");
    }
    if (g.next_id_ <= max_id) {
        throw Error(ErrorCode::PersistError, "next_id must exceed every node id");
    }
    g.next_seq_ = max_seq;
    return g;
}

MemoryGraph MemoryGraph::load_string(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::PersistError, "graph document is not valid JSON");
    }
    return from_json(doc);
}

MemoryGraph MemoryGraph::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::PersistError, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_string(buf.str());
}

}  // namespace exmem
