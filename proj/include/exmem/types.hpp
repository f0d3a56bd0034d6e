#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace exmem {

// Node ids are assigned sequentially starting at 1 (the root task) and are
// never reused, so an id doubles as a creation-order stamp.
using ThoughtId = std::uint64_t;

enum class ThoughtKind { Task, Subtask, Evidence, Summary };

// Transitions are one-way: a thought can be deactivated but never reactivated.
enum class ActivationState { Active, Inactive };

// How a thought entered the graph.
enum class ThoughtOrigin {
    Constructed,   // appended by the memorization step
    FoldSummary,   // created as the replacement node of a fold
    FlushCompact,  // the compact residue left behind by a flush
};

enum class NoteRole { Assistant, User };

// One entry of a thought's note list: a condensed piece of the original
// reasoning, attributed to the side that produced it.
struct Note {
    NoteRole role = NoteRole::Assistant;
    std::string content;

    bool operator==(const Note&) const = default;
};

struct Thought {
    ThoughtId id = 0;
    ThoughtKind kind = ThoughtKind::Subtask;
    ActivationState state = ActivationState::Active;
    std::vector<Note> notes;
    ThoughtOrigin origin = ThoughtOrigin::Constructed;
    std::uint64_t created_seq = 0;

    bool operator==(const Thought&) const = default;
};

// Directed dependency: dst depends on (was derived from) src. The rationale
// is free text explaining the link; empty for synthesized edges.
struct DependencyEdge {
    ThoughtId src = 0;
    ThoughtId dst = 0;
    std::string rationale;

    bool operator==(const DependencyEdge&) const = default;
};

// String forms used by both the persistence format and the wire protocols.
const char* to_string(ThoughtKind kind);
const char* to_string(ActivationState state);
const char* to_string(ThoughtOrigin origin);
const char* to_string(NoteRole role);

ThoughtKind thought_kind_from_string(const std::string& text);
ActivationState activation_state_from_string(const std::string& text);
ThoughtOrigin thought_origin_from_string(const std::string& text);
NoteRole note_role_from_string(const std::string& text);

}  // namespace exmem
