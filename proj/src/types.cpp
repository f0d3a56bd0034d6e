#include "exmem/types.hpp"

#include "exmem/errors.hpp"

namespace exmem {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyTask: return "EmptyTask";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::UnknownDependency: return "UnknownDependency";
        case ErrorCode::IllegalKind: return "IllegalKind";
        case ErrorCode::IllegalTransition: return "IllegalTransition";
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MalformedLine: return "MalformedLine";
        case ErrorCode::MissingHeader: return "MissingHeader";
        case ErrorCode::ProtocolViolation: return "ProtocolViolation";
        case ErrorCode::ScriptExhausted: return "ScriptExhausted";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::BudgetUnsatisfiable: return "BudgetUnsatisfiable";
        case ErrorCode::ContextOverflow: return "ContextOverflow";
        case ErrorCode::HandleClosed: return "HandleClosed";
        case ErrorCode::PersistError: return "PersistError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

const char* to_string(ThoughtKind kind) {
    switch (kind) {
        case ThoughtKind::Task: return "task";
        case ThoughtKind::Subtask: return "subtask";
        case ThoughtKind::Evidence: return "evidence";
        case ThoughtKind::Summary: return "summary";
    }
    return "unknown";
}

const char* to_string(ActivationState state) {
    return state == ActivationState::Active ? "active" : "inactive";
}

const char* to_string(ThoughtOrigin origin) {
    switch (origin) {
        case ThoughtOrigin::Constructed: return "constructed";
        case ThoughtOrigin::FoldSummary: return "fold_summary";
        case ThoughtOrigin::FlushCompact: return "flush_compact";
    }
    return "unknown";
}

const char* to_string(NoteRole role) {
    return role == NoteRole::Assistant ? "assistant" : "user";
}

ThoughtKind thought_kind_from_string(const std::string& text) {
    if (text == "task") return ThoughtKind::Task;
    if (text == "subtask") return ThoughtKind::Subtask;
    if (text == "evidence") return ThoughtKind::Evidence;
    if (text == "summary") return ThoughtKind::Summary;
    throw Error(ErrorCode::InvalidArgument, "unknown thought kind '" + text + "'");
}

ActivationState activation_state_from_string(const std::string& text) {
    if (text == "active") return ActivationState::Active;
    if (text == "inactive") return ActivationState::Inactive;
    throw Error(ErrorCode::InvalidArgument, "unknown activation state '" + text + "'");
}

ThoughtOrigin thought_origin_from_string(const std::string& text) {
    if (text == "constructed") return ThoughtOrigin::Constructed;
    if (text == "fold_summary") return ThoughtOrigin::FoldSummary;
    if (text == "flush_compact") return ThoughtOrigin::FlushCompact;
    throw Error(ErrorCode::InvalidArgument, "unknown thought origin '" + text + "'");
}

NoteRole note_role_from_string(const std::string& text) {
    if (text == "assistant") return NoteRole::Assistant;
    if (text == "user") return NoteRole::User;
    throw Error(ErrorCode::InvalidArgument, "unknown note role '" + text + "'");
}

}  // namespace exmem
