#pragma once

#include <stdexcept>
#include <string>

namespace exmem {

// Every failure the library raises carries one of these codes so callers can
// branch on the condition without parsing message text.
enum class ErrorCode {
    EmptyTask,            // new_graph called with an empty task description
    UnknownNode,          // an id that is not present in the graph
    UnknownDependency,    // a dependency id that is not present in the graph
    IllegalKind,          // a node kind not allowed on this path (task/summary via construction)
    IllegalTransition,    // inactive -> active, or deactivating the root task
    CycleDetected,        // the edge would close a directed cycle
    InvalidArgument,      // a structural precondition broken by the caller (empty notes, ...)
    MalformedLine,        // a trajectory line that is not a valid event
    MissingHeader,        // a trajectory stream without the header line
    ProtocolViolation,    // model output that does not satisfy the wire protocol
    ScriptExhausted,      // a scripted backend ran out of queued responses
    BackendUnavailable,   // HTTP backend transport failure or non-success status
    BudgetUnsatisfiable,  // the outline alone exceeds the context budget
    ContextOverflow,      // management could not bring the outline under budget
    HandleClosed,         // operation on a closed sidecar handle
    PersistError,         // load/save failure or an invalid persisted graph
    ConfigError,          // invalid runtime or backend configuration
};

const char* error_code_name(ErrorCode code);

// Single exception type for the library; `code()` identifies the condition.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace exmem
