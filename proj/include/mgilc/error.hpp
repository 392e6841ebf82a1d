#pragma once

#include <stdexcept>
#include <string>

namespace mgilc {

enum class ErrorKind {
    DanglingEndpoint,
    DisconnectedGraph,
    SelfLoop,
    SchemaViolation,
    UnknownScheme,
    NonFiniteInput,
    DcVoltageCollapse,
    AngleOutOfRange,
    SchemeStateMismatch,
    NoEquilibrium,
    PortMismatch,
    NewtonDivergence,
    StepSizeUnderflow,
    SingularResolvent,
    NonBracketing,
    EmptySeries,
    Io,
};

// Maps onto the process exit codes of the command line tool.
enum class ErrorCategory { Usage = 1, Validation = 2, Numerical = 3 };

const char* to_string(ErrorKind kind);
ErrorCategory category(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace mgilc
