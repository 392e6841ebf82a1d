#include "mgilc/error.hpp"

namespace mgilc {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DanglingEndpoint: return "DanglingEndpoint";
        case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
        case ErrorKind::SelfLoop: return "SelfLoop";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::UnknownScheme: return "UnknownScheme";
        case ErrorKind::NonFiniteInput: return "NonFiniteInput";
        case ErrorKind::DcVoltageCollapse: return "DcVoltageCollapse";
        case ErrorKind::AngleOutOfRange: return "AngleOutOfRange";
        case ErrorKind::SchemeStateMismatch: return "SchemeStateMismatch";
        case ErrorKind::NoEquilibrium: return "NoEquilibrium";
        case ErrorKind::PortMismatch: return "PortMismatch";
        case ErrorKind::NewtonDivergence: return "NewtonDivergence";
        case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
        case ErrorKind::SingularResolvent: return "SingularResolvent";
        case ErrorKind::NonBracketing: return "NonBracketing";
        case ErrorKind::EmptySeries: return "EmptySeries";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

ErrorCategory category(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DanglingEndpoint:
        case ErrorKind::DisconnectedGraph:
        case ErrorKind::SelfLoop:
        case ErrorKind::SchemaViolation:
        case ErrorKind::UnknownScheme:
        case ErrorKind::NonFiniteInput:
        case ErrorKind::SchemeStateMismatch:
        case ErrorKind::PortMismatch:
        case ErrorKind::EmptySeries:
        case ErrorKind::Io:
            return ErrorCategory::Validation;
        default:
            return ErrorCategory::Numerical;
    }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace mgilc
