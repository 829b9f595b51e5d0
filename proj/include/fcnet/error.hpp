#pragma once

#include <stdexcept>
#include <string>

namespace fcnet {

/// Failure categories. The CLI maps these onto process exit codes and the
/// service onto HTTP statuses, so every thrown error carries one.
enum class ErrorKind {
    Parse,
    DuplicateRecord,
    IncompletePanel,
    HorizonOrder,
    Domain,
    ZeroVariance,
    SampleTooSmall,
    Shape,
    Singularity,
    Convergence,
    Rank,
    Definiteness,
    DegenerateDirection,
    DegenerateInput,
    Numeric,
    Spec,
    Io,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::DuplicateRecord: return "duplicate-record";
        case ErrorKind::IncompletePanel: return "incomplete-panel";
        case ErrorKind::HorizonOrder: return "horizon-order";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::ZeroVariance: return "zero-variance";
        case ErrorKind::SampleTooSmall: return "sample-too-small";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Singularity: return "singularity";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::Rank: return "rank";
        case ErrorKind::Definiteness: return "definiteness";
        case ErrorKind::DegenerateDirection: return "degenerate-direction";
        case ErrorKind::DegenerateInput: return "degenerate-input";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Spec: return "spec";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Solver non-convergence; keeps the last KKT residual for diagnostics.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, double residual)
        : Error(ErrorKind::Convergence, message), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace fcnet
