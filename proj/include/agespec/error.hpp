#pragma once

#include <stdexcept>
#include <string>

namespace agespec {

/// Error categories. Each maps onto one CLI exit code.
enum class ErrorKind {
    config,        ///< malformed or invalid input
    domain,        ///< argument outside the admissible set
    numerical,     ///< solver failure (bracket, nonconvergence, instability)
    verification,  ///< a checked property does not hold
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Short machine-readable tag, e.g. "bracket_failure".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::domain: return 3;
        case ErrorKind::numerical: return 3;
        case ErrorKind::verification: return 1;
    }
    return 3;
}

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::domain: return "domain";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::verification: return "verification";
    }
    return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& code, const std::string& message) {
    throw Error(kind, code, message);
}

}  // namespace agespec
