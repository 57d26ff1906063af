#pragma once

#include <stdexcept>
#include <string>

namespace scimet {

// Failure classes map 1:1 onto CLI exit codes (see tools/).
enum class ErrorKind {
    Config,        // bad configuration or unresolvable configured path
    Validation,    // input data violates the corpus contract
    Convergence,   // iterative procedure failed to converge / went non-finite
    Precondition,  // operation called before its inputs exist
    Io,            // read/write failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error config_error(std::string msg) { return Error(ErrorKind::Config, std::move(msg)); }
inline Error validation_error(std::string msg) { return Error(ErrorKind::Validation, std::move(msg)); }
inline Error convergence_error(std::string msg) { return Error(ErrorKind::Convergence, std::move(msg)); }
inline Error precondition_error(std::string msg) { return Error(ErrorKind::Precondition, std::move(msg)); }
inline Error io_error(std::string msg) { return Error(ErrorKind::Io, std::move(msg)); }

} // namespace scimet
