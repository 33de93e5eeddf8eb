#pragma once

#include <stdexcept>
#include <string>

namespace kamred {

enum class ErrorKind { Validation, Numerical, Io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& code() const { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

inline Error validation_error(const std::string& code, const std::string& what) {
    return Error(ErrorKind::Validation, code, what);
}
inline Error numerical_error(const std::string& code, const std::string& what) {
    return Error(ErrorKind::Numerical, code, what);
}
inline Error io_error(const std::string& code, const std::string& what) {
    return Error(ErrorKind::Io, code, what);
}

// Exit code used by the command line front end.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Validation: return 2;
    case ErrorKind::Numerical: return 3;
    case ErrorKind::Io: return 4;
    }
    return 1;
}

} // namespace kamred
