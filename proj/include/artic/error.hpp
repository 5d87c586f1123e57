#pragma once

#include <stdexcept>
#include <string>

namespace artic {

/// Broad failure class. The CLI maps these onto its exit codes
/// (io -> 1, config/precondition -> 2, numerical -> 3).
enum class ErrorCategory { io, config, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

// I/O and file-format problems.
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorCategory::io, w) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& w) : Error(ErrorCategory::io, w) {}
};
struct CorruptFileError : Error {
    explicit CorruptFileError(const std::string& w) : Error(ErrorCategory::io, w) {}
};

// Violated preconditions and bad configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorCategory::config, w) {}
};
struct UnsupportedError : Error {
    explicit UnsupportedError(const std::string& w) : Error(ErrorCategory::config, w) {}
};
struct LengthError : Error {
    explicit LengthError(const std::string& w) : Error(ErrorCategory::config, w) {}
};
struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error(ErrorCategory::config, w) {}
};
struct LabelError : Error {
    explicit LabelError(const std::string& w) : Error(ErrorCategory::config, w) {}
};
struct StateError : Error {
    explicit StateError(const std::string& w) : Error(ErrorCategory::config, w) {}
};

struct DegenerateNoiseError : Error {
    explicit DegenerateNoiseError(const std::string& w) : Error(ErrorCategory::config, w) {}
};

// Numerical breakdown.
struct DivergenceError : Error {
    explicit DivergenceError(const std::string& w) : Error(ErrorCategory::numerical, w) {}
};

}  // namespace artic
