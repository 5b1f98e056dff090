#pragma once

#include <stdexcept>
#include <string>

namespace rkfusion {

struct SingularSystemError : std::runtime_error {
    explicit SingularSystemError(const std::string& what) : std::runtime_error(what) {}
};

struct MixedSpaceError : std::runtime_error {
    explicit MixedSpaceError(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientRankError : std::runtime_error {
    explicit InsufficientRankError(const std::string& what) : std::runtime_error(what) {}
};

struct WindowNotFilledError : std::logic_error {
    explicit WindowNotFilledError(const std::string& what) : std::logic_error(what) {}
};

/// Config file rejected at the grammar level.
struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& message)
        : std::runtime_error("line " + std::to_string(line_) + ": " + message), line(line_) {}
};

/// Config file parsed but a field is missing or inconsistent.
struct ValidationError : std::runtime_error {
    std::string field;
    ValidationError(std::string field_, const std::string& message)
        : std::runtime_error(field_ + ": " + message), field(std::move(field_)) {}
};

}  // namespace rkfusion
