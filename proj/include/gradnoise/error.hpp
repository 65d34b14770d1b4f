#pragma once

#include <stdexcept>
#include <string>

namespace gradnoise {

enum class ErrorKind {
    parameter,     // invalid argument value
    size,          // sample size outside a test's supported range
    degenerate,    // zero-variance sample, zero log argument, ...
    shape,         // mismatched dimensions
    format,        // malformed input file
    io,            // unreadable / unwritable path
    config,        // bad or unknown configuration key
    empty_battery  // every projected direction was degenerate
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::parameter: return "parameter";
        case ErrorKind::size: return "size";
        case ErrorKind::degenerate: return "degenerate";
        case ErrorKind::shape: return "shape";
        case ErrorKind::format: return "format";
        case ErrorKind::io: return "io";
        case ErrorKind::config: return "config";
        case ErrorKind::empty_battery: return "empty-battery";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

}  // namespace gradnoise
