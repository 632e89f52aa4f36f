#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace profet {

// Base class for every error raised by the library. Subclasses distinguish
// the failure domain so callers (and the CLI exit-code mapping) can react
// without string matching.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input bytes (trace rows, manifests, bundles). Carries the
// 1-based line number when the source is line oriented, 0 otherwise.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a domain invariant (negative latency,
// mismatched vector length, anchor == target, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failures: missing file, unreadable path.
class IoError : public Error {
public:
    using Error::Error;
};

// Bundle-specific rejections. The kind separates "wrong format version"
// from "content does not match its checksum" from structural damage.
class BundleError : public Error {
public:
    enum class Kind { Version, Checksum, Structure };

    BundleError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace profet
