#pragma once

#include <stdexcept>
#include <string>

namespace d2ue {

/// Base of every error thrown by the library. `kind()` is a short stable
/// token used by the CLI for machine-parseable error lines.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Invalid configuration or operand shapes.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

/// Malformed file contents; carries the byte offset where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error("parse", what + " (at byte offset " + std::to_string(offset) + ")"),
          detail_(what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

    /// Same error with `prefix` (typically a file path) prepended.
    ParseError prefixed(const std::string& prefix) const { return {prefix + detail_, offset_}; }

private:
    std::string detail_;
    std::size_t offset_;
};

class IoError : public Error {
public:
    IoError(const std::string& what, std::string path)
        : Error("io", what + ": " + path), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error("training", what) {}
};

}  // namespace d2ue
