#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace voxref {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Record-level validation failure while reading a JSONL store.
class IngestError : public Error {
public:
    IngestError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Structural failure while decoding a binary store.
class ParseError : public Error {
public:
    ParseError(std::uint64_t offset, const std::string& what)
        : Error("byte offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace voxref
