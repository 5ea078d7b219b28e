#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clonegraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An error tied to a byte offset in some source text (lexing, brace balancing).
class OffsetError : public Error {
public:
    OffsetError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace clonegraph
