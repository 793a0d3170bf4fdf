#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace revive {

enum class ErrorKind {
    // sexpr
    UnbalancedParens,
    InvalidEscape,
    InvalidToken,
    TrailingGarbage,
    // tar
    TruncatedArchive,
    MalformedHeader,
    UnsupportedMemberType,
    MissingContent,
    DigestMismatch,
    // compression
    CorruptStream,
    UnknownFormat,
    NoMatchingCompressor,
    // trees and identifiers
    UnreadableEntry,
    UnsupportedNodeType,
    MalformedSwhid,
    // assembly and the description database
    ContentUnavailable,
    ContentDigestMismatch,
    ReconstructionMismatch,
    NotFound,
    MalformedDescription,
    // archive client
    RateLimited,
    TransportError,
    AuthRequired,
    CookingFailed,
    DeadlineExceeded,
    Rejected,
    OriginNotFound,
    TagNotFound,
    // resolver and audit
    AllPathsFailed,
    HashMismatch,
    UnsupportedCombination,
    CycleDetected,
    // generic
    PreconditionViolation,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

    /// Layer of a description chain where a disassembly failure happened
    /// (0 = outermost file).
    std::optional<std::size_t> layer() const noexcept { return layer_; }
    Error& at_layer(std::size_t layer)
    {
        layer_ = layer;
        return *this;
    }

    /// Tar member index for archive errors.
    std::optional<std::size_t> member() const noexcept { return member_; }
    Error& at_member(std::size_t index)
    {
        member_ = index;
        return *this;
    }

private:
    ErrorKind kind_;
    std::optional<std::size_t> layer_;
    std::optional<std::size_t> member_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, message);
}

} // namespace revive
