#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cryptaudit {

enum class ErrorKind {
    NonexistentRoot,
    MalformedMetadata,
    UnsupportedLanguage,
    FatalParseError,
    MalformedCatalog,
    AmbiguousPattern,
    DuplicateProjectId,
    MalformedIr,
    Usage,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Operational failure raised by the library. Per-file problems are reported
/// as warnings instead; an Error always means the requested operation could
/// not produce a result.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace cryptaudit
