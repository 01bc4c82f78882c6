#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace liveia {

enum class ErrorCode {
    Contract,         // precondition of a pure function violated
    Validation,       // scenario or input fails its invariants
    NotFound,
    Version,          // edit of a forked (immutable) scenario
    VersionMissing,   // document has no schema_version
    VersionMismatch,  // document has an unsupported schema_version
    DanglingRef,      // document references an unknown id
    Malformed,        // not parseable / wrong shape
    MalformedNumeral, // numeric field is not a finite number
    Io,
    Corrupt,          // stored bytes fail their digest
    Internal,
};

std::string_view to_string(ErrorCode code);

/// The single exception type thrown by the library; `code()` carries the kind.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

} // namespace liveia
