#include "liveia/error.hpp"

namespace liveia {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::Contract: return "CONTRACT";
    case ErrorCode::Validation: return "VALIDATION";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::Version: return "VERSION";
    case ErrorCode::VersionMissing: return "VERSION_MISSING";
    case ErrorCode::VersionMismatch: return "VERSION_MISMATCH";
    case ErrorCode::DanglingRef: return "DANGLING_REF";
    case ErrorCode::Malformed: return "MALFORMED";
    case ErrorCode::MalformedNumeral: return "MALFORMED_NUMERAL";
    case ErrorCode::Io: return "IO";
    case ErrorCode::Corrupt: return "CORRUPT";
    case ErrorCode::Internal: return "INTERNAL";
    }
    return "INTERNAL";
}

} // namespace liveia
