#include "droidaudit/error.hpp"

namespace droidaudit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::TruncatedInput: return "TruncatedInput";
    case ErrorCode::TruncatedCommand: return "TruncatedCommand";
    case ErrorCode::BadPayloadSize: return "BadPayloadSize";
    case ErrorCode::UnresolvableData: return "UnresolvableData";
    case ErrorCode::MalformedTransaction: return "MalformedTransaction";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::InvalidToken: return "InvalidToken";
    case ErrorCode::TruncatedString: return "TruncatedString";
    case ErrorCode::NegativeLength: return "NegativeLength";
    case ErrorCode::TruncatedPrimitive: return "TruncatedPrimitive";
    case ErrorCode::TruncatedObject: return "TruncatedObject";
    case ErrorCode::MalformedObject: return "MalformedObject";
    case ErrorCode::UnsupportedType: return "UnsupportedType";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateEntry: return "DuplicateEntry";
    case ErrorCode::UntracedSyscall: return "UntracedSyscall";
    case ErrorCode::ArgumentOverflow: return "ArgumentOverflow";
    case ErrorCode::UnknownTypeCode: return "UnknownTypeCode";
    case ErrorCode::InvalidEvent: return "InvalidEvent";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::ConflictingTotal: return "ConflictingTotal";
    case ErrorCode::DuplicateChunk: return "DuplicateChunk";
    case ErrorCode::InvalidChunk: return "InvalidChunk";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoAnchor: return "NoAnchor";
    case ErrorCode::EmptyUnion: return "EmptyUnion";
  }
  return "Unknown";
}

}  // namespace droidaudit
