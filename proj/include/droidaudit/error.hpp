#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace droidaudit {

enum class ErrorCode {
  // wire-binder
  TruncatedInput,
  TruncatedCommand,
  BadPayloadSize,
  UnresolvableData,
  MalformedTransaction,
  // parcel
  TruncatedHeader,
  InvalidToken,
  TruncatedString,
  NegativeLength,
  TruncatedPrimitive,
  TruncatedObject,
  MalformedObject,
  UnsupportedType,
  // sigtable, capture and log files
  ParseError,
  DuplicateEntry,
  // syscall catalog
  UntracedSyscall,
  ArgumentOverflow,
  UnknownTypeCode,
  InvalidEvent,
  Truncated,
  // pipeline
  ConflictingTotal,
  DuplicateChunk,
  InvalidChunk,
  InvalidConfig,
  // compare
  NoAnchor,
  EmptyUnion,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Thrown by the parcel readers; carries the buffer offset at which decoding failed.
class DecodeError : public Error {
 public:
  DecodeError(ErrorCode code, std::size_t offset, const std::string& what)
      : Error(code, what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace droidaudit
