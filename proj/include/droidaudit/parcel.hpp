#pragma once

// Signature-driven decoding of Binder call parcels: the interface header,
// then each argument read in table order with 4-byte alignment.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "droidaudit/arg_type.hpp"
#include "droidaudit/bytes.hpp"
#include "droidaudit/error.hpp"
#include "droidaudit/sigtable.hpp"
#include "droidaudit/wire_binder.hpp"

namespace droidaudit::parcel {

constexpr std::uint32_t pack_chars(char a, char b, char c, std::uint8_t d) {
  return (static_cast<std::uint32_t>(static_cast<std::uint8_t>(a)) << 24) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(b)) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(c)) << 8) | d;
}

inline constexpr std::uint32_t BINDER_TYPE_BINDER = pack_chars('s', 'b', '*', 0x85);
inline constexpr std::uint32_t BINDER_TYPE_WEAK_BINDER = pack_chars('w', 'b', '*', 0x85);
inline constexpr std::uint32_t BINDER_TYPE_HANDLE = pack_chars('s', 'h', '*', 0x85);
inline constexpr std::uint32_t BINDER_TYPE_WEAK_HANDLE = pack_chars('w', 'h', '*', 0x85);
inline constexpr std::uint32_t BINDER_TYPE_FD = pack_chars('f', 'd', '*', 0x85);
inline constexpr std::uint32_t BINDER_TYPE_FDA = pack_chars('f', 'd', 'a', 0x85);
inline constexpr std::uint32_t BINDER_TYPE_PTR = pack_chars('p', 't', '*', 0x85);

// "HANDLE", "BINDER", ... for any BINDER_TYPE_* tag; nullopt otherwise.
std::optional<std::string_view> binder_type_name(std::uint32_t tag);

constexpr std::size_t pad4(std::size_t n) { return (n + 3) & ~std::size_t{3}; }

struct ParcelCursor {
  ByteView buffer;
  std::size_t position = 0;

  std::size_t remaining() const { return buffer.size() - position; }
};

struct InterfaceHeader {
  std::uint32_t strict_mode_policy = 0;
  std::uint32_t work_source_uid = 0xffffffff;
  std::uint32_t header_magic = 0;
  std::uint32_t token_length = 0;  // UTF-16 code units
  std::string token;               // UTF-8

  bool operator==(const InterfaceHeader&) const = default;
};

struct IntValue {
  std::int64_t value = 0;
  int bits = 32;
  bool operator==(const IntValue&) const = default;
};

struct FlatBinderObject {
  std::uint32_t type_tag = 0;
  std::uint32_t flags = 0;
  std::uint64_t handle_or_ptr = 0;
  std::uint64_t cookie = 0;
  std::optional<std::uint32_t> stability;
  bool operator==(const FlatBinderObject&) const = default;
};

struct NullObject {
  bool operator==(const NullObject&) const = default;
};

struct UnsupportedMarker {
  std::string type_name;
  bool operator==(const UnsupportedMarker&) const = default;
};

// std::optional<std::string> is the string-or-null case.
using DecodedValue = std::variant<IntValue, bool, double, std::optional<std::string>,
                                  FlatBinderObject, NullObject, UnsupportedMarker>;

// Readers advance the cursor only on success; on failure they throw DecodeError
// with the offset of the value being read and leave the cursor unchanged.
InterfaceHeader read_interface_header(ParcelCursor& cursor);
std::optional<std::string> read_string16(ParcelCursor& cursor);
DecodedValue read_primitive(ParcelCursor& cursor, ArgKind kind);
FlatBinderObject read_flat_binder_object(ParcelCursor& cursor, bool expect_stability);
DecodedValue read_typed_object(ParcelCursor& cursor, bool expect_stability = true);

struct DecodeOptions {
  bool stability_footer = true;
};

struct ProcessIdentity {
  std::int64_t ts_ns = 0;
  std::int64_t pid = 0;
  std::int64_t uid = 0;
};

enum class DecodeStatus {
  Ok,
  UnknownMethod,
  TrailingBytes,  // all parameters decoded but the parcel has unread bytes
  DecodeFailed,   // see AuditRecord::error
  CaptureFailed,  // transaction could not be extracted from the capture
};

struct DecodedArg {
  std::string name;
  std::string type_name;
  DecodedValue value;
};

struct AuditRecord {
  ProcessIdentity process;
  std::uint32_t code = 0;
  std::uint32_t target_flags = 0;
  std::uint64_t data_size = 0;
  std::optional<InterfaceHeader> header;
  std::string interface_token;
  std::optional<std::string> method_name;
  std::vector<DecodedArg> args;
  DecodeStatus status = DecodeStatus::Ok;
  std::optional<ErrorCode> error;
  std::string error_detail;
  std::size_t consumed = 0;  // cursor position when decoding stopped
  Bytes raw_buffer;
};

// Status as displayed: "Ok", "UnknownMethod", "TrailingBytes", or the error code name.
std::string_view status_name(const AuditRecord& rec);

// Never throws for malformed input: every failure is reported in the record.
AuditRecord decode_transaction(const binder::TransactionRecord& txn,
                               const sigtable::SignatureTable& table, const ProcessIdentity& proc,
                               const DecodeOptions& options = {});

// Record for an event whose transaction never reached the parcel decoder.
AuditRecord capture_failure(const ProcessIdentity& proc, ErrorCode error, std::string detail);

}  // namespace droidaudit::parcel
