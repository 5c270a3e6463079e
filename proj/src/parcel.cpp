#include "droidaudit/parcel.hpp"

#include <bit>
#include <cstdio>
#include <string>

namespace droidaudit::parcel {

std::optional<std::string_view> binder_type_name(std::uint32_t tag) {
  switch (tag) {
    case BINDER_TYPE_BINDER: return "BINDER";
    case BINDER_TYPE_WEAK_BINDER: return "WEAK_BINDER";
    case BINDER_TYPE_HANDLE: return "HANDLE";
    case BINDER_TYPE_WEAK_HANDLE: return "WEAK_HANDLE";
    case BINDER_TYPE_FD: return "FD";
    case BINDER_TYPE_FDA: return "FDA";
    case BINDER_TYPE_PTR: return "PTR";
    default: return std::nullopt;
  }
}

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

// Decodes `units` UTF-16LE code units at `offset`. Unpaired surrogates become
// U+FFFD when lossy, otherwise the result is nullopt.
std::optional<std::string> utf16le_to_utf8(ByteView bytes, std::size_t offset, std::size_t units,
                                           bool lossy) {
  std::string out;
  out.reserve(units);
  for (std::size_t i = 0; i < units; ++i) {
    char32_t unit = load_le<std::uint16_t>(bytes, offset + 2 * i);
    if (unit >= 0xd800 && unit <= 0xdbff && i + 1 < units) {
      char32_t low = load_le<std::uint16_t>(bytes, offset + 2 * (i + 1));
      if (low >= 0xdc00 && low <= 0xdfff) {
        append_utf8(out, 0x10000 + ((unit - 0xd800) << 10) + (low - 0xdc00));
        ++i;
        continue;
      }
    }
    if (unit >= 0xd800 && unit <= 0xdfff) {
      if (!lossy) return std::nullopt;
      unit = 0xfffd;
    }
    append_utf8(out, unit);
  }
  return out;
}

[[noreturn]] void fail(ErrorCode code, std::size_t offset, const std::string& what) {
  throw DecodeError(code, offset, what);
}

void align4(ParcelCursor& cursor) {
  const auto aligned = pad4(cursor.position);
  cursor.position = aligned <= cursor.buffer.size() ? aligned : cursor.buffer.size();
}

}  // namespace

InterfaceHeader read_interface_header(ParcelCursor& cursor) {
  const auto start = cursor.position;
  if (cursor.remaining() < 16) {
    fail(ErrorCode::TruncatedHeader, start, "interface header needs 16 bytes");
  }
  const auto& buf = cursor.buffer;
  InterfaceHeader h;
  h.strict_mode_policy = load_le<std::uint32_t>(buf, start);
  h.work_source_uid = load_le<std::uint32_t>(buf, start + 4);
  h.header_magic = load_le<std::uint32_t>(buf, start + 8);
  h.token_length = load_le<std::uint32_t>(buf, start + 12);
  const std::size_t after_length = start + 16;
  const std::size_t avail = buf.size() - after_length;
  if (h.token_length > avail / 2) {
    fail(ErrorCode::InvalidToken, start + 12,
         "token length " + std::to_string(h.token_length) + " exceeds buffer");
  }
  const std::size_t region = pad4(2 * static_cast<std::size_t>(h.token_length) + 2);
  if (region > avail) {
    fail(ErrorCode::TruncatedHeader, start, "token terminator or padding missing");
  }
  if (load_le<std::uint16_t>(buf, after_length + 2 * h.token_length) != 0) {
    fail(ErrorCode::InvalidToken, after_length, "token is not NUL-terminated");
  }
  auto token = utf16le_to_utf8(buf, after_length, h.token_length, false);
  if (!token) fail(ErrorCode::InvalidToken, after_length, "token is not valid UTF-16");
  h.token = std::move(*token);
  cursor.position = after_length + region;
  return h;
}

std::optional<std::string> read_string16(ParcelCursor& cursor) {
  const auto start = cursor.position;
  if (cursor.remaining() < 4) fail(ErrorCode::TruncatedString, start, "string length missing");
  const auto length = load_le<std::int32_t>(cursor.buffer, start);
  if (length == -1) {
    cursor.position = start + 4;
    return std::nullopt;
  }
  if (length < -1) {
    fail(ErrorCode::NegativeLength, start, "string length " + std::to_string(length));
  }
  const std::size_t region = pad4(2 * static_cast<std::size_t>(length) + 2);
  if (cursor.remaining() - 4 < region) {
    fail(ErrorCode::TruncatedString, start,
         "string of " + std::to_string(length) + " units needs " + std::to_string(region) +
             " bytes");
  }
  auto text = utf16le_to_utf8(cursor.buffer, start + 4, static_cast<std::size_t>(length), true);
  cursor.position = start + 4 + region;
  return text;
}

DecodedValue read_primitive(ParcelCursor& cursor, ArgKind kind) {
  const auto start = cursor.position;
  const std::size_t width = (kind == ArgKind::Long || kind == ArgKind::Double) ? 8 : 4;
  if (kind != ArgKind::Int && kind != ArgKind::Boolean && kind != ArgKind::Long &&
      kind != ArgKind::Double) {
    fail(ErrorCode::UnsupportedType, start, std::string(to_string(kind)) + " is not a primitive");
  }
  if (cursor.remaining() < width) {
    fail(ErrorCode::TruncatedPrimitive, start,
         std::string(to_string(kind)) + " needs " + std::to_string(width) + " bytes");
  }
  DecodedValue value;
  switch (kind) {
    case ArgKind::Int:
      value = IntValue{load_le<std::int32_t>(cursor.buffer, start), 32};
      break;
    case ArgKind::Boolean:
      value = load_le<std::uint32_t>(cursor.buffer, start) != 0;
      break;
    case ArgKind::Long:
      value = IntValue{load_le<std::int64_t>(cursor.buffer, start), 64};
      break;
    default:
      value = std::bit_cast<double>(load_le<std::uint64_t>(cursor.buffer, start));
      break;
  }
  cursor.position = start + width;
  return value;
}

FlatBinderObject read_flat_binder_object(ParcelCursor& cursor, bool expect_stability) {
  const auto start = cursor.position;
  const std::size_t need = expect_stability ? 28 : 24;
  if (cursor.remaining() < need) {
    fail(ErrorCode::TruncatedObject, start, "flat binder object needs " + std::to_string(need) +
                                                " bytes, " + std::to_string(cursor.remaining()) +
                                                " remain");
  }
  FlatBinderObject obj;
  obj.type_tag = load_le<std::uint32_t>(cursor.buffer, start);
  const auto name = binder_type_name(obj.type_tag);
  if (!name) {
    char hex[16];
    std::snprintf(hex, sizeof hex, "0x%08x", obj.type_tag);
    fail(ErrorCode::MalformedObject, start, std::string("unrecognized binder type ") + hex);
  }
  if (obj.type_tag == BINDER_TYPE_FD || obj.type_tag == BINDER_TYPE_FDA ||
      obj.type_tag == BINDER_TYPE_PTR) {
    fail(ErrorCode::UnsupportedType, start, std::string(*name) + " objects are not decoded");
  }
  obj.flags = load_le<std::uint32_t>(cursor.buffer, start + 4);
  obj.handle_or_ptr = load_le<std::uint64_t>(cursor.buffer, start + 8);
  obj.cookie = load_le<std::uint64_t>(cursor.buffer, start + 16);
  if (expect_stability) obj.stability = load_le<std::uint32_t>(cursor.buffer, start + 24);
  cursor.position = start + need;
  return obj;
}

DecodedValue read_typed_object(ParcelCursor& cursor, bool expect_stability) {
  const auto start = cursor.position;
  if (cursor.remaining() < 4) fail(ErrorCode::TruncatedObject, start, "nullness marker missing");
  const auto marker = load_le<std::uint32_t>(cursor.buffer, start);
  if (marker == 0) {
    cursor.position = start + 4;
    return NullObject{};
  }
  if (marker != 1) {
    fail(ErrorCode::MalformedObject, start, "nullness marker " + std::to_string(marker));
  }
  ParcelCursor inner{cursor.buffer, start + 4};
  auto obj = read_flat_binder_object(inner, expect_stability);
  cursor.position = inner.position;
  return obj;
}

std::string_view status_name(const AuditRecord& rec) {
  switch (rec.status) {
    case DecodeStatus::Ok: return "Ok";
    case DecodeStatus::UnknownMethod: return "UnknownMethod";
    case DecodeStatus::TrailingBytes: return "TrailingBytes";
    case DecodeStatus::DecodeFailed:
    case DecodeStatus::CaptureFailed:
      return rec.error ? to_string(*rec.error) : "Error";
  }
  return "Error";
}

AuditRecord decode_transaction(const binder::TransactionRecord& txn,
                               const sigtable::SignatureTable& table, const ProcessIdentity& proc,
                               const DecodeOptions& options) {
  AuditRecord rec;
  rec.process = proc;
  rec.code = txn.code;
  rec.target_flags = txn.flags;
  rec.data_size = txn.data_size;
  rec.raw_buffer = txn.buffer;

  ParcelCursor cursor{rec.raw_buffer, 0};
  try {
    rec.header = read_interface_header(cursor);
    rec.interface_token = rec.header->token;
    rec.consumed = cursor.position;

    const auto* sig = table.lookup(rec.interface_token, txn.code);
    if (sig == nullptr) {
      rec.status = DecodeStatus::UnknownMethod;
      return rec;
    }
    rec.method_name = sig->method_name;

    for (const auto& param : sig->params) {
      DecodedValue value;
      switch (param.type.kind) {
        case ArgKind::Int:
        case ArgKind::Boolean:
        case ArgKind::Long:
        case ArgKind::Double:
          value = read_primitive(cursor, param.type.kind);
          break;
        case ArgKind::String16:
          value = read_string16(cursor);
          break;
        case ArgKind::StrongBinder:
          value = read_flat_binder_object(cursor, options.stability_footer);
          break;
        case ArgKind::TypedObject:
          value = read_typed_object(cursor, options.stability_footer);
          break;
        case ArgKind::Unsupported:
          rec.args.push_back({param.name, param.type.name, UnsupportedMarker{param.type.name}});
          fail(ErrorCode::UnsupportedType, cursor.position,
               "parameter '" + param.name + "' of type '" + param.type.name + "'");
      }
      align4(cursor);
      rec.args.push_back({param.name, param.type.name, std::move(value)});
      rec.consumed = cursor.position;
    }
    if (cursor.position != rec.raw_buffer.size()) {
      rec.status = DecodeStatus::TrailingBytes;
      rec.error_detail = std::to_string(cursor.remaining()) + " bytes after last parameter";
    }
  } catch (const DecodeError& e) {
    rec.status = DecodeStatus::DecodeFailed;
    rec.error = e.code();
    rec.error_detail = e.what();
    rec.consumed = e.offset();
  }
  return rec;
}

AuditRecord capture_failure(const ProcessIdentity& proc, ErrorCode error, std::string detail) {
  AuditRecord rec;
  rec.process = proc;
  rec.status = DecodeStatus::CaptureFailed;
  rec.error = error;
  rec.error_detail = std::move(detail);
  return rec;
}

}  // namespace droidaudit::parcel
