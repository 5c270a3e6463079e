#pragma once

// Replay of captured Binder ioctls and syscall events into an audit log, and
// its two renderings (the human-readable block form and flat JSON records).
//
// Capture files hold one JSON object per line:
//   {"kind":"txn", "ts_ns", "pid", "uid", "code", "flags", "data_size"?, "hex": <parcel>}
//   {"kind":"ioctl", "ts_ns", "pid", "uid", "hex": <write buffer>,
//    "mem": [{"addr": n | "0x..", "hex": ...}, ...]}
// "mem" holds the user memory that transaction pointers refer to (parcel data
// and offsets); pointers are matched after MTE tag stripping.
//   {"kind":"syscall", "ts_ns", "pid", "tgid"?, "nr" | "syscall": name, "args"?, "ret"?}
// An ioctl yields one record per BC_TRANSACTION in its write buffer, or a
// syscall entry when it carries none. Malformed lines become error records.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "droidaudit/parcel.hpp"
#include "droidaudit/sigtable.hpp"
#include "droidaudit/syscall_catalog.hpp"

namespace droidaudit::audit {

struct SyscallEntry {
  syscalls::SyscallEvent event;
  std::string name;  // catalog name, or "syscall_<nr>"
  std::int64_t uid = -1;
};

using AuditEntry = std::variant<SyscallEntry, parcel::AuditRecord>;

struct Summary {
  std::size_t records = 0;  // Binder audit records
  std::size_t ok = 0;
  std::size_t unknown_method = 0;
  std::size_t errors = 0;   // decode or capture failures, trailing bytes
  std::size_t syscalls = 0;
};

struct AuditLog {
  std::vector<AuditEntry> entries;  // stable-sorted by timestamp
  Summary summary;
  sigtable::Metadata table_metadata;
};

struct CaptureOptions {
  parcel::DecodeOptions decode;
  syscalls::Arch arch = syscalls::Arch::Arm64;
};

AuditLog decode_capture(std::string_view capture, const sigtable::SignatureTable& table,
                        const CaptureOptions& options = {});

std::int64_t entry_timestamp(const AuditEntry& entry);

// "<value>" as it appears after "name=" in the text rendering.
std::string render_value(const parcel::DecodedValue& value);
// pid/uid line, iface/code line, method call line, then status lines on failure.
std::string render_text(const parcel::AuditRecord& rec);
std::string render_text(const SyscallEntry& entry);
std::string render_json(const parcel::AuditRecord& rec);
std::string render_json(const SyscallEntry& entry);

enum class Format { Text, Records };

// Whole log in the chosen format, without the summary.
std::string render_log(const AuditLog& log, Format format);
// "summary: 3 records, 1 ok, 1 unknown_method, 1 errors, 0 syscalls"
std::string summary_line(const Summary& summary);
// Stale-table hint when transactions missed the table; empty otherwise.
std::string table_warning(const AuditLog& log);

}  // namespace droidaudit::audit
