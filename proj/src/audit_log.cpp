#include "droidaudit/audit_log.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>

#include <json.hpp>

#include "droidaudit/error.hpp"
#include "droidaudit/wire_binder.hpp"

namespace droidaudit::audit {

using nlohmann::json;
using nlohmann::ordered_json;
using parcel::AuditRecord;
using parcel::DecodeStatus;

namespace {

std::string hex_u64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%" PRIx64, v);
  return buf;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

std::string syscall_name(const syscalls::Catalog& catalog, syscalls::Arch arch, int nr) {
  const auto* spec = catalog.find(arch, nr);
  return spec ? spec->name : "syscall_" + std::to_string(nr);
}

// Integer fields accept JSON numbers or decimal/0x strings.
std::uint64_t get_u64(const json& obj, const char* field, std::optional<std::uint64_t> fallback) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::ParseError, std::string("missing field '") + field + "'");
  }
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) return static_cast<std::uint64_t>(it->get<std::int64_t>());
  if (it->is_string()) {
    const auto s = it->get<std::string>();
    const bool hex = s.starts_with("0x") || s.starts_with("0X");
    std::uint64_t v = 0;
    const char* first = s.data() + (hex ? 2 : 0);
    const char* last = s.data() + s.size();
    std::from_chars_result r{};
    if (hex) {
      r = std::from_chars(first, last, v, 16);
    } else {
      std::int64_t signed_v = 0;
      r = std::from_chars(first, last, signed_v, 10);
      v = static_cast<std::uint64_t>(signed_v);
    }
    if (r.ec == std::errc{} && r.ptr == last && first != last) return v;
  }
  throw Error(ErrorCode::ParseError, std::string("bad value for '") + field + "'");
}

Bytes get_hex(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorCode::ParseError, std::string("missing hex field '") + field + "'");
  }
  auto bytes = from_hex(it->get<std::string>());
  if (!bytes) throw Error(ErrorCode::ParseError, std::string("invalid hex in '") + field + "'");
  return *bytes;
}

struct LineContext {
  const sigtable::SignatureTable& table;
  const CaptureOptions& options;
  std::vector<AuditEntry>& out;
};

void replay_txn(const json& rec, const parcel::ProcessIdentity& proc, LineContext& ctx) {
  binder::TransactionRecord txn;
  txn.code = static_cast<std::uint32_t>(get_u64(rec, "code", std::nullopt));
  txn.flags = static_cast<std::uint32_t>(get_u64(rec, "flags", 0));
  txn.buffer = get_hex(rec, "hex");
  txn.data_size = get_u64(rec, "data_size", txn.buffer.size());
  if (txn.buffer.size() > txn.data_size) {
    throw Error(ErrorCode::MalformedTransaction,
                "buffer holds " + std::to_string(txn.buffer.size()) + " bytes but data_size is " +
                    std::to_string(txn.data_size));
  }
  // A shorter buffer is a truncated capture; decoding reports where it ran out.
  ctx.out.emplace_back(parcel::decode_transaction(txn, ctx.table, proc, ctx.options.decode));
}

void replay_ioctl(const json& rec, const parcel::ProcessIdentity& proc, LineContext& ctx) {
  const auto write_buffer = get_hex(rec, "hex");
  binder::MemoryMap memory;
  if (auto mem = rec.find("mem"); mem != rec.end()) {
    if (!mem->is_array()) throw Error(ErrorCode::ParseError, "'mem' is not an array");
    for (const auto& region : *mem) {
      memory.add(get_u64(region, "addr", std::nullopt), get_hex(region, "hex"));
    }
  }
  const auto resolver = memory.resolver();

  std::size_t emitted = 0;
  const auto stream = binder::iterate_commands(write_buffer);
  for (const auto& cmd : stream.commands) {
    if (cmd.code != binder::BC_TRANSACTION) continue;
    ++emitted;
    try {
      ctx.out.emplace_back(parcel::decode_transaction(binder::extract_transaction(cmd, resolver),
                                                      ctx.table, proc, ctx.options.decode));
    } catch (const Error& e) {
      ctx.out.emplace_back(parcel::capture_failure(proc, e.code(), e.what()));
    }
  }
  if (stream.truncated_at) {
    ++emitted;
    ctx.out.emplace_back(parcel::capture_failure(
        proc, ErrorCode::TruncatedCommand,
        "command at offset " + std::to_string(*stream.truncated_at) + " runs past the buffer"));
  }
  if (emitted == 0) {
    SyscallEntry entry;
    entry.event.ts_ns = proc.ts_ns;
    entry.event.pid = static_cast<std::int32_t>(proc.pid);
    entry.event.tgid = static_cast<std::int32_t>(get_u64(rec, "tgid", proc.pid));
    const auto& catalog = syscalls::Catalog::builtin();
    const auto* ioctl = catalog.find("ioctl");
    entry.event.nr = ioctl && ioctl->nr(ctx.options.arch) ? *ioctl->nr(ctx.options.arch) : -1;
    entry.event.args[0] = get_u64(rec, "fd", 0);
    entry.event.args[1] = get_u64(rec, "cmd", binder::BINDER_WRITE_READ);
    entry.event.args[2] = get_u64(rec, "arg", 0);
    if (rec.contains("ret")) entry.event.ret = static_cast<std::int64_t>(get_u64(rec, "ret", 0));
    entry.name = "ioctl";
    entry.uid = proc.uid;
    ctx.out.emplace_back(std::move(entry));
  }
}

void replay_syscall(const json& rec, const parcel::ProcessIdentity& proc, LineContext& ctx) {
  const auto& catalog = syscalls::Catalog::builtin();
  SyscallEntry entry;
  entry.event.ts_ns = proc.ts_ns;
  entry.event.pid = static_cast<std::int32_t>(proc.pid);
  entry.event.tgid = static_cast<std::int32_t>(get_u64(rec, "tgid", proc.pid));
  if (auto name = rec.find("syscall"); name != rec.end() && name->is_string()) {
    const auto* spec = catalog.find(name->get<std::string>());
    if (!spec || !spec->nr(ctx.options.arch)) {
      throw Error(ErrorCode::ParseError, "unknown syscall '" + name->get<std::string>() + "'");
    }
    entry.event.nr = *spec->nr(ctx.options.arch);
  } else {
    entry.event.nr = static_cast<std::int32_t>(get_u64(rec, "nr", std::nullopt));
  }
  if (auto args = rec.find("args"); args != rec.end()) {
    if (!args->is_array() || args->size() > 6) {
      throw Error(ErrorCode::ParseError, "'args' must hold at most six values");
    }
    json wrapper = json::object();
    for (std::size_t i = 0; i < args->size(); ++i) {
      wrapper["v"] = (*args)[i];
      entry.event.args[i] = get_u64(wrapper, "v", std::nullopt);
    }
  }
  if (rec.contains("ret") && !rec["ret"].is_null()) {
    entry.event.ret = static_cast<std::int64_t>(get_u64(rec, "ret", 0));
  }
  entry.name = syscall_name(catalog, ctx.options.arch, entry.event.nr);
  entry.uid = proc.uid;
  ctx.out.emplace_back(std::move(entry));
}

void replay_line(std::string_view line, std::size_t line_no, LineContext& ctx) {
  parcel::ProcessIdentity proc;
  try {
    const auto rec = json::parse(line);
    if (!rec.is_object()) throw Error(ErrorCode::ParseError, "record is not an object");
    proc.ts_ns = static_cast<std::int64_t>(get_u64(rec, "ts_ns", 0));
    proc.pid = static_cast<std::int64_t>(get_u64(rec, "pid", 0));
    proc.uid = static_cast<std::int64_t>(get_u64(rec, "uid", 0));
    const auto kind = rec.value("kind", std::string("txn"));
    if (kind == "txn") {
      replay_txn(rec, proc, ctx);
    } else if (kind == "ioctl") {
      replay_ioctl(rec, proc, ctx);
    } else if (kind == "syscall") {
      replay_syscall(rec, proc, ctx);
    } else {
      throw Error(ErrorCode::ParseError, "unknown kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    ctx.out.emplace_back(parcel::capture_failure(
        proc, ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what()));
  } catch (const Error& e) {
    ctx.out.emplace_back(parcel::capture_failure(
        proc, e.code(), "line " + std::to_string(line_no) + ": " + e.what()));
  }
}

}  // namespace

AuditLog decode_capture(std::string_view capture, const sigtable::SignatureTable& table,
                        const CaptureOptions& options) {
  AuditLog log;
  log.table_metadata = table.metadata;
  LineContext ctx{table, options, log.entries};
  std::size_t line_no = 0;
  while (!capture.empty()) {
    const auto nl = capture.find('\n');
    auto line = capture.substr(0, nl);
    capture = nl == std::string_view::npos ? std::string_view{} : capture.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    replay_line(line, line_no, ctx);
  }
  std::stable_sort(log.entries.begin(), log.entries.end(),
                   [](const AuditEntry& a, const AuditEntry& b) {
                     return entry_timestamp(a) < entry_timestamp(b);
                   });
  for (const auto& entry : log.entries) {
    if (std::holds_alternative<SyscallEntry>(entry)) {
      ++log.summary.syscalls;
      continue;
    }
    ++log.summary.records;
    switch (std::get<AuditRecord>(entry).status) {
      case DecodeStatus::Ok: ++log.summary.ok; break;
      case DecodeStatus::UnknownMethod: ++log.summary.unknown_method; break;
      default: ++log.summary.errors; break;
    }
  }
  return log;
}

std::int64_t entry_timestamp(const AuditEntry& entry) {
  return std::visit(
      [](const auto& e) -> std::int64_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(e)>, SyscallEntry>) {
          return e.event.ts_ns;
        } else {
          return e.process.ts_ns;
        }
      },
      entry);
}

std::string render_value(const parcel::DecodedValue& value) {
  struct Visitor {
    std::string operator()(const parcel::IntValue& v) const {
      // Longs print as hex, ints in decimal.
      return v.bits == 64 ? hex_u64(static_cast<std::uint64_t>(v.value)) : std::to_string(v.value);
    }
    std::string operator()(bool v) const { return v ? "1" : "0"; }
    std::string operator()(double v) const {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    }
    std::string operator()(const std::optional<std::string>& v) const {
      return v ? quote(*v) : "null";
    }
    std::string operator()(const parcel::FlatBinderObject& v) const {
      const auto name = parcel::binder_type_name(v.type_tag);
      std::string out = "<" + (name ? std::string(*name) : hex_u64(v.type_tag)) +
                        ", flags=" + hex_u64(v.flags) + ", handle=" + hex_u64(v.handle_or_ptr);
      if (v.stability) out += ", stability=" + std::to_string(*v.stability);
      return out + ">";
    }
    std::string operator()(const parcel::NullObject&) const { return "null"; }
    std::string operator()(const parcel::UnsupportedMarker& v) const {
      return "<unsupported " + v.type_name + ">";
    }
  };
  return std::visit(Visitor{}, value);
}

std::string render_text(const AuditRecord& rec) {
  std::string out = "pid=" + std::to_string(rec.process.pid) +
                    "  uid=" + std::to_string(rec.process.uid) +
                    "  flags=" + std::to_string(rec.target_flags) +
                    "  data_size=" + std::to_string(rec.data_size) + "\n";
  out += "iface=" + (rec.interface_token.empty() ? std::string("?") : rec.interface_token) +
         "  code=" + std::to_string(rec.code) + "\n";
  if (rec.method_name) {
    out += *rec.method_name + "(";
    for (std::size_t i = 0; i < rec.args.size(); ++i) {
      const auto& arg = rec.args[i];
      if (i) out += ", ";
      out += arg.type_name + " " + arg.name + "=" + render_value(arg.value);
    }
    out += ")\n";
  }
  if (rec.status != DecodeStatus::Ok) {
    out += "status=" + std::string(parcel::status_name(rec)) +
           "  consumed=" + std::to_string(rec.consumed);
    if (!rec.error_detail.empty()) out += "  detail=" + rec.error_detail;
    out += "\n";
    if (!rec.raw_buffer.empty()) out += "raw=" + to_hex(rec.raw_buffer) + "\n";
  }
  return out;
}

std::string render_text(const SyscallEntry& entry) {
  const auto& ev = entry.event;
  std::string out = "ts=" + std::to_string(ev.ts_ns) + "  pid=" + std::to_string(ev.pid) +
                    "  tgid=" + std::to_string(ev.tgid) + "  " + entry.name + "(";
  std::size_t arity = ev.args.size();
  if (const auto* spec = syscalls::Catalog::builtin().find(entry.name)) arity = spec->arg_schema.size();
  for (std::size_t i = 0; i < arity; ++i) {
    if (i) out += ", ";
    out += hex_u64(ev.args[i]);
  }
  out += ")";
  if (ev.ret) out += " = " + std::to_string(*ev.ret);
  return out + "\n";
}

namespace {

ordered_json value_json(const parcel::DecodedValue& value) {
  struct Visitor {
    ordered_json operator()(const parcel::IntValue& v) const { return v.value; }
    ordered_json operator()(bool v) const { return v; }
    ordered_json operator()(double v) const { return v; }
    ordered_json operator()(const std::optional<std::string>& v) const {
      return v ? ordered_json(*v) : ordered_json();
    }
    ordered_json operator()(const parcel::FlatBinderObject& v) const {
      ordered_json out;
      const auto name = parcel::binder_type_name(v.type_tag);
      out["type"] = name ? std::string(*name) : hex_u64(v.type_tag);
      out["flags"] = v.flags;
      out["handle"] = v.handle_or_ptr;
      out["cookie"] = v.cookie;
      out["stability"] = v.stability ? ordered_json(*v.stability) : ordered_json();
      return out;
    }
    ordered_json operator()(const parcel::NullObject&) const { return nullptr; }
    ordered_json operator()(const parcel::UnsupportedMarker& v) const {
      return {{"unsupported", v.type_name}};
    }
  };
  return std::visit(Visitor{}, value);
}

}  // namespace

std::string render_json(const AuditRecord& rec) {
  ordered_json out;
  out["ts"] = rec.process.ts_ns;
  out["pid"] = rec.process.pid;
  out["uid"] = rec.process.uid;
  out["code"] = rec.code;
  out["target_flags"] = rec.target_flags;
  out["data_size"] = rec.data_size;
  out["interface"] = rec.interface_token;
  out["method_code"] = rec.code;
  out["method_name"] = rec.method_name ? ordered_json(*rec.method_name) : ordered_json();
  auto params = ordered_json::array();
  for (const auto& arg : rec.args) {
    params.push_back({{"name", arg.name}, {"type", arg.type_name}, {"value", value_json(arg.value)}});
  }
  out["params"] = std::move(params);
  out["raw_buffer_hex"] = to_hex(rec.raw_buffer);
  out["status"] = parcel::status_name(rec);
  if (!rec.error_detail.empty()) out["detail"] = rec.error_detail;
  return out.dump();
}

std::string render_json(const SyscallEntry& entry) {
  ordered_json out;
  out["ts"] = entry.event.ts_ns;
  out["pid"] = entry.event.pid;
  out["tgid"] = entry.event.tgid;
  out["uid"] = entry.uid;
  out["syscall"] = entry.name;
  out["nr"] = entry.event.nr;
  out["args"] = entry.event.args;
  out["ret"] = entry.event.ret ? ordered_json(*entry.event.ret) : ordered_json();
  return out.dump();
}

std::string render_log(const AuditLog& log, Format format) {
  std::string out;
  for (const auto& entry : log.entries) {
    std::visit(
        [&](const auto& e) {
          if (format == Format::Records) {
            out += render_json(e) + "\n";
            return;
          }
          if (!out.empty()) out += "\n";  // blank line between blocks
          out += render_text(e);
        },
        entry);
  }
  return out;
}

std::string summary_line(const Summary& s) {
  return "summary: " + std::to_string(s.records) + " records, " + std::to_string(s.ok) + " ok, " +
         std::to_string(s.unknown_method) + " unknown_method, " + std::to_string(s.errors) +
         " errors, " + std::to_string(s.syscalls) + " syscalls";
}

std::string table_warning(const AuditLog& log) {
  if (log.summary.unknown_method == 0) return {};
  const auto& m = log.table_metadata;
  return "warning: " + std::to_string(log.summary.unknown_method) +
         " transaction(s) not in the signature table (device=" +
         (m.device.empty() ? "?" : m.device) + ", fingerprint=" +
         (m.fingerprint.empty() ? "?" : m.fingerprint) + ", date=" +
         (m.date.empty() ? "?" : m.date) + "); the table may be stale for this device";
}

}  // namespace droidaudit::audit
