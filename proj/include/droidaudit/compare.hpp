#pragma once

// Two-tracer completeness comparison: normalize native logs, align clocks on
// an execve/mmap anchor, match events first-unmatched-wins, and compute the
// unique event rate (UER) of each side.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "droidaudit/syscall_catalog.hpp"

namespace droidaudit::compare {

using syscalls::Arch;
using syscalls::SyscallEvent;

enum class Source { WdSys, Ftrace, Generic };
enum class ClockBase { Absolute, BootRelative };

std::string_view to_string(Source source) noexcept;

struct TraceLog {
  Source source = Source::Generic;
  ClockBase clock_base = ClockBase::Absolute;
  bool has_thread_ids = true;  // false: only process ids were logged (in tgid)
  std::vector<SyscallEvent> events;  // sorted by timestamp
  std::size_t dropped_orphans = 0;
  std::size_t dropped_excluded = 0;
  std::size_t dropped_untraced = 0;
};

struct NormalizeOptions {
  Arch arch = Arch::Arm64;
  std::set<std::int32_t> excluded_pids;  // tracer processes; matched against pid and tgid
  bool traced_only = true;               // drop syscalls outside the traced set
};

// Joins enter/exit pairs, drops orphan exits, excluded pids and untraced
// syscalls, zeroes arguments beyond the syscall's arity and truncates 4-byte
// slots to 32 bits, then stable-sorts by timestamp.
TraceLog normalize_log(std::vector<SyscallEvent> raw, Source source, ClockBase clock_base,
                       const NormalizeOptions& options, bool has_thread_ids = true);

// Native adapters. All throw ParseError naming the 1-based record (line) index.
//
// ftrace raw_syscalls text, optionally with the tgid column:
//   <comm>-<pid> [(<tgid>)] [<cpu>] <flags> <sec>.<frac>: sys_enter: NR <nr> (<hex>, ...)
//   <comm>-<pid> [(<tgid>)] [<cpu>] <flags> <sec>.<frac>: sys_exit: NR <nr> = <ret>
TraceLog parse_ftrace(std::string_view text, const NormalizeOptions& options);
// WDSys records, one JSON object per line:
//   {"ts": <abs ns>, "pid": n, "tgid": n, "syscall": "<name>" | nr, "args": [...], "ret": n}
// Arguments may be numbers or strings in decimal or 0x-hex.
TraceLog parse_wdsys(std::string_view text, const NormalizeOptions& options);
// Normalized format, one JSON object per line:
//   {"ts_ns": n, "pid": n, "tgid": n, "nr": n, "args": [6 x u64], "ret": n | null, "phase": "..."}
TraceLog parse_normalized(std::string_view text, const NormalizeOptions& options);

// Chooses an adapter from the content: JSON with "ts_ns" is normalized, other
// JSON is WDSys, anything else is ftrace text.
TraceLog parse_log(std::string_view text, const NormalizeOptions& options);
TraceLog load_log(const std::filesystem::path& path, const NormalizeOptions& options);

std::string serialize_normalized(const TraceLog& log);

struct MatchConfig {
  Arch arch = Arch::Arm64;
  // syscall nr -> bitmask of argument slots that take part in equality.
  // Syscalls without an entry compare every argument.
  std::map<std::int32_t, std::uint8_t> compared_args;
  std::set<std::int32_t> ignored_syscalls;  // excluded from matching and from counts
  std::optional<std::int64_t> max_skew_ns;  // off by default
};

// mmap compares length/prot/flags/fd/offset but not the address hint;
// clone and clone3 are ignored.
MatchConfig default_match_config(Arch arch);

// Offset that maps log_b timestamps onto log_a's clock (ts_a = ts_b + offset),
// taken from the first mmap after an execve in log_a that has an identical
// counterpart (same pid and compared arguments) after an execve in log_b.
// Throws NoAnchor.
std::int64_t compute_offset(const TraceLog& log_a, const TraceLog& log_b,
                            const MatchConfig& config);

enum class MatchKey { Pid, Tgid };

struct MatchPair {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  MatchKey key = MatchKey::Pid;
};

struct MatchResult {
  std::uint64_t matched = 0;
  std::uint64_t unique_a = 0;
  std::uint64_t unique_b = 0;
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unique_a_indices;
  std::vector<std::size_t> unique_b_indices;
  std::int64_t window_start = 0;  // on log_a's clock, inclusive
  std::int64_t window_end = 0;

  std::uint64_t total_a() const { return matched + unique_a; }
  std::uint64_t total_b() const { return matched + unique_b; }
  std::uint64_t union_size() const { return matched + unique_a + unique_b; }
};

// Restricts both logs to the window where both are active, skips ignored
// syscalls, then for each event of log_b in order takes the first unmatched
// event of log_a with the same pid (tgid when either log lacks thread ids),
// syscall and compared arguments.
MatchResult match_events(const TraceLog& log_a, const TraceLog& log_b, std::int64_t offset,
                         const MatchConfig& config);

struct Uer {
  double a = 0;
  double b = 0;
};

// Unique events of each side over the union of both. Throws EmptyUnion.
Uer uer(const MatchResult& result);

struct CompareReport {
  std::string app_id;
  std::int64_t offset = 0;
  Source source_a = Source::Generic;
  Source source_b = Source::Generic;
  MatchResult result;
  Uer rates;
};

CompareReport compare_logs(const TraceLog& log_a, const TraceLog& log_b,
                           const MatchConfig& config, std::string app_id = {},
                           std::optional<std::int64_t> offset = std::nullopt);

// {app_id, matched, unique_a, unique_b, uer_a_pct, uer_b_pct}
std::string report_json(const CompareReport& report);
// "UER A 50.00% / B 10.00%"
std::string report_line(const CompareReport& report);

// Aggregate CSV in the layout "#,app,FT,WD" (UER percentages). FT is the
// ftrace-sourced side, WD the other; when neither is ftrace, FT is log_b.
inline constexpr std::string_view kAggregateCsvHeader = "#,app,FT,WD";
std::string aggregate_csv_row(std::size_t number, const CompareReport& report);

}  // namespace droidaudit::compare
