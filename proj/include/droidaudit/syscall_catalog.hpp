#pragma once

// Traced syscall sets per architecture, the compact event encoding, and
// enter/exit joining.
//
// Compact stream format (all integers little-endian):
//   resync record : 0x00, int64 absolute timestamp in granularity units
//   event record  : type byte = 1 + 3 * traced_index + phase (enter 0, exit 1, joined 2)
//                   varint  ts delta in granularity units since the previous record
//                   varint  pid (zigzag), varint tgid (zigzag)
//                   enter/joined: arguments packed per the syscall's schema
//                                 (4 bytes for 'i' slots, 8 bytes for 'p' slots)
//                   exit/joined : varint return value (zigzag)
// traced_index is the syscall's position in the architecture's traced list,
// which is catalog order. A resync precedes the first record of a stream and
// any record whose delta is negative or exceeds kMaxDeltaUnits.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "droidaudit/bytes.hpp"

namespace droidaudit::syscalls {

enum class Arch { Arm64, X86_64 };

std::string_view to_string(Arch arch) noexcept;
std::optional<Arch> parse_arch(std::string_view text) noexcept;

// Priority classes used by the buffer simulator's drop policy.
inline constexpr int kPriorityLow = 0;
inline constexpr int kPriorityMedium = 1;
inline constexpr int kPriorityHigh = 2;

struct SyscallSpec {
  std::string name;
  std::optional<int> arm64_nr;
  std::optional<int> x86_64_nr;
  bool traced_arm64 = false;
  bool traced_x86_64 = false;
  int priority_class = kPriorityLow;
  std::string arg_schema;  // one of 'i' / 'p' per argument
  std::string note;        // "dup-only", "alias:<canonical>", or empty

  std::optional<int> nr(Arch arch) const { return arch == Arch::Arm64 ? arm64_nr : x86_64_nr; }
  bool traced_on(Arch arch) const { return arch == Arch::Arm64 ? traced_arm64 : traced_x86_64; }
  bool is_alias() const { return note.starts_with("alias:"); }
};

class Catalog {
 public:
  // Parses the CSV catalog format of data/syscalls.csv. Throws ParseError.
  static Catalog parse(std::string_view csv);
  static const Catalog& builtin();

  const std::vector<SyscallSpec>& specs() const { return specs_; }
  const SyscallSpec* find(std::string_view name) const;
  // Canonical (non-alias) entry for a syscall number on an architecture.
  const SyscallSpec* find(Arch arch, int nr) const;
  std::vector<const SyscallSpec*> traced(Arch arch) const;
  // Position of nr within traced(arch), or nullopt when not traced.
  std::optional<std::size_t> traced_index(Arch arch, int nr) const;

 private:
  std::vector<SyscallSpec> specs_;
};

std::set<std::string> traced_set(Arch arch);

enum class Phase { Enter, Exit, Joined };

std::string_view to_string(Phase phase) noexcept;

struct SyscallEvent {
  std::int64_t ts_ns = 0;
  std::int32_t pid = 0;
  std::int32_t tgid = 0;
  std::int32_t nr = 0;
  std::array<std::uint64_t, 6> args{};
  std::optional<std::int64_t> ret;
  Phase phase = Phase::Joined;
  bool orphan = false;  // exit without a matching enter

  bool operator==(const SyscallEvent&) const = default;
};

// fcntl is traced for its dup-like commands only; everything else is relevant.
bool is_relevant(const SyscallEvent& ev, Arch arch);

inline constexpr std::int64_t kDefaultGranularityNs = 1000;
inline constexpr std::uint64_t kMaxDeltaUnits = (std::uint64_t{1} << 35) - 1;
inline constexpr std::uint8_t kResyncType = 0x00;

// Stateful encoder for one event stream.
class EventEncoder {
 public:
  // Without prev_ts_ns the first record is preceded by a resync.
  explicit EventEncoder(Arch arch, std::int64_t granularity_ns = kDefaultGranularityNs,
                        std::optional<std::int64_t> prev_ts_ns = std::nullopt);

  // Throws UntracedSyscall, ArgumentOverflow (value does not fit its slot),
  // or InvalidEvent (joined without a return value, exit carrying arguments).
  Bytes encode(const SyscallEvent& ev);

 private:
  Arch arch_;
  std::int64_t granularity_;
  std::optional<std::int64_t> prev_units_;
};

class EventDecoder {
 public:
  explicit EventDecoder(Arch arch, std::int64_t granularity_ns = kDefaultGranularityNs,
                        std::int64_t prev_ts_ns = 0);

  struct Result {
    SyscallEvent event;
    std::size_t consumed = 0;
  };

  // Decodes one event, consuming any resync records before it.
  // Throws Truncated or UnknownTypeCode.
  Result decode(ByteView bytes);
  std::vector<SyscallEvent> decode_all(ByteView bytes);

 private:
  Arch arch_;
  std::int64_t granularity_;
  std::int64_t prev_units_;
};

// Single-event forms; prev_ts_ns is the previous event's timestamp in the stream.
Bytes encode_event(const SyscallEvent& ev, std::int64_t prev_ts_ns, Arch arch,
                   std::int64_t granularity_ns = kDefaultGranularityNs);
SyscallEvent decode_event(ByteView bytes, std::int64_t prev_ts_ns, Arch arch,
                          std::int64_t granularity_ns = kDefaultGranularityNs);

// Joins exits to the most recent open enter with the same syscall on the same
// pid. Joined and pending events keep the enter's position and timestamp;
// orphan exits keep their own. Already-joined input passes through.
std::vector<SyscallEvent> join_enter_exit(std::span<const SyscallEvent> events);

}  // namespace droidaudit::syscalls
