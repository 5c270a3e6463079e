#include <doctest.h>

#include <algorithm>
#include <random>

#include "droidaudit/error.hpp"
#include "droidaudit/syscall_catalog.hpp"

using namespace droidaudit;
using namespace droidaudit::syscalls;

namespace {

// Orange rows of the traced-syscall comparison table: traced by the desktop
// tracer only.
const std::set<std::string> kX86Only{"chmod", "clone3", "creat",  "dup2",   "exit_group",
                                     "fork",  "link",   "mkdir",  "mknod",  "open",
                                     "pipe",  "pread",  "pwrite", "rename", "renameat",
                                     "rmdir", "symlink", "unlink", "vfork"};

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::ParseError;
}

SyscallEvent joined(std::int64_t ts, int pid, const char* name, std::array<std::uint64_t, 6> args,
                    std::int64_t ret, Arch arch = Arch::Arm64) {
  SyscallEvent ev;
  ev.ts_ns = ts;
  ev.pid = pid;
  ev.tgid = pid;
  ev.nr = *Catalog::builtin().find(name)->nr(arch);
  ev.args = args;
  ev.ret = ret;
  ev.phase = Phase::Joined;
  return ev;
}

SyscallEvent phase_event(Phase phase, std::int64_t ts, int pid, int nr, std::optional<std::int64_t> ret = {}) {
  SyscallEvent ev;
  ev.ts_ns = ts;
  ev.pid = pid;
  ev.tgid = pid;
  ev.nr = nr;
  ev.phase = phase;
  ev.ret = ret;
  return ev;
}

// A random event whose arguments fit the syscall's packing schema.
SyscallEvent random_event(std::mt19937_64& rng, Arch arch, std::int64_t ts) {
  const auto traced = Catalog::builtin().traced(arch);
  const auto* spec = traced[rng() % traced.size()];
  SyscallEvent ev;
  ev.ts_ns = ts;
  ev.pid = static_cast<std::int32_t>(rng() % 100000) - 50;
  ev.tgid = static_cast<std::int32_t>(rng());
  ev.nr = *spec->nr(arch);
  ev.phase = static_cast<Phase>(rng() % 3);
  if (ev.phase != Phase::Exit) {
    for (std::size_t i = 0; i < spec->arg_schema.size(); ++i) {
      ev.args[i] = spec->arg_schema[i] == 'i' ? rng() & 0xffffffff : rng();
    }
  }
  if (ev.phase != Phase::Enter) ev.ret = static_cast<std::int64_t>(rng()) >> (rng() % 64);
  return ev;
}

}  // namespace

TEST_SUITE("syscall_catalog") {

TEST_CASE("traced set sizes") {
  const auto arm = traced_set(Arch::Arm64);
  const auto x86 = traced_set(Arch::X86_64);
  CHECK(arm.size() == 64);
  CHECK(x86.size() == 81);

  std::set<std::string> x86_only, arm_only;
  std::set_difference(x86.begin(), x86.end(), arm.begin(), arm.end(),
                      std::inserter(x86_only, x86_only.end()));
  std::set_difference(arm.begin(), arm.end(), x86.begin(), x86.end(),
                      std::inserter(arm_only, arm_only.end()));
  CHECK(x86_only == kX86Only);
  CHECK(arm_only == std::set<std::string>{"preadv2", "pwritev2"});
  for (const char* name : {"open", "creat", "fork", "dup2", "pipe"}) CHECK_FALSE(arm.contains(name));
}

TEST_CASE("catalog invariants") {
  const auto& catalog = Catalog::builtin();
  for (const auto& spec : catalog.specs()) {
    CAPTURE(spec.name);
    if (spec.traced_arm64) CHECK(spec.arm64_nr.has_value());
    if (spec.traced_x86_64) CHECK(spec.x86_64_nr.has_value());
    CHECK(spec.arg_schema.size() <= 6);
    CHECK(spec.arg_schema.find_first_not_of("ip") == std::string::npos);
    CHECK(spec.priority_class >= kPriorityLow);
    CHECK(spec.priority_class <= kPriorityHigh);
  }
  // Traced set plus exits fits the one-byte type code.
  CHECK(1 + 3 * catalog.traced(Arch::X86_64).size() <= 256);

  CHECK(catalog.find("execve")->priority_class == kPriorityHigh);
  CHECK(catalog.find(Arch::Arm64, 63)->name == "read");
  CHECK(catalog.find(Arch::X86_64, 17)->name == "pread64");
  CHECK(catalog.find("pread")->is_alias());
  CHECK(catalog.find(Arch::Arm64, 100000) == nullptr);
  CHECK(catalog.traced_index(Arch::Arm64, 1000) == std::nullopt);
}

TEST_CASE("catalog parsing errors") {
  CHECK(error_of([] { Catalog::parse("read,63,0,1,1,0,ipp\n"); }) == ErrorCode::ParseError);
  CHECK(error_of([] { Catalog::parse("read,63,0,1,1,0,ipx,\n"); }) == ErrorCode::ParseError);
  CHECK(error_of([] { Catalog::parse("read,-,0,1,1,0,ipp,\n"); }) == ErrorCode::ParseError);
  CHECK(error_of([] { Catalog::parse("read,63,0,1,1,0,ipp,\nread,63,0,1,1,0,ipp,\n"); }) ==
        ErrorCode::DuplicateEntry);
  CHECK(Catalog::parse("# comment\nread,63,0,1,1,0,ipp,\n").specs().size() == 1);
}

TEST_CASE("fcntl is relevant only for dup-like commands") {
  auto ev = joined(0, 1, "fcntl", {3, 0, 0}, 4);
  CHECK(is_relevant(ev, Arch::Arm64));
  ev.args[1] = 1030;  // F_DUPFD_CLOEXEC
  CHECK(is_relevant(ev, Arch::Arm64));
  ev.args[1] = 4;  // F_SETFL
  CHECK_FALSE(is_relevant(ev, Arch::Arm64));
  CHECK(is_relevant(joined(0, 1, "read", {3, 0, 0}, 4), Arch::Arm64));
}

TEST_CASE("timestamp deltas") {
  const auto first = joined(5'000'000, 1, "read", {3, 0x7000, 16}, 16);
  auto second = first;
  second.ts_ns += 1'234'567;

  EventEncoder enc(Arch::Arm64, 1000);
  const auto a = enc.encode(first);
  const auto b = enc.encode(second);
  REQUIRE(!a.empty());
  CHECK(a[0] == kResyncType);  // stream start
  CHECK(b[0] != kResyncType);
  CHECK(b[1] == 1234 % 128 + 128);  // varint 1234 = d2 09
  CHECK(b[2] == 1234 / 128);

  const auto same_time = encode_event(first, first.ts_ns, Arch::Arm64, 1000);
  CHECK(same_time[1] == 0);
  const auto decoded = decode_event(b, first.ts_ns, Arch::Arm64, 1000);
  CHECK(decoded.ts_ns == first.ts_ns + 1'234'000);
}

TEST_CASE("encoder errors") {
  auto ev = joined(0, 1, "read", {3, 0, 0}, 0);
  ev.nr = *Catalog::builtin().find("open")->nr(Arch::X86_64);  // not traced on arm64
  CHECK(error_of([&] { encode_event(ev, 0, Arch::Arm64); }) == ErrorCode::UntracedSyscall);
  CHECK(error_of([] {
          encode_event(joined(0, 1, "read", {0x100000000ULL, 0, 0}, 0), 0, Arch::Arm64);
        }) == ErrorCode::ArgumentOverflow);
  auto pending = joined(0, 1, "read", {3, 0, 0}, 0);
  pending.ret.reset();
  CHECK(error_of([&] { encode_event(pending, 0, Arch::Arm64); }) == ErrorCode::InvalidEvent);
}

TEST_CASE("decoder errors") {
  CHECK(error_of([] { decode_event({}, 0, Arch::Arm64); }) == ErrorCode::Truncated);
  const Bytes bad{0xff, 0};
  CHECK(error_of([&] { decode_event(bad, 0, Arch::Arm64); }) == ErrorCode::UnknownTypeCode);
  const auto full = encode_event(joined(10'000, 1, "write", {1, 0x7000, 5}, 5), 0, Arch::Arm64);
  const Bytes cut(full.begin(), full.end() - 1);
  CHECK(error_of([&] { decode_event(cut, 0, Arch::Arm64); }) == ErrorCode::Truncated);
}

TEST_CASE("encode/decode round-trip") {
  std::mt19937_64 rng(99);
  for (Arch arch : {Arch::Arm64, Arch::X86_64}) {
    for (std::int64_t granularity : {1LL, 1000LL, 250'000LL}) {
      std::vector<SyscallEvent> events;
      std::int64_t ts = static_cast<std::int64_t>(rng() % 1'000'000'000'000);
      for (int i = 0; i < 400; ++i) {
        // Mostly forward steps, some huge jumps and some backwards ones (resync).
        const auto r = rng() % 20;
        ts += r == 0 ? static_cast<std::int64_t>(rng() % (1LL << 50))
              : r == 1 ? -static_cast<std::int64_t>(rng() % 1'000'000)
                       : static_cast<std::int64_t>(rng() % 5'000'000);
        ts = std::max<std::int64_t>(ts, 0);
        events.push_back(random_event(rng, arch, ts));
      }
      EventEncoder enc(arch, granularity);
      Bytes stream;
      for (const auto& ev : events) {
        const auto bytes = enc.encode(ev);
        stream.insert(stream.end(), bytes.begin(), bytes.end());
      }
      const auto decoded = EventDecoder(arch, granularity).decode_all(stream);
      REQUIRE(decoded.size() == events.size());
      for (std::size_t i = 0; i < events.size(); ++i) {
        auto expected = events[i];
        CHECK(decoded[i].ts_ns <= expected.ts_ns);
        CHECK(expected.ts_ns - decoded[i].ts_ns < granularity);
        expected.ts_ns = decoded[i].ts_ns;
        CHECK(decoded[i] == expected);
      }
    }
  }
}

TEST_CASE("join_enter_exit") {
  const int read = 63, write = 64;
  SUBCASE("simple pair") {
    const std::vector<SyscallEvent> in{phase_event(Phase::Enter, 10, 1, read),
                                       phase_event(Phase::Exit, 20, 1, read, 42)};
    const auto out = join_enter_exit(in);
    REQUIRE(out.size() == 1);
    CHECK(out[0].phase == Phase::Joined);
    CHECK(out[0].ret == std::optional<std::int64_t>(42));
    CHECK(out[0].ts_ns == 10);
  }
  SUBCASE("interleaved pids") {
    const std::vector<SyscallEvent> in{
        phase_event(Phase::Enter, 1, 1, read), phase_event(Phase::Enter, 2, 2, read),
        phase_event(Phase::Exit, 3, 2, read, 7), phase_event(Phase::Exit, 4, 1, read, 3)};
    const auto out = join_enter_exit(in);
    REQUIRE(out.size() == 2);
    CHECK(out[0].pid == 1);
    CHECK(out[0].ret == std::optional<std::int64_t>(3));
    CHECK(out[1].pid == 2);
    CHECK(out[1].ret == std::optional<std::int64_t>(7));
  }
  SUBCASE("orphans and pending") {
    const std::vector<SyscallEvent> in{phase_event(Phase::Exit, 1, 1, write, 5),
                                       phase_event(Phase::Enter, 2, 1, read)};
    const auto out = join_enter_exit(in);
    REQUIRE(out.size() == 2);
    CHECK(out[0].orphan);
    CHECK(out[1].phase == Phase::Enter);
    CHECK_FALSE(out[1].ret.has_value());
  }
  SUBCASE("count conservation on random streams") {
    std::mt19937 rng(5);
    for (int round = 0; round < 200; ++round) {
      std::vector<SyscallEvent> in;
      for (int i = 0; i < 60; ++i) {
        in.push_back(phase_event(rng() % 2 ? Phase::Enter : Phase::Exit, i, 1 + rng() % 3,
                                 rng() % 2 ? read : write,
                                 static_cast<std::int64_t>(rng() % 10)));
        if (in.back().phase == Phase::Enter) in.back().ret.reset();
      }
      const auto out = join_enter_exit(in);
      std::size_t joined_count = 0, pending = 0, orphans = 0;
      for (const auto& ev : out) {
        joined_count += ev.phase == Phase::Joined;
        pending += ev.phase == Phase::Enter;
        orphans += ev.orphan;
      }
      CHECK(2 * joined_count + pending + orphans == in.size());
    }
  }
}

}  // TEST_SUITE
