#include "droidaudit/syscall_catalog.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "droidaudit/error.hpp"
#include "embedded_data.hpp"

namespace droidaudit::syscalls {

std::string_view to_string(Arch arch) noexcept {
  return arch == Arch::Arm64 ? "arm64" : "x86_64";
}

std::optional<Arch> parse_arch(std::string_view text) noexcept {
  if (text == "arm64" || text == "aarch64") return Arch::Arm64;
  if (text == "x86_64" || text == "amd64") return Arch::X86_64;
  return std::nullopt;
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::Enter: return "enter";
    case Phase::Exit: return "exit";
    case Phase::Joined: return "joined";
  }
  return "joined";
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<int> parse_nr(std::string_view field, std::size_t line_no) {
  if (field == "-") return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || value < 0) {
    throw Error(ErrorCode::ParseError,
                "catalog line " + std::to_string(line_no) + ": bad syscall number '" +
                    std::string(field) + "'");
  }
  return value;
}

bool parse_flag(std::string_view field, std::size_t line_no) {
  if (field == "1") return true;
  if (field == "0") return false;
  throw Error(ErrorCode::ParseError, "catalog line " + std::to_string(line_no) +
                                         ": trace flag must be 0 or 1");
}

}  // namespace

Catalog Catalog::parse(std::string_view csv) {
  Catalog cat;
  std::size_t line_no = 0;
  for (auto line : split(csv, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto f = split(line, ',');
    if (f.size() != 8) {
      throw Error(ErrorCode::ParseError,
                  "catalog line " + std::to_string(line_no) + ": expected 8 fields");
    }
    SyscallSpec spec;
    spec.name = std::string(f[0]);
    spec.arm64_nr = parse_nr(f[1], line_no);
    spec.x86_64_nr = parse_nr(f[2], line_no);
    spec.traced_arm64 = parse_flag(f[3], line_no);
    spec.traced_x86_64 = parse_flag(f[4], line_no);
    auto prio = parse_nr(f[5], line_no);
    if (!prio || *prio > kPriorityHigh) {
      throw Error(ErrorCode::ParseError,
                  "catalog line " + std::to_string(line_no) + ": priority must be 0-2");
    }
    spec.priority_class = *prio;
    spec.arg_schema = std::string(f[6]);
    spec.note = std::string(f[7]);
    if (spec.arg_schema.size() > 6 ||
        spec.arg_schema.find_first_not_of("ip") != std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  "catalog line " + std::to_string(line_no) + ": bad argument schema");
    }
    if ((spec.traced_arm64 && !spec.arm64_nr) || (spec.traced_x86_64 && !spec.x86_64_nr)) {
      throw Error(ErrorCode::ParseError, "catalog line " + std::to_string(line_no) + ": " +
                                             spec.name + " traced without a syscall number");
    }
    if (cat.find(spec.name) != nullptr) {
      throw Error(ErrorCode::DuplicateEntry, "catalog has two entries for " + spec.name);
    }
    cat.specs_.push_back(std::move(spec));
  }
  return cat;
}

const Catalog& Catalog::builtin() {
  static const Catalog catalog = parse(embedded::kSyscallCatalog);
  return catalog;
}

const SyscallSpec* Catalog::find(std::string_view name) const {
  auto it = std::find_if(specs_.begin(), specs_.end(),
                         [&](const SyscallSpec& s) { return s.name == name; });
  return it == specs_.end() ? nullptr : &*it;
}

const SyscallSpec* Catalog::find(Arch arch, int nr) const {
  const SyscallSpec* alias = nullptr;
  for (const auto& s : specs_) {
    if (s.nr(arch) != nr) continue;
    if (!s.is_alias()) return &s;
    alias = &s;
  }
  return alias;
}

std::vector<const SyscallSpec*> Catalog::traced(Arch arch) const {
  std::vector<const SyscallSpec*> out;
  for (const auto& s : specs_) {
    if (s.traced_on(arch)) out.push_back(&s);
  }
  return out;
}

std::optional<std::size_t> Catalog::traced_index(Arch arch, int nr) const {
  std::size_t index = 0;
  std::optional<std::size_t> alias;
  for (const auto& s : specs_) {
    if (!s.traced_on(arch)) continue;
    if (s.nr(arch) == nr) {
      if (!s.is_alias()) return index;
      if (!alias) alias = index;
    }
    ++index;
  }
  return alias;
}

std::set<std::string> traced_set(Arch arch) {
  std::set<std::string> out;
  for (const auto* s : Catalog::builtin().traced(arch)) out.insert(s->name);
  return out;
}

bool is_relevant(const SyscallEvent& ev, Arch arch) {
  const auto* spec = Catalog::builtin().find(arch, ev.nr);
  if (spec == nullptr || spec->note != "dup-only") return true;
  constexpr std::uint64_t kDupFd = 0;
  constexpr std::uint64_t kDupFdCloexec = 1030;
  if (ev.phase == Phase::Exit) return true;
  const auto cmd = ev.args[1] & 0xffffffffu;
  return cmd == kDupFd || cmd == kDupFdCloexec;
}

namespace {

std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
std::int64_t unzigzag(std::uint64_t v) {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

void put_varint(Bytes& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint64_t get_varint(ByteView bytes, std::size_t& pos) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (pos >= bytes.size()) throw Error(ErrorCode::Truncated, "varint runs past end of input");
    const auto b = bytes[pos++];
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) return v;
  }
  throw Error(ErrorCode::Truncated, "varint longer than 10 bytes");
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  auto q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

const SyscallSpec& traced_spec(Arch arch, std::size_t index) {
  return *Catalog::builtin().traced(arch).at(index);
}

void check_granularity(std::int64_t g) {
  if (g <= 0) throw Error(ErrorCode::InvalidConfig, "granularity must be positive");
}

}  // namespace

EventEncoder::EventEncoder(Arch arch, std::int64_t granularity_ns,
                           std::optional<std::int64_t> prev_ts_ns)
    : arch_(arch), granularity_(granularity_ns) {
  check_granularity(granularity_ns);
  if (prev_ts_ns) prev_units_ = floor_div(*prev_ts_ns, granularity_ns);
}

Bytes EventEncoder::encode(const SyscallEvent& ev) {
  const auto& catalog = Catalog::builtin();
  const auto index = catalog.traced_index(arch_, ev.nr);
  if (!index) {
    throw Error(ErrorCode::UntracedSyscall, "syscall " + std::to_string(ev.nr) +
                                                " is not traced on " +
                                                std::string(to_string(arch_)));
  }
  const auto& spec = traced_spec(arch_, *index);
  if (ev.phase == Phase::Joined && !ev.ret) {
    throw Error(ErrorCode::InvalidEvent, "joined event without return value");
  }
  const bool has_args = ev.phase != Phase::Exit;
  for (std::size_t i = 0; i < ev.args.size(); ++i) {
    const char slot = (has_args && i < spec.arg_schema.size()) ? spec.arg_schema[i] : '\0';
    if (slot == '\0' && ev.args[i] != 0) {
      throw Error(has_args ? ErrorCode::ArgumentOverflow : ErrorCode::InvalidEvent,
                  spec.name + " argument " + std::to_string(i) + " has no slot");
    }
    if (slot == 'i' && ev.args[i] > 0xffffffffu) {
      throw Error(ErrorCode::ArgumentOverflow,
                  spec.name + " argument " + std::to_string(i) + " exceeds 4 bytes");
    }
  }

  Bytes out;
  const auto units = floor_div(ev.ts_ns, granularity_);
  const bool need_resync = !prev_units_ || units < *prev_units_ ||
                           static_cast<std::uint64_t>(units - *prev_units_) > kMaxDeltaUnits;
  if (need_resync) {
    out.push_back(kResyncType);
    store_le(out, units);
    prev_units_ = units;
  }
  out.push_back(static_cast<std::uint8_t>(1 + 3 * *index + static_cast<std::size_t>(ev.phase)));
  put_varint(out, static_cast<std::uint64_t>(units - *prev_units_));
  put_varint(out, zigzag(ev.pid));
  put_varint(out, zigzag(ev.tgid));
  if (has_args) {
    for (std::size_t i = 0; i < spec.arg_schema.size(); ++i) {
      if (spec.arg_schema[i] == 'i') {
        store_le(out, static_cast<std::uint32_t>(ev.args[i]));
      } else {
        store_le(out, ev.args[i]);
      }
    }
  }
  if (ev.phase != Phase::Enter) put_varint(out, zigzag(ev.ret.value_or(0)));
  prev_units_ = units;
  return out;
}

EventDecoder::EventDecoder(Arch arch, std::int64_t granularity_ns, std::int64_t prev_ts_ns)
    : arch_(arch), granularity_(granularity_ns), prev_units_(0) {
  check_granularity(granularity_ns);
  prev_units_ = floor_div(prev_ts_ns, granularity_ns);
}

EventDecoder::Result EventDecoder::decode(ByteView bytes) {
  std::size_t pos = 0;
  if (bytes.empty()) throw Error(ErrorCode::Truncated, "empty input");
  auto units = prev_units_;
  while (pos < bytes.size() && bytes[pos] == kResyncType) {
    if (bytes.size() - pos < 9) throw Error(ErrorCode::Truncated, "resync record cut short");
    units = load_le<std::int64_t>(bytes, pos + 1);
    pos += 9;
  }
  if (pos >= bytes.size()) throw Error(ErrorCode::Truncated, "resync without event");
  const auto traced = Catalog::builtin().traced(arch_);
  const std::size_t type = bytes[pos++];
  if (type < 1 || type > 3 * traced.size()) {
    throw Error(ErrorCode::UnknownTypeCode, "type byte " + std::to_string(type));
  }
  const auto& spec = *traced[(type - 1) / 3];
  SyscallEvent ev;
  ev.phase = static_cast<Phase>((type - 1) % 3);
  ev.nr = *spec.nr(arch_);
  units += static_cast<std::int64_t>(get_varint(bytes, pos));
  ev.ts_ns = units * granularity_;
  ev.pid = static_cast<std::int32_t>(unzigzag(get_varint(bytes, pos)));
  ev.tgid = static_cast<std::int32_t>(unzigzag(get_varint(bytes, pos)));
  if (ev.phase != Phase::Exit) {
    for (std::size_t i = 0; i < spec.arg_schema.size(); ++i) {
      const std::size_t width = spec.arg_schema[i] == 'i' ? 4 : 8;
      if (bytes.size() - pos < width) throw Error(ErrorCode::Truncated, "argument cut short");
      ev.args[i] = width == 4 ? load_le<std::uint32_t>(bytes, pos) : load_le<std::uint64_t>(bytes, pos);
      pos += width;
    }
  }
  if (ev.phase != Phase::Enter) ev.ret = unzigzag(get_varint(bytes, pos));
  prev_units_ = units;
  return {ev, pos};
}

std::vector<SyscallEvent> EventDecoder::decode_all(ByteView bytes) {
  std::vector<SyscallEvent> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto r = decode(bytes.subspan(pos));
    out.push_back(r.event);
    pos += r.consumed;
  }
  return out;
}

Bytes encode_event(const SyscallEvent& ev, std::int64_t prev_ts_ns, Arch arch,
                   std::int64_t granularity_ns) {
  EventEncoder enc(arch, granularity_ns, prev_ts_ns);
  return enc.encode(ev);
}

SyscallEvent decode_event(ByteView bytes, std::int64_t prev_ts_ns, Arch arch,
                          std::int64_t granularity_ns) {
  EventDecoder dec(arch, granularity_ns, prev_ts_ns);
  return dec.decode(bytes).event;
}

std::vector<SyscallEvent> join_enter_exit(std::span<const SyscallEvent> events) {
  std::vector<SyscallEvent> out;
  out.reserve(events.size());
  // (pid, nr) -> indices into `out` of enters still waiting for their exit
  std::map<std::pair<std::int32_t, std::int32_t>, std::vector<std::size_t>> open;
  for (const auto& ev : events) {
    switch (ev.phase) {
      case Phase::Joined:
        out.push_back(ev);
        break;
      case Phase::Enter: {
        auto pending = ev;
        pending.ret.reset();
        open[{ev.pid, ev.nr}].push_back(out.size());
        out.push_back(std::move(pending));
        break;
      }
      case Phase::Exit: {
        auto it = open.find({ev.pid, ev.nr});
        if (it != open.end() && !it->second.empty()) {
          auto& joined = out[it->second.back()];
          it->second.pop_back();
          joined.phase = Phase::Joined;
          joined.ret = ev.ret;
        } else {
          auto orphan = ev;
          orphan.orphan = true;
          out.push_back(std::move(orphan));
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace droidaudit::syscalls
