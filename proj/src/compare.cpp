#include "droidaudit/compare.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "droidaudit/error.hpp"

namespace droidaudit::compare {

using nlohmann::json;
using syscalls::Catalog;
using syscalls::Phase;

std::string_view to_string(Source source) noexcept {
  switch (source) {
    case Source::WdSys: return "wdsys";
    case Source::Ftrace: return "ftrace";
    case Source::Generic: return "generic";
  }
  return "generic";
}

TraceLog normalize_log(std::vector<SyscallEvent> raw, Source source, ClockBase clock_base,
                       const NormalizeOptions& options, bool has_thread_ids) {
  TraceLog log;
  log.source = source;
  log.clock_base = clock_base;
  log.has_thread_ids = has_thread_ids;
  const auto& catalog = Catalog::builtin();
  for (auto& ev : syscalls::join_enter_exit(raw)) {
    if (ev.orphan) {
      ++log.dropped_orphans;
      continue;
    }
    if (options.excluded_pids.contains(ev.pid) || options.excluded_pids.contains(ev.tgid)) {
      ++log.dropped_excluded;
      continue;
    }
    const auto* spec = catalog.find(options.arch, ev.nr);
    if (options.traced_only && (spec == nullptr || !spec->traced_on(options.arch))) {
      ++log.dropped_untraced;
      continue;
    }
    if (spec != nullptr) {
      for (std::size_t i = 0; i < ev.args.size(); ++i) {
        if (i >= spec->arg_schema.size()) {
          ev.args[i] = 0;
        } else if (spec->arg_schema[i] == 'i') {
          ev.args[i] &= 0xffffffffu;
        }
      }
    }
    log.events.push_back(std::move(ev));
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const SyscallEvent& a, const SyscallEvent& b) { return a.ts_ns < b.ts_ns; });
  return log;
}

namespace {

[[noreturn]] void parse_fail(std::size_t record, const std::string& what) {
  throw Error(ErrorCode::ParseError, "record " + std::to_string(record) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    fn(line, line_no);
  }
}

template <typename T>
std::optional<T> parse_int(std::string_view s, int base = 10) {
  T value{};
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Decimal (optionally negative, stored two's complement) or 0x-prefixed hex.
std::optional<std::uint64_t> parse_arg_text(std::string_view s) {
  s = trim(s);
  if (s.starts_with("0x") || s.starts_with("0X")) return parse_int<std::uint64_t>(s.substr(2), 16);
  if (s.starts_with("-")) {
    auto v = parse_int<std::int64_t>(s);
    if (!v) return std::nullopt;
    return static_cast<std::uint64_t>(*v);
  }
  return parse_int<std::uint64_t>(s);
}

std::uint64_t json_arg(const json& v, std::size_t record) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_string()) {
    if (auto parsed = parse_arg_text(v.get<std::string>())) return *parsed;
  }
  parse_fail(record, "bad argument value " + v.dump());
}

std::int64_t json_int(const json& obj, const char* field, std::size_t record) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_number_integer()) {
    parse_fail(record, std::string("missing integer field '") + field + "'");
  }
  return it->get<std::int64_t>();
}

// "<sec>.<frac>" with any number of fraction digits (ftrace prints 6 or 9).
std::optional<std::int64_t> parse_seconds(std::string_view s) {
  auto dot = s.find('.');
  auto secs = parse_int<std::int64_t>(s.substr(0, dot));
  if (!secs) return std::nullopt;
  std::int64_t ns = *secs * 1'000'000'000;
  if (dot != std::string_view::npos) {
    auto frac = s.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) return std::nullopt;
    auto f = parse_int<std::int64_t>(frac);
    if (!f) return std::nullopt;
    std::int64_t scaled = *f;
    for (auto i = frac.size(); i < 9; ++i) scaled *= 10;
    ns += scaled;
  }
  return ns;
}

}  // namespace

TraceLog parse_ftrace(std::string_view text, const NormalizeOptions& options) {
  std::vector<SyscallEvent> raw;
  for_each_line(text, [&](std::string_view line, std::size_t record) {
    Phase phase;
    auto marker = line.find(": sys_enter: NR ");
    if (marker != std::string_view::npos) {
      phase = Phase::Enter;
    } else if ((marker = line.find(": sys_exit: NR ")) != std::string_view::npos) {
      phase = Phase::Exit;
    } else {
      return;  // other tracepoints and trace headers
    }
    auto prefix = trim(line.substr(0, marker));
    auto body = line.substr(marker + (phase == Phase::Enter ? 16 : 15));

    SyscallEvent ev;
    ev.phase = phase;
    auto ts_pos = prefix.find_last_of(' ');
    auto ts = parse_seconds(prefix.substr(ts_pos == std::string_view::npos ? 0 : ts_pos + 1));
    if (!ts) parse_fail(record, "bad timestamp");
    ev.ts_ns = *ts;

    auto cpu = prefix.find(" [");
    while (cpu != std::string_view::npos) {
      auto close = prefix.find(']', cpu);
      if (close != std::string_view::npos &&
          parse_int<int>(trim(prefix.substr(cpu + 2, close - cpu - 2)))) {
        break;
      }
      cpu = prefix.find(" [", cpu + 1);
    }
    if (cpu == std::string_view::npos) parse_fail(record, "missing CPU column");
    auto task = trim(prefix.substr(0, cpu));
    bool has_tgid = false;
    if (!task.empty() && task.back() == ')') {
      auto open = task.rfind('(');
      if (open == std::string_view::npos) parse_fail(record, "unbalanced tgid column");
      auto tgid = parse_int<std::int32_t>(trim(task.substr(open + 1, task.size() - open - 2)));
      if (tgid) {
        ev.tgid = *tgid;
        has_tgid = true;
      }
      task = trim(task.substr(0, open));
    }
    auto dash = task.rfind('-');
    auto pid = dash == std::string_view::npos ? std::nullopt
                                              : parse_int<std::int32_t>(task.substr(dash + 1));
    if (!pid) parse_fail(record, "missing <comm>-<pid>");
    ev.pid = *pid;
    if (!has_tgid) ev.tgid = ev.pid;

    auto space = body.find(' ');
    auto nr = parse_int<std::int32_t>(body.substr(0, space));
    if (!nr) parse_fail(record, "bad syscall number");
    ev.nr = *nr;
    auto rest = space == std::string_view::npos ? std::string_view{} : trim(body.substr(space));
    if (phase == Phase::Enter) {
      if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') {
        parse_fail(record, "bad argument list");
      }
      rest = rest.substr(1, rest.size() - 2);
      std::size_t i = 0;
      while (!rest.empty()) {
        auto comma = rest.find(',');
        auto arg = trim(rest.substr(0, comma));
        if (i >= ev.args.size()) parse_fail(record, "more than six arguments");
        auto v = parse_int<std::uint64_t>(arg.starts_with("0x") ? arg.substr(2) : arg, 16);
        if (!v) parse_fail(record, "bad argument '" + std::string(arg) + "'");
        ev.args[i++] = *v;
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
    } else {
      if (!rest.starts_with("= ")) parse_fail(record, "bad return value");
      auto ret = parse_int<std::int64_t>(trim(rest.substr(2)));
      if (!ret) parse_fail(record, "bad return value");
      ev.ret = *ret;
    }
    raw.push_back(ev);
  });
  return normalize_log(std::move(raw), Source::Ftrace, ClockBase::BootRelative, options);
}

TraceLog parse_wdsys(std::string_view text, const NormalizeOptions& options) {
  std::vector<SyscallEvent> raw;
  const auto& catalog = Catalog::builtin();
  for_each_line(text, [&](std::string_view line, std::size_t record) {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      parse_fail(record, "invalid JSON");
    }
    if (!rec.is_object()) parse_fail(record, "record is not an object");
    SyscallEvent ev;
    ev.ts_ns = json_int(rec, "ts", record);
    ev.pid = static_cast<std::int32_t>(json_int(rec, "pid", record));
    ev.tgid = rec.contains("tgid") ? static_cast<std::int32_t>(json_int(rec, "tgid", record)) : ev.pid;
    const auto& sc = rec.contains("syscall") ? rec["syscall"] : rec.value("nr", json());
    if (sc.is_number_integer()) {
      ev.nr = sc.get<std::int32_t>();
    } else if (sc.is_string()) {
      const auto* spec = catalog.find(sc.get<std::string>());
      if (spec == nullptr || !spec->nr(options.arch)) {
        parse_fail(record, "unknown syscall '" + sc.get<std::string>() + "'");
      }
      ev.nr = *spec->nr(options.arch);
    } else {
      parse_fail(record, "missing 'syscall'");
    }
    if (auto args = rec.find("args"); args != rec.end()) {
      if (!args->is_array() || args->size() > 6) parse_fail(record, "'args' must hold <= 6 values");
      for (std::size_t i = 0; i < args->size(); ++i) ev.args[i] = json_arg((*args)[i], record);
    }
    if (auto ret = rec.find("ret"); ret != rec.end() && !ret->is_null()) {
      ev.ret = static_cast<std::int64_t>(json_arg(*ret, record));
    }
    ev.phase = Phase::Joined;
    raw.push_back(ev);
  });
  return normalize_log(std::move(raw), Source::WdSys, ClockBase::Absolute, options);
}

TraceLog parse_normalized(std::string_view text, const NormalizeOptions& options) {
  std::vector<SyscallEvent> raw;
  bool thread_ids = true;
  for_each_line(text, [&](std::string_view line, std::size_t record) {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      parse_fail(record, "invalid JSON");
    }
    if (!rec.is_object()) parse_fail(record, "record is not an object");
    SyscallEvent ev;
    ev.ts_ns = json_int(rec, "ts_ns", record);
    ev.pid = static_cast<std::int32_t>(json_int(rec, "pid", record));
    ev.tgid = static_cast<std::int32_t>(json_int(rec, "tgid", record));
    ev.nr = static_cast<std::int32_t>(json_int(rec, "nr", record));
    if (auto args = rec.find("args"); args != rec.end()) {
      if (!args->is_array() || args->size() > 6) parse_fail(record, "'args' must hold <= 6 values");
      for (std::size_t i = 0; i < args->size(); ++i) ev.args[i] = json_arg((*args)[i], record);
    }
    if (auto ret = rec.find("ret"); ret != rec.end() && !ret->is_null()) {
      ev.ret = static_cast<std::int64_t>(json_arg(*ret, record));
    }
    const auto phase = rec.value("phase", std::string("joined"));
    if (phase == "enter") {
      ev.phase = Phase::Enter;
    } else if (phase == "exit") {
      ev.phase = Phase::Exit;
    } else if (phase == "joined") {
      ev.phase = Phase::Joined;
    } else {
      parse_fail(record, "unknown phase '" + phase + "'");
    }
    if (rec.value("thread_ids", true) == false) thread_ids = false;
    raw.push_back(ev);
  });
  return normalize_log(std::move(raw), Source::Generic, ClockBase::Absolute, options, thread_ids);
}

TraceLog parse_log(std::string_view text, const NormalizeOptions& options) {
  std::string_view first;
  for_each_line(text, [&](std::string_view line, std::size_t) {
    if (first.empty()) first = line;
  });
  if (first.starts_with("{")) {
    if (first.find("\"ts_ns\"") != std::string_view::npos) return parse_normalized(text, options);
    return parse_wdsys(text, options);
  }
  return parse_ftrace(text, options);
}

TraceLog load_log(const std::filesystem::path& path, const NormalizeOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_log(buf.str(), options);
}

std::string serialize_normalized(const TraceLog& log) {
  std::string out;
  for (const auto& ev : log.events) {
    nlohmann::ordered_json rec;
    rec["ts_ns"] = ev.ts_ns;
    rec["pid"] = ev.pid;
    rec["tgid"] = ev.tgid;
    rec["nr"] = ev.nr;
    rec["args"] = ev.args;
    rec["ret"] = ev.ret ? json(*ev.ret) : json();
    rec["phase"] = syscalls::to_string(ev.phase);
    if (!log.has_thread_ids) rec["thread_ids"] = false;
    out += rec.dump() + "\n";
  }
  return out;
}

MatchConfig default_match_config(Arch arch) {
  MatchConfig config;
  config.arch = arch;
  const auto& catalog = Catalog::builtin();
  if (const auto* mmap = catalog.find("mmap"); mmap && mmap->nr(arch)) {
    config.compared_args[*mmap->nr(arch)] = 0b111110;
  }
  for (const char* name : {"clone", "clone3"}) {
    if (const auto* spec = catalog.find(name); spec && spec->nr(arch)) {
      config.ignored_syscalls.insert(*spec->nr(arch));
    }
  }
  return config;
}

namespace {

struct EventKey {
  std::int32_t id;
  std::int32_t nr;
  std::array<std::uint64_t, 6> args;
  bool operator==(const EventKey&) const = default;
};

struct EventKeyHash {
  std::size_t operator()(const EventKey& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::uint32_t>(k.id));
    mix(static_cast<std::uint32_t>(k.nr));
    for (auto a : k.args) mix(a);
    return static_cast<std::size_t>(h);
  }
};

EventKey make_key(const SyscallEvent& ev, bool use_tgid, const MatchConfig& config) {
  EventKey key{use_tgid ? ev.tgid : ev.pid, ev.nr, ev.args};
  if (auto it = config.compared_args.find(ev.nr); it != config.compared_args.end()) {
    for (std::size_t i = 0; i < key.args.size(); ++i) {
      if ((it->second & (1u << i)) == 0) key.args[i] = 0;
    }
  }
  return key;
}

// Indices of mmap events that follow an execve of the same process.
std::vector<std::size_t> anchor_candidates(const TraceLog& log, const MatchConfig& config) {
  const auto& catalog = Catalog::builtin();
  const auto* execve = catalog.find("execve");
  const auto* mmap = catalog.find("mmap");
  std::vector<std::size_t> out;
  if (!execve || !mmap || !execve->nr(config.arch) || !mmap->nr(config.arch)) return out;
  std::set<std::int32_t> exec_pids;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const auto& ev = log.events[i];
    if (ev.nr == *execve->nr(config.arch)) {
      exec_pids.insert(ev.pid);
      exec_pids.insert(ev.tgid);
    } else if (ev.nr == *mmap->nr(config.arch) &&
               (exec_pids.contains(ev.pid) || exec_pids.contains(ev.tgid))) {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace

std::int64_t compute_offset(const TraceLog& log_a, const TraceLog& log_b,
                            const MatchConfig& config) {
  const bool use_tgid = !log_a.has_thread_ids || !log_b.has_thread_ids;
  std::unordered_map<EventKey, std::size_t, EventKeyHash> first_b;
  for (auto i : anchor_candidates(log_b, config)) {
    first_b.try_emplace(make_key(log_b.events[i], use_tgid, config), i);
  }
  for (auto i : anchor_candidates(log_a, config)) {
    auto it = first_b.find(make_key(log_a.events[i], use_tgid, config));
    if (it != first_b.end()) return log_a.events[i].ts_ns - log_b.events[it->second].ts_ns;
  }
  throw Error(ErrorCode::NoAnchor, "no mmap following an execve appears in both logs");
}

MatchResult match_events(const TraceLog& log_a, const TraceLog& log_b, std::int64_t offset,
                         const MatchConfig& config) {
  MatchResult result;
  if (log_a.events.empty() || log_b.events.empty()) return result;
  result.window_start = std::max(log_a.events.front().ts_ns, log_b.events.front().ts_ns + offset);
  result.window_end = std::min(log_a.events.back().ts_ns, log_b.events.back().ts_ns + offset);
  if (result.window_start > result.window_end) return result;

  const bool use_tgid = !log_a.has_thread_ids || !log_b.has_thread_ids;
  const auto key_kind = use_tgid ? MatchKey::Tgid : MatchKey::Pid;
  auto counted = [&](const SyscallEvent& ev, std::int64_t shift) {
    const auto ts = ev.ts_ns + shift;
    return ts >= result.window_start && ts <= result.window_end &&
           !config.ignored_syscalls.contains(ev.nr);
  };

  std::unordered_map<EventKey, std::deque<std::size_t>, EventKeyHash> open_a;
  std::vector<bool> matched_a(log_a.events.size(), false);
  std::size_t total_a = 0;
  for (std::size_t i = 0; i < log_a.events.size(); ++i) {
    if (!counted(log_a.events[i], 0)) continue;
    ++total_a;
    open_a[make_key(log_a.events[i], use_tgid, config)].push_back(i);
  }

  for (std::size_t j = 0; j < log_b.events.size(); ++j) {
    const auto& ev = log_b.events[j];
    if (!counted(ev, offset)) continue;
    auto it = open_a.find(make_key(ev, use_tgid, config));
    std::optional<std::size_t> hit;
    if (it != open_a.end()) {
      auto& queue = it->second;
      if (config.max_skew_ns) {
        const auto ts_b = ev.ts_ns + offset;
        // Candidates too old for this event are too old for every later one.
        while (!queue.empty() && log_a.events[queue.front()].ts_ns < ts_b - *config.max_skew_ns) {
          queue.pop_front();
        }
        if (!queue.empty() && log_a.events[queue.front()].ts_ns <= ts_b + *config.max_skew_ns) {
          hit = queue.front();
        }
      } else if (!queue.empty()) {
        hit = queue.front();
      }
      if (hit) queue.pop_front();
    }
    if (hit) {
      matched_a[*hit] = true;
      result.pairs.push_back({*hit, j, key_kind});
    } else {
      result.unique_b_indices.push_back(j);
    }
  }
  result.matched = result.pairs.size();
  result.unique_b = result.unique_b_indices.size();
  for (std::size_t i = 0; i < log_a.events.size(); ++i) {
    if (!matched_a[i] && counted(log_a.events[i], 0)) result.unique_a_indices.push_back(i);
  }
  result.unique_a = result.unique_a_indices.size();
  (void)total_a;
  return result;
}

Uer uer(const MatchResult& result) {
  const auto total = result.union_size();
  if (total == 0) throw Error(ErrorCode::EmptyUnion, "no events in the comparison window");
  return {static_cast<double>(result.unique_a) / static_cast<double>(total),
          static_cast<double>(result.unique_b) / static_cast<double>(total)};
}

CompareReport compare_logs(const TraceLog& log_a, const TraceLog& log_b,
                           const MatchConfig& config, std::string app_id,
                           std::optional<std::int64_t> offset) {
  CompareReport report;
  report.app_id = std::move(app_id);
  report.source_a = log_a.source;
  report.source_b = log_b.source;
  report.offset = offset ? *offset : compute_offset(log_a, log_b, config);
  report.result = match_events(log_a, log_b, report.offset, config);
  report.rates = uer(report.result);
  return report;
}

namespace {
std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}
}  // namespace

std::string report_json(const CompareReport& report) {
  nlohmann::ordered_json out;
  out["app_id"] = report.app_id;
  out["matched"] = report.result.matched;
  out["unique_a"] = report.result.unique_a;
  out["unique_b"] = report.result.unique_b;
  out["uer_a_pct"] = report.rates.a * 100.0;
  out["uer_b_pct"] = report.rates.b * 100.0;
  return out.dump();
}

std::string report_line(const CompareReport& report) {
  return "UER A " + pct(report.rates.a) + "% / B " + pct(report.rates.b) + "%";
}

std::string aggregate_csv_row(std::size_t number, const CompareReport& report) {
  const bool a_is_ftrace = report.source_a == Source::Ftrace && report.source_b != Source::Ftrace;
  const double ft = a_is_ftrace ? report.rates.a : report.rates.b;
  const double wd = a_is_ftrace ? report.rates.b : report.rates.a;
  return std::to_string(number) + "," + report.app_id + "," + pct(ft) + "," + pct(wd);
}

}  // namespace droidaudit::compare
