// droidaudit: decode Binder captures, manage signature tables, compare tracer
// logs and run buffer-loss simulations.
//
// Exit status: 0 ran to completion (even with per-record decode errors),
// 1 an input could not be read or processed, 2 bad arguments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "droidaudit/audit_log.hpp"
#include "droidaudit/compare.hpp"
#include "droidaudit/error.hpp"
#include "droidaudit/pipeline.hpp"
#include "droidaudit/sigtable.hpp"

namespace {

namespace da = droidaudit;

constexpr int kExitInput = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw da::Error(da::ErrorCode::ParseError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

da::syscalls::Arch arch_arg(const std::string& text) {
  auto arch = da::syscalls::parse_arch(text);
  if (!arch) throw UsageError("unknown architecture '" + text + "' (arm64 or x86_64)");
  return *arch;
}

// --- decode ----------------------------------------------------------------

struct DecodeArgs {
  std::string input;
  std::string table;
  bool no_stability_footer = false;
  std::string format = "text";
  std::string arch = "arm64";
};

int run_decode(const DecodeArgs& args) {
  da::audit::CaptureOptions options;
  options.decode.stability_footer = !args.no_stability_footer;
  options.arch = arch_arg(args.arch);
  const auto format = args.format == "records" ? da::audit::Format::Records : da::audit::Format::Text;

  const auto table = da::sigtable::parse_table(read_file(args.table));
  const auto log = da::audit::decode_capture(read_file(args.input), table, options);

  std::cout << da::audit::render_log(log, format);
  const auto summary = da::audit::summary_line(log.summary);
  if (format == da::audit::Format::Text) {
    if (!log.entries.empty()) std::cout << "\n";
    std::cout << summary << "\n";
  } else {
    std::cerr << summary << "\n";
  }
  if (auto warning = da::audit::table_warning(log); !warning.empty()) std::cerr << warning << "\n";
  return 0;
}

// --- compare ---------------------------------------------------------------

struct CompareArgs {
  std::string a;
  std::string b;
  std::optional<std::int64_t> offset;
  std::string csv;
  std::string app;
  std::string arch = "arm64";
  std::vector<std::int32_t> exclude_pids;
  std::optional<std::int64_t> max_skew_ns;
  bool json = false;
};

std::size_t csv_rows(const std::string& path) {
  std::ifstream in(path);
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line != da::compare::kAggregateCsvHeader) ++rows;
  }
  return rows;
}

int run_compare(const CompareArgs& args) {
  da::compare::NormalizeOptions normalize;
  normalize.arch = arch_arg(args.arch);
  normalize.excluded_pids.insert(args.exclude_pids.begin(), args.exclude_pids.end());
  auto config = da::compare::default_match_config(normalize.arch);
  config.max_skew_ns = args.max_skew_ns;

  const auto log_a = da::compare::parse_log(read_file(args.a), normalize);
  const auto log_b = da::compare::parse_log(read_file(args.b), normalize);
  const auto app = args.app.empty() ? std::filesystem::path(args.a).stem().string() : args.app;
  const auto report = da::compare::compare_logs(log_a, log_b, config, app, args.offset);

  if (args.json) {
    std::cout << da::compare::report_json(report) << "\n";
  } else {
    const auto& r = report.result;
    std::cout << "A: " << args.a << " (" << da::compare::to_string(log_a.source) << ", "
              << log_a.events.size() << " events)\n"
              << "B: " << args.b << " (" << da::compare::to_string(log_b.source) << ", "
              << log_b.events.size() << " events)\n"
              << "offset=" << report.offset << "ns  window=[" << r.window_start << ", "
              << r.window_end << "]\n"
              << "matched=" << r.matched << "  unique_a=" << r.unique_a
              << "  unique_b=" << r.unique_b << "  total_a=" << r.total_a()
              << "  total_b=" << r.total_b() << "  union=" << r.union_size() << "\n"
              << da::compare::report_line(report) << "\n";
  }

  if (!args.csv.empty()) {
    const bool fresh = !std::filesystem::exists(args.csv) ||
                       std::filesystem::file_size(args.csv) == 0;
    const auto number = fresh ? 1 : csv_rows(args.csv) + 1;
    std::ofstream out(args.csv, std::ios::app);
    if (!out) throw da::Error(da::ErrorCode::ParseError, "cannot write " + args.csv);
    if (fresh) out << da::compare::kAggregateCsvHeader << "\n";
    out << da::compare::aggregate_csv_row(number, report) << "\n";
  }
  return 0;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string sweep;
};

struct Sweep {
  std::string parameter;
  std::vector<double> values;
};

Sweep parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--sweep expects <parameter>=<v1>,<v2>,...");
  Sweep sweep{text.substr(0, eq), {}};
  static const std::set<std::string> known{"ring_capacity", "cache_capacity", "flush_threshold",
                                           "consumer_drain_rate", "cpu_count"};
  if (!known.contains(sweep.parameter)) throw UsageError("cannot sweep '" + sweep.parameter + "'");
  std::stringstream list(text.substr(eq + 1));
  std::string item;
  while (std::getline(list, item, ',')) {
    try {
      std::size_t used = 0;
      sweep.values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad sweep value '" + item + "'");
    }
  }
  if (sweep.values.empty()) throw UsageError("--sweep needs at least one value");
  return sweep;
}

void apply(da::pipeline::BufferConfig& config, const std::string& parameter, double value) {
  if (parameter == "ring_capacity") config.ring_capacity = static_cast<std::uint64_t>(value);
  if (parameter == "cache_capacity") config.cache_capacity = static_cast<std::uint64_t>(value);
  if (parameter == "flush_threshold") config.flush_threshold = static_cast<std::uint64_t>(value);
  if (parameter == "consumer_drain_rate") config.consumer_drain_rate = value;
  if (parameter == "cpu_count") config.cpu_count = static_cast<int>(value);
}

std::string format_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

int run_simulate(const SimulateArgs& args) {
  std::optional<Sweep> sweep;
  if (!args.sweep.empty()) sweep = parse_sweep(args.sweep);
  const auto spec = da::pipeline::parse_simulation_config(read_file(args.config));

  if (!sweep) {
    const auto report = da::pipeline::simulate_buffers(spec.config, spec.workload, args.seed);
    std::cout << da::pipeline::to_json(report) << "\n";
    return 0;
  }
  std::cout << sweep->parameter
            << ",produced,delivered,lost_overwritten,lost_dropped,lost,max_ring_occupancy\n";
  for (double value : sweep->values) {
    auto config = spec.config;
    apply(config, sweep->parameter, value);
    const auto r = da::pipeline::simulate_buffers(config, spec.workload, args.seed);
    std::cout << format_number(value) << "," << r.produced << "," << r.delivered << ","
              << r.lost_overwritten << "," << r.lost_dropped << "," << r.lost() << ","
              << r.max_ring_occupancy << "\n";
  }
  return 0;
}

// --- table -----------------------------------------------------------------

struct TableArgs {
  std::string action;
  std::string file;
  std::string iface;
};

bool iface_matches(const std::string& token, const std::string& filter) {
  if (filter.empty() || token == filter) return true;
  return token.size() > filter.size() && token.ends_with(filter) &&
         token[token.size() - filter.size() - 1] == '.';
}

int run_table(const TableArgs& args) {
  if (args.action == "sample") {
    if (args.file.empty()) {
      std::cout << da::sigtable::sample_table_text();
    } else {
      std::ofstream out(args.file, std::ios::binary | std::ios::trunc);
      if (!out) throw da::Error(da::ErrorCode::ParseError, "cannot write " + args.file);
      out << da::sigtable::sample_table_text();
      std::cout << "wrote " << args.file << "\n";
    }
    return 0;
  }

  const auto table = args.file.empty()
                         ? da::sigtable::parse_table(da::sigtable::sample_table_text())
                         : da::sigtable::parse_table(read_file(args.file));
  if (args.action == "validate") {
    const auto diagnostics = da::sigtable::validate_table(table);
    for (const auto& d : diagnostics) {
      std::cout << da::sigtable::to_string(d.kind) << " " << d.interface_token << " code=" << d.code
                << ": " << d.message << "\n";
    }
    std::cout << diagnostics.size() << " diagnostics\n";
    return 0;
  }

  std::size_t shown = 0;
  for (const auto& [key, sig] : table.entries()) {
    if (!iface_matches(sig.interface_token, args.iface)) continue;
    ++shown;
    std::cout << sig.interface_token << " code=" << sig.code << " " << sig.method_name << "(";
    for (std::size_t i = 0; i < sig.params.size(); ++i) {
      if (i) std::cout << ", ";
      std::cout << sig.params[i].type.name << " " << sig.params[i].name;
    }
    std::cout << ")\n";
  }
  std::cout << shown << (shown == 1 ? " entry" : " entries") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binder audit decoding and syscall-tracer completeness tools", "droidaudit"};
  app.require_subcommand(1, 1);

  DecodeArgs decode;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a Binder capture into an audit log");
  decode_cmd->add_option("--input", decode.input, "Capture file (JSON lines)")->required();
  decode_cmd->add_option("--table", decode.table, "Signature table (JSON lines)")->required();
  decode_cmd->add_flag("--no-stability-footer", decode.no_stability_footer,
                       "Flat binder objects carry no 4-byte stability footer");
  decode_cmd->add_option("--format", decode.format, "text or records")
      ->check(CLI::IsMember({"text", "records"}));
  decode_cmd->add_option("--arch", decode.arch, "arm64 or x86_64");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Compare two tracer logs and report UER");
  compare_cmd->add_option("--a", compare.a, "Log A (ftrace text, WDSys or normalized JSONL)")
      ->required();
  compare_cmd->add_option("--b", compare.b, "Log B")->required();
  compare_cmd->add_option("--offset", compare.offset, "Clock offset in ns (ts_a = ts_b + offset)");
  compare_cmd->add_option("--csv", compare.csv, "Append an aggregate row (#,app,FT,WD) to this file");
  compare_cmd->add_option("--app", compare.app, "App id for the report (default: stem of --a)");
  compare_cmd->add_option("--arch", compare.arch, "arm64 or x86_64");
  compare_cmd->add_option("--exclude-pid", compare.exclude_pids, "Tracer pids to filter out");
  compare_cmd->add_option("--max-skew-ns", compare.max_skew_ns,
                          "Only match events at most this far apart");
  compare_cmd->add_flag("--json", compare.json, "Print the report as one JSON record");

  SimulateArgs simulate;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the per-CPU/ring buffer loss simulation");
  simulate_cmd->add_option("--config", simulate.config, "Simulation config (JSON)")->required();
  simulate_cmd->add_option("--seed", simulate.seed, "RNG seed")->required();
  simulate_cmd->add_option("--sweep", simulate.sweep, "<parameter>=<v1>,<v2>,...; emits CSV");

  TableArgs table;
  auto* table_cmd = app.add_subcommand("table", "Validate, list or export signature tables");
  table_cmd->add_option("action", table.action, "validate, show or sample")
      ->required()
      ->check(CLI::IsMember({"validate", "show", "sample"}));
  table_cmd->add_option("--file", table.file,
                        "Table to read (default: the shipped sample); output path for sample");
  table_cmd->add_option("--iface", table.iface, "Only show this interface (full or simple name)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*decode_cmd) return run_decode(decode);
    if (*compare_cmd) return run_compare(compare);
    if (*simulate_cmd) return run_simulate(simulate);
    return run_table(table);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const da::Error& e) {
    std::cerr << "error: " << da::to_string(e.code()) << ": " << e.what() << "\n";
    return kExitInput;
  }
}
