// Python bindings: thin wrappers that exchange plain strings, numbers and
// bytes; the package's __init__ turns JSON strings into Python objects.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "droidaudit/audit_log.hpp"
#include "droidaudit/compare.hpp"
#include "droidaudit/error.hpp"
#include "droidaudit/pipeline.hpp"
#include "droidaudit/sigtable.hpp"
#include "droidaudit/syscall_catalog.hpp"

namespace py = pybind11;
namespace da = droidaudit;

namespace {

da::syscalls::Arch arch_of(const std::string& name) {
  auto arch = da::syscalls::parse_arch(name);
  if (!arch) throw py::value_error("unknown architecture '" + name + "'");
  return *arch;
}

da::sigtable::SignatureTable table_of(const std::optional<std::string>& text) {
  return da::sigtable::parse_table(text ? *text : std::string(da::sigtable::sample_table_text()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Binder transaction decoding and syscall-trace tooling";

  static py::exception<da::Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const da::Error& e) {
      py::object exc = py::handle(error.ptr())(e.what());
      exc.attr("code") = std::string(da::to_string(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def(
      "decode_capture",
      [](const std::string& capture, std::optional<std::string> table, const std::string& format,
         bool stability_footer, const std::string& arch) {
        da::audit::CaptureOptions options;
        options.decode.stability_footer = stability_footer;
        options.arch = arch_of(arch);
        const auto log = da::audit::decode_capture(capture, table_of(table), options);
        if (format != "text" && format != "records") throw py::value_error("format is text or records");
        const auto fmt = format == "text" ? da::audit::Format::Text : da::audit::Format::Records;
        return py::make_tuple(da::audit::render_log(log, fmt), da::audit::summary_line(log.summary),
                              da::audit::table_warning(log));
      },
      py::arg("capture"), py::arg("table") = py::none(), py::arg("format") = "text",
      py::arg("stability_footer") = true, py::arg("arch") = "arm64",
      "Decode capture text; returns (rendered log, summary line, table warning).");

  m.def("sample_table", [] { return std::string(da::sigtable::sample_table_text()); });

  m.def(
      "compare",
      [](const std::string& a, const std::string& b, std::optional<std::int64_t> offset,
         const std::string& app_id, std::vector<std::int32_t> exclude_pids, const std::string& arch) {
        da::compare::NormalizeOptions normalize;
        normalize.arch = arch_of(arch);
        normalize.excluded_pids.insert(exclude_pids.begin(), exclude_pids.end());
        const auto log_a = da::compare::parse_log(a, normalize);
        const auto log_b = da::compare::parse_log(b, normalize);
        const auto report = da::compare::compare_logs(
            log_a, log_b, da::compare::default_match_config(normalize.arch), app_id, offset);
        return py::make_tuple(da::compare::report_json(report), report.offset,
                              da::compare::report_line(report));
      },
      py::arg("a"), py::arg("b"), py::arg("offset") = py::none(), py::arg("app_id") = "",
      py::arg("exclude_pids") = std::vector<std::int32_t>{}, py::arg("arch") = "arm64",
      "Compare two trace logs given as text; returns (report JSON, offset, UER line).");

  m.def(
      "uer",
      [](std::uint64_t matched, std::uint64_t unique_a, std::uint64_t unique_b) {
        da::compare::MatchResult r;
        r.matched = matched;
        r.unique_a = unique_a;
        r.unique_b = unique_b;
        const auto u = da::compare::uer(r);
        return py::make_tuple(u.a, u.b);
      },
      py::arg("matched"), py::arg("unique_a"), py::arg("unique_b"));

  m.def(
      "simulate",
      [](const std::string& config_json, std::uint64_t seed) {
        const auto spec = da::pipeline::parse_simulation_config(config_json);
        return da::pipeline::to_json(da::pipeline::simulate_buffers(spec.config, spec.workload, seed));
      },
      py::arg("config_json"), py::arg("seed"), "Run the buffer simulator; returns the loss report JSON.");

  m.def(
      "reassemble",
      [](const std::vector<std::tuple<std::uint64_t, std::uint32_t, std::uint32_t, py::bytes>>& chunks) {
        std::vector<da::pipeline::ChunkRecord> records;
        for (const auto& [id, seq, total, data] : chunks) {
          const auto view = static_cast<std::string_view>(data);
          records.push_back({id, seq, total, da::Bytes(view.begin(), view.end())});
        }
        const auto result = da::pipeline::reassemble_chunks(std::move(records));
        py::dict completed;
        for (const auto& ev : result.completed) {
          completed[py::int_(ev.event_id)] =
              py::bytes(reinterpret_cast<const char*>(ev.payload.data()), ev.payload.size());
        }
        py::dict missing;
        for (const auto& ev : result.incomplete) missing[py::int_(ev.event_id)] = ev.missing;
        return py::make_tuple(completed, missing);
      },
      py::arg("chunks"), "Reassemble (event_id, seq, total, bytes) chunks; returns (completed, missing).");

  m.def("mask_user_address", &da::pipeline::mask_user_address, py::arg("address"));
  m.def(
      "traced_set", [](const std::string& arch) { return da::syscalls::traced_set(arch_of(arch)); },
      py::arg("arch") = "arm64");
}
