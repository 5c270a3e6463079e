#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "droidaudit/audit_log.hpp"
#include "oracles.hpp"

using namespace droidaudit;
using namespace droidaudit::audit;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const sigtable::SignatureTable& sample_table() {
  static const auto table = sigtable::parse_table(sigtable::sample_table_text());
  return table;
}

std::string text_with_summary(const AuditLog& log) {
  return render_log(log, Format::Text) + "\n" + summary_line(log.summary) + "\n";
}

std::string txn_line(std::int64_t ts, std::uint32_t code, const Bytes& parcel) {
  nlohmann::json j{{"kind", "txn"}, {"ts_ns", ts}, {"pid", 1},   {"uid", 2},
                   {"code", code},  {"flags", 0},  {"hex", to_hex(parcel)}};
  return j.dump() + "\n";
}

}  // namespace

TEST_SUITE("audit_log") {

TEST_CASE("golden SMS capture renders the expected log") {
  const auto expected = read_file(oracle::data_path("golden/sms_expected.txt"));
  const auto log = decode_capture(read_file(oracle::data_path("golden/sms_capture.jsonl")), sample_table());
  CHECK(text_with_summary(log) == expected);
  CHECK(log.summary.ok == 1);
  CHECK(table_warning(log).empty());

  const auto via_ioctl =
      decode_capture(read_file(oracle::data_path("golden/sms_ioctl_capture.jsonl")), sample_table());
  CHECK(text_with_summary(via_ioctl) == expected);
}

TEST_CASE("records format") {
  const auto log = decode_capture(read_file(oracle::data_path("golden/sms_capture.jsonl")), sample_table());
  const auto out = render_log(log, Format::Records);
  const auto rec = nlohmann::json::parse(out.substr(0, out.find('\n')));
  CHECK(rec["interface"] == "com.android.internal.telephony.ISms");
  CHECK(rec["method_name"] == "sendTextForSubscriber");
  CHECK(rec["method_code"] == 5);
  CHECK(rec["pid"] == 10119);
  CHECK(rec["uid"] == 10188);
  CHECK(rec["data_size"] == 200);
  CHECK(rec["status"] == "Ok");
  REQUIRE(rec["params"].size() == 10);
  CHECK(rec["params"][3]["name"] == "destAddr");
  CHECK(rec["params"][3]["value"] == "057623690820");
  CHECK(rec["raw_buffer_hex"].get<std::string>().size() == 400);
}

TEST_CASE("empty capture") {
  const auto log = decode_capture("", sample_table());
  CHECK(log.entries.empty());
  CHECK(summary_line(log.summary) == "summary: 0 records, 0 ok, 0 unknown_method, 0 errors, 0 syscalls");
  CHECK(render_log(log, Format::Text).empty());
}

TEST_CASE("unknown interface yields a partial record and a stale-table hint") {
  oracle::ParcelWriter w;
  w.header(u"android.os.IFoo");
  w.i32(7);
  const auto log = decode_capture(txn_line(5, 3, w.bytes()), sample_table());
  REQUIRE(log.entries.size() == 1);
  const auto& rec = std::get<parcel::AuditRecord>(log.entries[0]);
  CHECK(rec.status == parcel::DecodeStatus::UnknownMethod);
  CHECK(rec.interface_token == "android.os.IFoo");
  CHECK(log.summary.unknown_method == 1);
  const auto warning = table_warning(log);
  CHECK_FALSE(warning.empty());
  CHECK(render_text(rec).find("status=UnknownMethod") != std::string::npos);
}

TEST_CASE("malformed lines become error records without aborting") {
  const auto golden = read_file(oracle::data_path("golden/sms_capture.jsonl"));
  const std::string capture = "not json\n" + golden +
                              R"({"kind":"txn","ts_ns":2000000,"pid":1,"uid":2,"code":5,"flags":0,"hex":"zz"})"
                              "\n"
                              R"({"kind":"warp","ts_ns":3000000})"
                              "\n";
  const auto log = decode_capture(capture, sample_table());
  CHECK(log.summary.records == 4);
  CHECK(log.summary.ok == 1);
  CHECK(log.summary.errors == 3);
  for (const auto& entry : log.entries) {
    const auto& rec = std::get<parcel::AuditRecord>(entry);
    if (rec.status != parcel::DecodeStatus::Ok) CHECK(rec.status == parcel::DecodeStatus::CaptureFailed);
  }
}

TEST_CASE("truncated transaction keeps the decoded prefix") {
  auto golden = oracle::golden_sms_buffer();
  golden.resize(132);
  nlohmann::json j{{"kind", "txn"}, {"ts_ns", 1}, {"pid", 1}, {"uid", 2}, {"code", 5},
                   {"flags", 0},    {"data_size", 200},       {"hex", to_hex(golden)}};
  const auto log = decode_capture(j.dump() + "\n", sample_table());
  REQUIRE(log.entries.size() == 1);
  const auto& rec = std::get<parcel::AuditRecord>(log.entries[0]);
  CHECK(rec.args.size() == 4);
  CHECK(rec.error == ErrorCode::TruncatedString);
  const auto text = render_text(rec);
  CHECK(text.find("status=TruncatedString") != std::string::npos);
  CHECK(text.find("raw=") != std::string::npos);
}

TEST_CASE("syscall entries interleave with records by timestamp") {
  const std::string capture =
      R"({"kind":"syscall","ts_ns":30,"pid":7,"tgid":7,"syscall":"openat","args":[-100,"0x1000",0,0],"ret":3})"
      "\n" +
      txn_line(20, 5, oracle::golden_sms_buffer()) +
      R"({"kind":"syscall","ts_ns":10,"pid":7,"nr":57,"args":[3],"ret":0})"
      "\n";
  const auto log = decode_capture(capture, sample_table());
  REQUIRE(log.entries.size() == 3);
  CHECK(entry_timestamp(log.entries[0]) == 10);
  CHECK(entry_timestamp(log.entries[1]) == 20);
  CHECK(entry_timestamp(log.entries[2]) == 30);
  CHECK(log.summary.syscalls == 2);
  const auto& close = std::get<SyscallEntry>(log.entries[0]);
  CHECK(close.name == "close");
  CHECK(render_text(close) == "ts=10  pid=7  tgid=7  close(0x3) = 0\n");
  const auto json = nlohmann::json::parse(render_json(std::get<SyscallEntry>(log.entries[2])));
  CHECK(json["syscall"] == "openat");
  CHECK(json["args"][0] == 0xffffffffffffff9cULL);  // raw register value
}

}  // TEST_SUITE
