#include "droidaudit/sigtable.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "droidaudit/error.hpp"
#include "embedded_data.hpp"

namespace droidaudit::sigtable {

using nlohmann::json;

void SignatureTable::insert(MethodSignature sig) {
  Key key{sig.interface_token, sig.code};
  if (entries_.contains(key)) {
    throw Error(ErrorCode::DuplicateEntry,
                sig.interface_token + " code " + std::to_string(sig.code) + " already present");
  }
  entries_.emplace(std::move(key), std::move(sig));
}

const MethodSignature* SignatureTable::lookup(std::string_view token, std::uint32_t code) const {
  auto it = entries_.find(Key{std::string(token), code});
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    parse_fail(line, std::string("missing string field '") + field + "'");
  }
  return it->get<std::string>();
}

MethodSignature parse_entry(const json& rec, std::size_t line) {
  MethodSignature sig;
  sig.interface_token = require_string(rec, "iface", line);
  auto code = rec.find("code");
  if (code == rec.end() || !code->is_number_integer()) {
    parse_fail(line, "missing integer field 'code'");
  }
  const auto value = code->get<std::int64_t>();
  if (value < 1 || value > 0xffffffffLL) {
    parse_fail(line, "code " + std::to_string(value) + " out of range (codes start at 1)");
  }
  sig.code = static_cast<std::uint32_t>(value);
  sig.method_name = require_string(rec, "name", line);
  auto params = rec.find("params");
  if (params == rec.end() || !params->is_array()) {
    parse_fail(line, "missing array field 'params'");
  }
  for (const auto& p : *params) {
    if (!p.is_object()) parse_fail(line, "param is not an object");
    Param param;
    param.name = require_string(p, "name", line);
    param.type = parse_type_name(require_string(p, "type", line));
    sig.params.push_back(std::move(param));
  }
  return sig;
}

}  // namespace

SignatureTable parse_table(std::string_view text) {
  SignatureTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool seen_entry = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(line_no, std::string("invalid JSON at byte ") + std::to_string(e.byte));
    }
    if (!rec.is_object()) parse_fail(line_no, "record is not an object");
    if (auto meta = rec.find("meta"); meta != rec.end()) {
      if (seen_entry || !table.metadata.empty()) {
        parse_fail(line_no, "metadata record must be the first record");
      }
      if (!meta->is_object()) parse_fail(line_no, "'meta' is not an object");
      table.metadata.device = meta->value("device", "");
      table.metadata.fingerprint = meta->value("fingerprint", "");
      table.metadata.date = meta->value("date", "");
      continue;
    }
    seen_entry = true;
    try {
      table.insert(parse_entry(rec, line_no));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DuplicateEntry) {
        throw Error(ErrorCode::DuplicateEntry, "line " + std::to_string(line_no) + ": " +
                                                   rec.value("iface", "") + " code " +
                                                   std::to_string(rec.value("code", 0)));
      }
      throw;
    }
  }
  return table;
}

SignatureTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str());
}

std::string serialize_table(const SignatureTable& table) {
  std::string out;
  if (!table.metadata.empty()) {
    json meta = {{"meta",
                  {{"device", table.metadata.device},
                   {"fingerprint", table.metadata.fingerprint},
                   {"date", table.metadata.date}}}};
    out += meta.dump() + "\n";
  }
  for (const auto& [key, sig] : table.entries()) {
    json params = json::array();
    for (const auto& p : sig.params) params.push_back({{"name", p.name}, {"type", p.type.name}});
    json rec = {{"iface", sig.interface_token},
                {"code", sig.code},
                {"name", sig.method_name},
                {"params", std::move(params)}};
    out += rec.dump() + "\n";
  }
  return out;
}

void save_table(const SignatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  out << serialize_table(table);
}

std::string_view to_string(Diagnostic::Kind kind) noexcept {
  switch (kind) {
    case Diagnostic::Kind::Unsupported: return "Unsupported";
    case Diagnostic::Kind::EmptyName: return "EmptyName";
    case Diagnostic::Kind::CodeGap: return "CodeGap";
  }
  return "Unknown";
}

std::vector<Diagnostic> validate_table(const SignatureTable& table) {
  std::vector<Diagnostic> out;
  std::map<std::string, std::set<std::uint32_t>> codes;
  for (const auto& [key, sig] : table.entries()) {
    codes[sig.interface_token].insert(sig.code);
    if (sig.method_name.empty()) {
      out.push_back({Diagnostic::Kind::EmptyName, sig.interface_token, sig.code, "empty method name"});
    }
    for (const auto& p : sig.params) {
      if (p.type.kind == ArgKind::Unsupported) {
        out.push_back({Diagnostic::Kind::Unsupported, sig.interface_token, sig.code,
                       "parameter '" + p.name + "' has unsupported type '" + p.type.name + "'"});
      }
    }
  }
  for (const auto& [token, set] : codes) {
    std::uint32_t expected = *set.begin();
    for (auto code : set) {
      if (code > expected) {
        out.push_back({Diagnostic::Kind::CodeGap, token, expected,
                       "no entries for codes " + std::to_string(expected) + "-" +
                           std::to_string(code - 1)});
      }
      expected = code + 1;
    }
  }
  return out;
}

std::string_view sample_table_text() { return embedded::kSampleTable; }

}  // namespace droidaudit::sigtable
