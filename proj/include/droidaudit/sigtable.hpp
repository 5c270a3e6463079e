#pragma once

// Method-signature table: (interface token, transaction code) -> method name
// and ordered parameter types, as dumped on-device by a reflection tool.
//
// File format: newline-delimited JSON. An optional first record
//   {"meta": {"device": ..., "fingerprint": ..., "date": ...}}
// followed by one record per method
//   {"iface": "...", "code": 5, "name": "...", "params": [{"name": "...", "type": "..."}]}
// Blank lines are ignored.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "droidaudit/arg_type.hpp"

namespace droidaudit::sigtable {

struct Param {
  std::string name;
  ArgType type;

  bool operator==(const Param&) const = default;
};

struct MethodSignature {
  std::string interface_token;
  std::uint32_t code = 0;
  std::string method_name;
  std::vector<Param> params;

  bool operator==(const MethodSignature&) const = default;
};

struct Metadata {
  std::string device;
  std::string fingerprint;
  std::string date;

  bool empty() const { return device.empty() && fingerprint.empty() && date.empty(); }
  bool operator==(const Metadata&) const = default;
};

class SignatureTable {
 public:
  using Key = std::pair<std::string, std::uint32_t>;

  // Throws DuplicateEntry if (token, code) is already present.
  void insert(MethodSignature sig);

  // nullptr when absent.
  const MethodSignature* lookup(std::string_view token, std::uint32_t code) const;

  const std::map<Key, MethodSignature>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  Metadata metadata;

 private:
  std::map<Key, MethodSignature> entries_;
};

SignatureTable parse_table(std::string_view text);
SignatureTable load_table(const std::filesystem::path& path);

std::string serialize_table(const SignatureTable& table);
void save_table(const SignatureTable& table, const std::filesystem::path& path);

struct Diagnostic {
  enum class Kind { Unsupported, EmptyName, CodeGap };
  Kind kind;
  std::string interface_token;
  std::uint32_t code = 0;
  std::string message;
};

std::string_view to_string(Diagnostic::Kind kind) noexcept;

// Informational: unsupported parameter types, empty method names, and codes
// missing between the lowest and highest code of an interface.
std::vector<Diagnostic> validate_table(const SignatureTable& table);

// The shipped sample table (ISms.sendTextForSubscriber).
std::string_view sample_table_text();

}  // namespace droidaudit::sigtable
