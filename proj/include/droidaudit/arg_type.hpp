#pragma once

#include <string>
#include <string_view>

namespace droidaudit {

enum class ArgKind {
  Int,
  Boolean,
  Double,
  Long,
  String16,
  StrongBinder,
  TypedObject,
  Unsupported,
};

struct ArgType {
  ArgKind kind = ArgKind::Unsupported;
  std::string name;  // type name as written in the signature table

  bool operator==(const ArgType&) const = default;
};

// "int", "boolean", "long", "double", "String" -> primitives/strings; "IBinder" -> StrongBinder;
// any other plain Java identifier (optionally dotted) -> TypedObject; anything else
// (arrays, generics, empty) -> Unsupported.
ArgType parse_type_name(std::string_view name);

std::string_view to_string(ArgKind kind) noexcept;

}  // namespace droidaudit
