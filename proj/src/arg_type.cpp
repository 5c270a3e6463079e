#include "droidaudit/arg_type.hpp"

#include <cctype>

namespace droidaudit {

namespace {
bool is_java_identifier(std::string_view name) {
  if (name.empty()) return false;
  bool segment_start = true;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '.' || c == '$') {
      if (segment_start) return false;
      segment_start = true;
      continue;
    }
    if (segment_start ? !(std::isalpha(u) || c == '_') : !(std::isalnum(u) || c == '_')) {
      return false;
    }
    segment_start = false;
  }
  return !segment_start;
}
}  // namespace

ArgType parse_type_name(std::string_view name) {
  ArgType t;
  t.name = std::string(name);
  if (name == "int") {
    t.kind = ArgKind::Int;
  } else if (name == "boolean") {
    t.kind = ArgKind::Boolean;
  } else if (name == "long") {
    t.kind = ArgKind::Long;
  } else if (name == "double") {
    t.kind = ArgKind::Double;
  } else if (name == "String" || name == "java.lang.String") {
    t.kind = ArgKind::String16;
  } else if (name == "IBinder" || name == "android.os.IBinder") {
    t.kind = ArgKind::StrongBinder;
  } else if (name == "Bundle" || name == "android.os.Bundle" || name == "ParcelFileDescriptor" ||
             name == "android.os.ParcelFileDescriptor" || name == "FileDescriptor" ||
             name == "byte" || name == "char" || name == "short" || name == "float") {
    // Parcelable interiors, fd-carrying objects and sub-word primitives are not decoded.
    t.kind = ArgKind::Unsupported;
  } else if (is_java_identifier(name)) {
    t.kind = ArgKind::TypedObject;
  } else {
    t.kind = ArgKind::Unsupported;
  }
  return t;
}

std::string_view to_string(ArgKind kind) noexcept {
  switch (kind) {
    case ArgKind::Int: return "Int";
    case ArgKind::Boolean: return "Boolean";
    case ArgKind::Double: return "Double";
    case ArgKind::Long: return "Long";
    case ArgKind::String16: return "String16";
    case ArgKind::StrongBinder: return "StrongBinder";
    case ArgKind::TypedObject: return "TypedObject";
    case ArgKind::Unsupported: return "Unsupported";
  }
  return "Unsupported";
}

}  // namespace droidaudit
