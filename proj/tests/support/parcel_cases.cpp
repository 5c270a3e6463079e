#include "parcel_cases.hpp"

#include <cstring>

#include "oracles.hpp"

namespace oracle {

namespace dp = droidaudit::parcel;

namespace {

constexpr std::uint32_t tag(char a, char b, char c) {
  return (static_cast<std::uint32_t>(a) << 24) | (static_cast<std::uint32_t>(b) << 16) |
         (static_cast<std::uint32_t>(c) << 8) | 0x85;
}
constexpr std::uint32_t kObjectTags[] = {tag('s', 'b', '*'), tag('w', 'b', '*'), tag('s', 'h', '*'),
                                         tag('w', 'h', '*')};
constexpr const char* kObjectClasses[] = {"PendingIntent", "Intent", "ComponentName",
                                          "android.os.Messenger", "IntentSender"};

std::u16string random_text(std::mt19937_64& rng) {
  std::u16string s;
  const auto len = rng() % 24;
  while (s.size() < len) {
    switch (rng() % 4) {
      case 0:  // supplementary plane, as a surrogate pair
      {
        const std::uint32_t cp = 0x10000 + static_cast<std::uint32_t>(rng() % 0xfffff);
        s += static_cast<char16_t>(0xd800 + ((cp - 0x10000) >> 10));
        s += static_cast<char16_t>(0xdc00 + ((cp - 0x10000) & 0x3ff));
        break;
      }
      case 1:  // BMP outside the surrogate range
      {
        auto unit = static_cast<char16_t>(0x80 + rng() % (0xd800 - 0x80));
        s += unit;
        break;
      }
      default:
        s += static_cast<char16_t>(0x20 + rng() % 0x5f);
    }
  }
  return s;
}

std::string random_name(std::mt19937_64& rng) {
  std::string n = "p";
  for (int i = 0, len = 1 + static_cast<int>(rng() % 10); i < len; ++i) {
    n += static_cast<char>('a' + rng() % 26);
  }
  return n;
}

dp::FlatBinderObject random_object(std::mt19937_64& rng, bool footer) {
  dp::FlatBinderObject obj;
  obj.type_tag = kObjectTags[rng() % 4];
  obj.flags = static_cast<std::uint32_t>(rng());
  obj.handle_or_ptr = rng();
  obj.cookie = rng() % 3 ? 0 : rng();
  if (footer) obj.stability = static_cast<std::uint32_t>(rng() % 64);
  return obj;
}

}  // namespace

ParcelCase random_parcel_case(std::mt19937_64& rng) {
  ParcelCase c;
  c.stability_footer = rng() % 4 != 0;
  const auto token = random_text(rng) + u".I" + static_cast<char16_t>(u'A' + rng() % 26);
  c.signature.interface_token = utf16_to_utf8(token);
  c.signature.code = 1 + static_cast<std::uint32_t>(rng() % 200);
  c.signature.method_name = random_name(rng);

  ParcelWriter w;
  w.header(token);
  const auto params = rng() % 12;
  for (std::size_t i = 0; i < params; ++i) {
    droidaudit::sigtable::Param p;
    p.name = random_name(rng) + std::to_string(i);
    const char* type = nullptr;
    switch (rng() % 7) {
      case 0: {
        type = "int";
        const auto v = static_cast<std::int32_t>(rng());
        w.i32(v);
        c.values.emplace_back(dp::IntValue{v, 32});
        break;
      }
      case 1: {
        type = "boolean";
        const bool v = rng() % 2;
        w.boolean(v);
        c.values.emplace_back(v);
        break;
      }
      case 2: {
        type = "long";
        const auto v = static_cast<std::int64_t>(rng());
        w.i64(v);
        c.values.emplace_back(dp::IntValue{v, 64});
        break;
      }
      case 3: {
        type = "double";
        // Any sign and mantissa, exponent below all-ones: finite, never NaN.
        const std::uint64_t bits =
            (rng() & ~(std::uint64_t{0x7ff} << 52)) | (std::uint64_t{rng() % 0x7ff} << 52);
        double v;
        std::memcpy(&v, &bits, 8);
        w.f64(v);
        c.values.emplace_back(v);
        break;
      }
      case 4: {
        type = "String";
        if (rng() % 4 == 0) {
          w.string16(std::nullopt);
          c.values.emplace_back(std::optional<std::string>{});
        } else {
          const auto s = random_text(rng);
          w.string16(s);
          c.values.emplace_back(std::optional<std::string>{utf16_to_utf8(s)});
        }
        break;
      }
      case 5: {
        type = "IBinder";
        const auto obj = random_object(rng, c.stability_footer);
        w.flat_object(obj.type_tag, obj.flags, obj.handle_or_ptr, obj.cookie, obj.stability);
        c.values.emplace_back(obj);
        break;
      }
      default: {
        type = kObjectClasses[rng() % std::size(kObjectClasses)];
        if (rng() % 3 == 0) {
          w.null_marker();
          c.values.emplace_back(dp::NullObject{});
        } else {
          const auto obj = random_object(rng, c.stability_footer);
          w.present_marker();
          w.flat_object(obj.type_tag, obj.flags, obj.handle_or_ptr, obj.cookie, obj.stability);
          c.values.emplace_back(obj);
        }
      }
    }
    p.type = droidaudit::parse_type_name(type);
    c.signature.params.push_back(std::move(p));
  }
  c.buffer = w.bytes();
  return c;
}

bool same_value(const dp::DecodedValue& a, const dp::DecodedValue& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    return std::memcmp(x, &y, sizeof y) == 0;
  }
  return a == b;
}

}  // namespace oracle
