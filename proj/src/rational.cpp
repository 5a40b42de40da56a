#include "nsdde/rational.hpp"

#include <cctype>
#include <charconv>

namespace nsdde {

namespace {

std::int64_t parse_int(std::string_view text, std::string_view context) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw SchemaError("invalid integer '" + std::string(text) + "' in " + std::string(context));
  }
  return out;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw SchemaError("empty rational literal");

  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const std::int64_t num = parse_int(text.substr(0, slash), "rational numerator");
    const std::int64_t den = parse_int(text.substr(slash + 1), "rational denominator");
    if (den == 0) throw SchemaError("rational '" + std::string(text) + "' has zero denominator");
    return Rational(num, den);
  }

  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view whole = text.substr(0, dot);
    const std::string_view frac = text.substr(dot + 1);
    if (frac.empty()) throw SchemaError("trailing '.' in rational '" + std::string(text) + "'");
    bool negative = !whole.empty() && whole.front() == '-';
    std::int64_t w = whole.empty() || whole == "-" ? 0 : parse_int(whole, "rational whole part");
    if (w < 0) w = -w;
    std::int64_t scale = 1;
    for (char c : frac) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw SchemaError("invalid decimal '" + std::string(text) + "'");
      }
      if (scale > 1000000000000000LL) {
        throw SchemaError("decimal '" + std::string(text) + "' has too many digits");
      }
      scale *= 10;
    }
    const std::int64_t f = parse_int(frac, "rational fractional part");
    std::int64_t num = w * scale + f;
    if (negative) num = -num;
    Rational r(num, scale);
    if (!r.is_dyadic()) {
      throw SchemaError("decimal '" + std::string(text) +
                        "' is not exactly dyadic; write it as a ratio p/q");
    }
    return r;
  }

  return Rational(parse_int(text, "rational"), 1);
}

}  // namespace nsdde
