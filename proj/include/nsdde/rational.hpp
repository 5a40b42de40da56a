#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "nsdde/errors.hpp"

namespace nsdde {

// Exact rational arithmetic for delay/horizon/step bookkeeping, so that the
// grid compatibility "delta = T/M = tau/m" is checked without floating-point
// drift. Always normalized: den > 0, gcd(num, den) == 1.
struct Rational {
  std::int64_t num{0};
  std::int64_t den{1};

  constexpr Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw SchemaError("rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num * b.den < b.num * a.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }

  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num * b.num, a.den * b.den);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num == 0) throw SchemaError("rational division by zero");
    return Rational(a.num * b.den, a.den * b.num);
  }

  // a/b when the quotient is an integer; nullopt-like via the bool.
  struct IntQuotient {
    bool exact{false};
    std::int64_t value{0};
  };
  static IntQuotient divide_exact(const Rational& a, const Rational& b) {
    const Rational q = a / b;
    if (q.den != 1) return {};
    return {true, q.num};
  }

  bool is_dyadic() const { return (den & (den - 1)) == 0; }

  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

// Accepts "p/q", plain integers, and decimal literals. Decimal literals must
// reduce to a dyadic rational (denominator a power of two) so the value is
// exactly representable; anything else must be written as a ratio.
Rational parse_rational(std::string_view text);

}  // namespace nsdde
