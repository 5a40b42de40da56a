#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdde/rational.hpp"

using nsdde::parse_rational;
using nsdde::Rational;

TEST_CASE("ratio and integer literals parse exactly") {
  CHECK(parse_rational("1/3") == Rational(1, 3));
  CHECK(parse_rational("2/6") == Rational(1, 3));
  CHECK(parse_rational("2") == Rational(2, 1));
  CHECK(parse_rational("-3/4") == Rational(-3, 4));
}

TEST_CASE("dyadic decimals are accepted, others rejected") {
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("0.5") == Rational(1, 2));
  CHECK(parse_rational("1.5") == Rational(3, 2));
  CHECK_THROWS_AS(parse_rational("0.3"), nsdde::SchemaError);
  CHECK_THROWS_AS(parse_rational("0.1"), nsdde::SchemaError);
  CHECK_THROWS_AS(parse_rational("abc"), nsdde::SchemaError);
  CHECK_THROWS_AS(parse_rational("1/0"), nsdde::SchemaError);
}

TEST_CASE("exact divisibility drives the grid bookkeeping") {
  const Rational tau(1, 1);
  const Rational horizon(2, 1);

  SUBCASE("tau = 1, delta = 1/3 gives m = 3 and M = 6") {
    const Rational delta(1, 3);
    const auto m = Rational::divide_exact(tau, delta);
    const auto M = Rational::divide_exact(horizon, delta);
    CHECK(m.exact);
    CHECK(m.value == 3);
    CHECK(M.exact);
    CHECK(M.value == 6);
  }

  SUBCASE("non-divisible steps are flagged") {
    const auto q = Rational::divide_exact(tau, Rational(3, 10));
    CHECK_FALSE(q.exact);
  }
}

TEST_CASE("string form round-trips") {
  CHECK(parse_rational(Rational(5, 8).str()) == Rational(5, 8));
  CHECK(parse_rational(Rational(7, 1).str()) == Rational(7, 1));
  CHECK(Rational(1, 3).str() == "1/3");
}

TEST_CASE("ordering and arithmetic") {
  CHECK(Rational(1, 4) < Rational(1, 3));
  CHECK(Rational(1, 2) * Rational(2, 3) == Rational(1, 3));
  CHECK(Rational(1, 2) / Rational(1, 8) == Rational(4, 1));
  CHECK(Rational(1, 8).is_dyadic());
  CHECK_FALSE(Rational(1, 12).is_dyadic());
}
