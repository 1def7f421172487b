#include <cmath>

#include <doctest.h>

#include "seu/errors.hpp"
#include "seu/expr.hpp"

using namespace seu;

TEST_CASE("arithmetic with the usual precedence") {
  CHECK(Expr::parse("1 + 2 * 3", 2).eval({0, 0}) == doctest::Approx(7.0));
  CHECK(Expr::parse("(1 + 2) * 3", 2).eval({0, 0}) == doctest::Approx(9.0));
  CHECK(Expr::parse("2 - 3 - 4", 2).eval({0, 0}) == doctest::Approx(-5.0));
  CHECK(Expr::parse("12 / 4 / 3", 2).eval({0, 0}) == doctest::Approx(1.0));
  CHECK(Expr::parse("-x1 + +x2", 2).eval({3.0, 5.0}) == doctest::Approx(2.0));
  CHECK(Expr::parse("1e-3 + 0.5", 2).eval({0, 0}) == doctest::Approx(0.501));
}

TEST_CASE("variables and sqrt") {
  CHECK(Expr::parse("sqrt(x1)", 2).eval({0.81, 0.0}) == doctest::Approx(0.9));
  CHECK(Expr::parse("sqrt(x1 * x2)", 2).eval({2.0, 8.0}) == doctest::Approx(4.0));
  CHECK(Expr::parse("x3", 3).eval({0, 0, 42.0}) == doctest::Approx(42.0));
  // sqrt evaluates via std::sqrt, bit for bit
  CHECK(Expr::parse("sqrt(x1)", 1 + 1).eval({0.37, 0}) == std::sqrt(0.37));
}

TEST_CASE("expression lists") {
  auto list = Expr::parse_list("sqrt(x1), sqrt(x2)", 2);
  REQUIRE(list.size() == 2);
  CHECK(list[0].eval({0.25, 0.49}) == doctest::Approx(0.5));
  CHECK(list[1].eval({0.25, 0.49}) == doctest::Approx(0.7));

  auto rpw = Expr::parse_list("(1-x2)/((1-x1)+(1-x2)), (1-x1)/((1-x1)+(1-x2))", 2);
  REQUIRE(rpw.size() == 2);
  CHECK(rpw[0].eval({0.7, 0.5}) == doctest::Approx(0.625));
  CHECK(rpw[1].eval({0.7, 0.5}) == doctest::Approx(0.375));
}

TEST_CASE("malformed input fails with a position") {
  CHECK_THROWS_AS(Expr::parse("1 +", 2), ConfigError);
  CHECK_THROWS_AS(Expr::parse("(1 + 2", 2), ConfigError);
  CHECK_THROWS_AS(Expr::parse("foo(x1)", 2), ConfigError);
  CHECK_THROWS_AS(Expr::parse("x3", 2), ConfigError);  // out of range for K=2
  CHECK_THROWS_AS(Expr::parse("1 2", 2), ConfigError);
  CHECK_THROWS_AS(Expr::parse("sqrt x1", 2), ConfigError);
  try {
    Expr::parse("1 + $", 2);
    FAIL("expected a throw");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("position 5") != std::string::npos);
  }
}
