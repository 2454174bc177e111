#include <doctest.h>

#include <random>

#include "mfdeg/errors.hpp"
#include "mfdeg/series.hpp"

using namespace mfdeg::series;

namespace {

FormalSeries poly(std::initializer_list<std::pair<const char*, const char*>> terms,
                  const Rational& order) {
  FormalSeries s(order);
  for (auto [e, c] : terms) s.add_term(parse_rational(e), parse_rational(c));
  return s;
}

}  // namespace

TEST_CASE("parse_rational accepts fractions, decimals, integers") {
  CHECK(parse_rational("3/2") == Rational(3, 2));
  CHECK(parse_rational("-4/6") == Rational(-2, 3));
  CHECK(parse_rational("1.25") == Rational(5, 4));
  CHECK(parse_rational(".5") == Rational(1, 2));
  CHECK(parse_rational("+7") == Rational(7));
  CHECK_THROWS_AS(parse_rational("1/0"), mfdeg::InputError);
  CHECK_THROWS_AS(parse_rational("abc"), mfdeg::InputError);
  CHECK_THROWS_AS(parse_rational(""), mfdeg::InputError);
}

TEST_CASE("geometric_power examples") {
  CHECK(geometric_power(-1, 5) == poly({{"0", "1"}, {"1", "-1"}}, 5));
  CHECK(geometric_power(1, 4) ==
        poly({{"0", "1"}, {"1", "1"}, {"2", "1"}, {"3", "1"}}, 4));
  CHECK(geometric_power(2, 4) ==
        poly({{"0", "1"}, {"1", "2"}, {"2", "3"}, {"3", "4"}}, 4));
  CHECK(geometric_power(0, 3) == poly({{"0", "1"}}, 3));
  // (1-x)^3
  CHECK(geometric_power(-3, 10) ==
        poly({{"0", "1"}, {"1", "-3"}, {"2", "3"}, {"3", "-1"}}, 10));
}

TEST_CASE("mul examples") {
  auto a = poly({{"0", "1"}, {"1", "-1"}}, 4);
  auto b = geometric_power(1, 4);
  CHECK(mul(a, b) == poly({{"0", "1"}}, 4));

  auto c = poly({{"0", "1"}, {"3/2", "1"}}, 4);
  CHECK(mul(c, c) == poly({{"0", "1"}, {"3/2", "2"}, {"3", "1"}}, 4));
  CHECK(mul(FormalSeries(4), c).is_zero());
  CHECK_THROWS_AS(mul(FormalSeries(4), FormalSeries(5)), mfdeg::InputError);
}

TEST_CASE("singular_factor examples") {
  CHECK(singular_factor(2, 10) == poly({{"0", "1"}, {"3", "-1"}}, 10));
  CHECK(singular_factor(0, 10) == poly({{"0", "1"}, {"1", "-1"}}, 10));
  CHECK(singular_factor(Rational(1, 2), 10) ==
        poly({{"0", "1"}, {"3/2", "-1"}}, 10));
  CHECK(singular_factor(5, 3) == poly({{"0", "1"}}, 3));
  CHECK_THROWS_AS(singular_factor(-1, 3), mfdeg::InputError);
}

TEST_CASE("invariants: sorted exponents, no zeros, below order") {
  FormalSeries s(3);
  s.add_term(1, 2);
  s.add_term(1, -2);
  s.add_term(3, 1);
  s.add_term(Rational(1, 3), 5);
  CHECK(s.terms().size() == 1);
  CHECK(s.coefficient(Rational(1, 3)) == 5);
  CHECK(s.to_string() == "5*x^1/3");
}

TEST_CASE("mul matches brute-force convolution on random integer polynomials") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> coef(-9, 9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<long> a(21), b(21);
    for (auto& v : a) v = coef(rng);
    for (auto& v : b) v = coef(rng);
    const Rational order(30);
    FormalSeries sa(order), sb(order);
    for (int i = 0; i <= 20; ++i) {
      sa.add_term(i, a[i]);
      sb.add_term(i, b[i]);
    }
    std::vector<long> conv(41, 0);
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) conv[i + j] += a[i] * b[j];
    const FormalSeries prod = mul(sa, sb);
    for (int k = 0; k < 30; ++k) CHECK(prod.coefficient(k) == conv[k]);
    CHECK(prod.coefficient(30) == 0);
  }
}

TEST_CASE("geometric powers of opposite sign are inverse") {
  for (long m = -6; m <= 6; ++m) {
    const Rational order(25);
    auto p = mul(geometric_power(m, order), geometric_power(-m, order));
    CHECK(p == poly({{"0", "1"}}, order));
  }
}

TEST_CASE("large coefficients do not overflow") {
  // (1-x)^(-9) at k = 40 is binom(48, 8)
  auto s = geometric_power(9, 41);
  CHECK(s.coefficient(40) == Rational(Integer("377348994")));
  CHECK(binomial(-3, 4) == 15);
}
