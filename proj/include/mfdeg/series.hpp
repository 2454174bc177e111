#pragma once

// Truncated formal power series with exact rational exponents and
// coefficients. Used for the generating functions whose exponents enumerate
// the critical parameter values and whose coefficients are degrees.

#include <gmpxx.h>

#include <map>
#include <string>

namespace mfdeg::series {

using Rational = mpq_class;
using Integer = mpz_class;

/// Parse "3", "-2", "3/2" or "1.25" into an exact rational.
/// Throws InputError on anything else.
Rational parse_rational(const std::string& text);

std::string to_string(const Rational& q);

class FormalSeries {
 public:
  /// The zero series truncated at `truncation_order` (must be > 0).
  explicit FormalSeries(Rational truncation_order);

  static FormalSeries monomial(const Rational& coefficient,
                               const Rational& exponent,
                               const Rational& truncation_order);

  const std::map<Rational, Rational>& terms() const { return terms_; }
  const Rational& truncation_order() const { return order_; }

  /// Coefficient of x^exponent (zero when absent or truncated away).
  Rational coefficient(const Rational& exponent) const;

  bool is_zero() const { return terms_.empty(); }

  /// Adds c * x^e; drops the term when e >= truncation order.
  void add_term(const Rational& exponent, const Rational& coefficient);

  FormalSeries operator+(const FormalSeries& other) const;
  FormalSeries operator*(const FormalSeries& other) const;
  bool operator==(const FormalSeries& other) const;

  std::string to_string() const;

 private:
  std::map<Rational, Rational> terms_;
  Rational order_;
};

/// Cauchy product; throws InputError on mismatched truncation orders.
FormalSeries mul(const FormalSeries& a, const FormalSeries& b);

/// (1 + x + x^2 + ...)^m = (1 - x)^(-m), for any integer m.
FormalSeries geometric_power(long m, const Rational& order);

/// 1 - x^(1 + alpha).
FormalSeries singular_factor(const Rational& alpha, const Rational& order);

/// Generalised binomial coefficient binom(top, k) for integer top, k >= 0.
Integer binomial(long top, long k);

}  // namespace mfdeg::series
