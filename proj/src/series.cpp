#include "mfdeg/series.hpp"

#include <cctype>
#include <sstream>

#include "mfdeg/errors.hpp"

namespace mfdeg::series {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace

Rational parse_rational(const std::string& raw) {
  std::string text;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  if (text.empty()) throw InputError("empty rational");

  bool negative = false;
  std::string body = text;
  if (body.front() == '-' || body.front() == '+') {
    negative = body.front() == '-';
    body.erase(body.begin());
  }

  Rational value;
  if (auto slash = body.find('/'); slash != std::string::npos) {
    const std::string num = body.substr(0, slash);
    const std::string den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den))
      throw InputError("malformed rational: " + raw);
    Integer d(den);
    if (d == 0) throw InputError("zero denominator: " + raw);
    value = Rational(Integer(num), d);
  } else if (auto dot = body.find('.'); dot != std::string::npos) {
    std::string whole = body.substr(0, dot);
    std::string frac = body.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (!all_digits(whole) || (!frac.empty() && !all_digits(frac)))
      throw InputError("malformed rational: " + raw);
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
    Integer num(whole + (frac.empty() ? "" : frac));
    value = Rational(num, scale);
  } else {
    if (!all_digits(body)) throw InputError("malformed rational: " + raw);
    value = Rational(Integer(body));
  }
  value.canonicalize();
  return negative ? Rational(-value) : value;
}

std::string to_string(const Rational& q) { return q.get_str(); }

FormalSeries::FormalSeries(Rational truncation_order)
    : order_(std::move(truncation_order)) {
  if (order_ <= 0) throw InputError("truncation order must be positive");
}

FormalSeries FormalSeries::monomial(const Rational& coefficient,
                                    const Rational& exponent,
                                    const Rational& truncation_order) {
  FormalSeries s(truncation_order);
  s.add_term(exponent, coefficient);
  return s;
}

Rational FormalSeries::coefficient(const Rational& exponent) const {
  auto it = terms_.find(exponent);
  return it == terms_.end() ? Rational(0) : it->second;
}

void FormalSeries::add_term(const Rational& exponent,
                            const Rational& coefficient) {
  if (exponent < 0) throw InputError("negative exponent");
  if (exponent >= order_ || coefficient == 0) return;
  auto [it, inserted] = terms_.try_emplace(exponent, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0) terms_.erase(it);
  }
}

FormalSeries FormalSeries::operator+(const FormalSeries& other) const {
  if (order_ != other.order_)
    throw InputError("series truncation orders differ");
  FormalSeries out = *this;
  for (const auto& [e, c] : other.terms_) out.add_term(e, c);
  return out;
}

FormalSeries FormalSeries::operator*(const FormalSeries& other) const {
  return mul(*this, other);
}

bool FormalSeries::operator==(const FormalSeries& other) const {
  return order_ == other.order_ && terms_ == other.terms_;
}

std::string FormalSeries::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    Rational mag = abs(c);
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    const bool unit = (mag == 1);
    if (e == 0) {
      os << mag.get_str();
      continue;
    }
    if (!unit) os << mag.get_str() << "*";
    os << "x";
    if (e != 1) os << "^" << e.get_str();
  }
  return os.str();
}

FormalSeries mul(const FormalSeries& a, const FormalSeries& b) {
  if (a.truncation_order() != b.truncation_order())
    throw InputError("series truncation orders differ");
  FormalSeries out(a.truncation_order());
  for (const auto& [ea, ca] : a.terms()) {
    for (const auto& [eb, cb] : b.terms()) {
      Rational e = ea + eb;
      if (e >= out.truncation_order()) break;  // eb increasing
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

Integer binomial(long top, long k) {
  if (k < 0) return 0;
  Integer num = 1;
  for (long j = 0; j < k; ++j) num *= (top - j);
  Integer den;
  mpz_fac_ui(den.get_mpz_t(), static_cast<unsigned long>(k));
  Integer out;
  mpz_divexact(out.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return out;
}

FormalSeries geometric_power(long m, const Rational& order) {
  FormalSeries out(order);
  // coefficient of x^k in (1-x)^(-m) is binom(k+m-1, k) for every integer m
  for (long k = 0; Rational(k) < order; ++k)
    out.add_term(Rational(k), Rational(binomial(k + m - 1, k)));
  return out;
}

FormalSeries singular_factor(const Rational& alpha, const Rational& order) {
  if (alpha < 0) throw InputError("singular weight must be non-negative");
  FormalSeries out(order);
  out.add_term(Rational(0), Rational(1));
  out.add_term(Rational(alpha + 1), Rational(-1));
  return out;
}

}  // namespace mfdeg::series
