#include "mfdeg/degree.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "mfdeg/errors.hpp"

namespace mfdeg::degree {

using series::FormalSeries;

namespace {

bool is_integer(const Rational& q) { return q.get_den() == 1; }

long floor_to_long(const Rational& q) {
  Integer f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return f.get_si();
}

}  // namespace

SurfaceTopology::SurfaceTopology(long euler_char) : chi_(euler_char) {
  if (euler_char > 2 || euler_char % 2 != 0)
    throw InputError("Euler characteristic must be even and <= 2, got " +
                     std::to_string(euler_char));
}

SingularSet::SingularSet(std::vector<Rational> weights)
    : weights_(std::move(weights)) {
  for (const auto& a : weights_)
    if (a < 0) throw InputError("singular weights must be >= 0");
}

std::vector<Rational> critical_set(const SurfaceTopology& /*topo*/,
                                   const SingularSet& sing,
                                   const Rational& bound) {
  if (bound <= 0) throw InputError("critical_set bound must be positive");
  // subset sums of (1 + alpha_q), pruned at the bound
  std::set<Rational> sums{Rational(0)};
  for (const auto& alpha : sing.weights()) {
    std::vector<Rational> extended;
    for (const auto& s : sums) {
      Rational t = s + alpha + 1;
      if (t <= bound) extended.push_back(t);
    }
    sums.insert(extended.begin(), extended.end());
  }
  std::set<Rational> out;
  for (const auto& s : sums)
    for (Rational v = s; v <= bound; v += 1)
      if (v != 0) out.insert(v);
  return {out.begin(), out.end()};
}

Integer b_coeff(const SurfaceTopology& topo, long k) {
  if (k < 0) return 0;
  return series::binomial(k - topo.euler_char(), k);
}

FormalSeries modified_generating_function(const SurfaceTopology& topo,
                                          const SingularSet& sing,
                                          const Rational& order) {
  const long m = -topo.euler_char() + 1 + static_cast<long>(sing.size());
  FormalSeries xi = series::geometric_power(m, order);
  for (const auto& alpha : sing.weights())
    xi = series::mul(xi, series::singular_factor(alpha, order));
  return xi;
}

DegreeResult degree_singular(const Rational& rho_over_8pi,
                             const SurfaceTopology& topo,
                             const SingularSet& sing) {
  if (rho_over_8pi <= 0) throw InputError("rho must be positive");
  const Rational order = rho_over_8pi + 1;
  const auto sigma = critical_set(topo, sing, order);

  DegreeResult result;
  if (std::binary_search(sigma.begin(), sigma.end(), rho_over_8pi)) {
    result.critical = true;
    result.interval_index = static_cast<std::size_t>(
        std::lower_bound(sigma.begin(), sigma.end(), rho_over_8pi) -
        sigma.begin());
    return result;
  }
  const auto k = static_cast<std::size_t>(
      std::lower_bound(sigma.begin(), sigma.end(), rho_over_8pi) -
      sigma.begin());
  const Rational left = k == 0 ? Rational(0) : sigma[k - 1];
  const FormalSeries xi = modified_generating_function(topo, sing, order);
  const Rational c = xi.coefficient(left);
  result.interval_index = k;
  result.value = c.get_num();  // coefficients are integers
  return result;
}

DegreeResult degree_shadow(const Rational& rho2_over_8pi,
                           const SurfaceTopology& topo) {
  if (rho2_over_8pi <= 0) throw InputError("rho2 must be positive");
  DegreeResult result;
  const long k = floor_to_long(rho2_over_8pi);
  result.interval_index = static_cast<std::size_t>(k);
  if (is_integer(rho2_over_8pi)) {
    result.critical = true;
    return result;
  }
  result.value = topo.euler_char() *
                 (b_coeff(topo, k) + b_coeff(topo, k - 1) + b_coeff(topo, k - 2));
  return result;
}

DegreeResult degree_two_param(const Rational& rho1_over_8pi,
                              const Rational& rho2_over_8pi,
                              const SurfaceTopology& topo) {
  if (rho1_over_8pi <= 0 || rho1_over_8pi >= 2)
    throw UnsupportedRangeError(
        "two-parameter degree is only known for rho1 in (0, 16 pi)");
  if (rho2_over_8pi <= 0) throw InputError("rho2 must be positive");

  DegreeResult result;
  const long k = floor_to_long(rho2_over_8pi);
  result.interval_index = static_cast<std::size_t>(k);
  if (rho1_over_8pi == 1 || is_integer(rho2_over_8pi)) {
    result.critical = true;
    return result;
  }
  const Integer bk = b_coeff(topo, k);
  if (rho1_over_8pi < 1) {
    result.value = bk;
  } else {
    result.value = bk - *degree_shadow(rho2_over_8pi, topo).value;
  }
  return result;
}

}  // namespace mfdeg::degree
