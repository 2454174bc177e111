#pragma once

// Leray-Schauder degree tables. All parameters rho are passed as exact
// rationals in units of 8*pi, so criticality tests are exact.

#include <optional>
#include <vector>

#include "mfdeg/series.hpp"

namespace mfdeg::degree {

using series::Integer;
using series::Rational;

/// Closed orientable surface, identified by its Euler characteristic 2 - 2g.
class SurfaceTopology {
 public:
  explicit SurfaceTopology(long euler_char);
  long euler_char() const { return chi_; }

 private:
  long chi_;
};

/// Weights alpha_q >= 0 of the singular sources (positions are irrelevant).
class SingularSet {
 public:
  SingularSet() = default;
  explicit SingularSet(std::vector<Rational> weights);
  const std::vector<Rational>& weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }

 private:
  std::vector<Rational> weights_;
};

struct DegreeResult {
  std::optional<Integer> value;  // empty iff critical
  std::size_t interval_index = 0;
  bool critical = false;
};

/// Critical multipliers N + sum_{q in A}(1 + alpha_q) <= bound, sorted, no 0.
std::vector<Rational> critical_set(const SurfaceTopology& topo,
                                   const SingularSet& sing,
                                   const Rational& bound);

/// binom(k - chi, k); 1 for k = 0 and 0 for k < 0.
Integer b_coeff(const SurfaceTopology& topo, long k);

/// The modified generating function with the given truncation order.
series::FormalSeries modified_generating_function(const SurfaceTopology& topo,
                                                  const SingularSet& sing,
                                                  const Rational& order);

/// Degree of the singular scalar equation for rho in units of 8 pi.
DegreeResult degree_singular(const Rational& rho_over_8pi,
                             const SurfaceTopology& topo,
                             const SingularSet& sing);

/// Degree of the shadow system: chi * (b_k + b_{k-1} + b_{k-2}).
DegreeResult degree_shadow(const Rational& rho2_over_8pi,
                           const SurfaceTopology& topo);

/// Degree of the two-parameter equation for rho1/8pi in (0, 2).
/// Throws UnsupportedRangeError outside that range.
DegreeResult degree_two_param(const Rational& rho1_over_8pi,
                              const Rational& rho2_over_8pi,
                              const SurfaceTopology& topo);

}  // namespace mfdeg::degree
