#include "mfdeg/lattice_green.hpp"

#include <cmath>
#include <numbers>

namespace mfdeg::torus {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kModes = 12;
constexpr double kTiny = 1e-9;

struct Folded {
  double x, y;
  double ysign;
};

Folded fold(Vec2 d) {
  double x = d[0] - std::floor(d[0] + 0.5);
  double y = d[1] - std::floor(d[1] + 0.5);
  const double s = y < 0.0 ? -1.0 : 1.0;
  return {x, std::abs(y), s};
}

double mode_weight(int m) {
  const double e = std::exp(-2.0 * kPi * m);
  return e / ((1.0 - e) * 2.0 * kPi * m);
}

// smooth cosine tail, its x and y derivatives
void tail(double x, double y, double& s, double& sx, double& sy) {
  s = sx = sy = 0.0;
  for (int m = 1; m <= kModes; ++m) {
    const double c = mode_weight(m);
    const double a = std::exp(-2.0 * kPi * m * y);
    const double b = std::exp(-2.0 * kPi * m * (1.0 - y));
    const double cm = std::cos(2.0 * kPi * m * x);
    const double sm = std::sin(2.0 * kPi * m * x);
    s += c * cm * (a + b);
    sx += -c * 2.0 * kPi * m * sm * (a + b);
    sy += c * cm * 2.0 * kPi * m * (b - a);
  }
}

// log(Q1 / r^2); Q1 = (1-E)^2 + 4E sin^2(pi x), E = exp(-2 pi y)
double log_q1_over_r2(double x, double y) {
  const double one_minus_e = -std::expm1(-2.0 * kPi * y);
  const double e = std::exp(-2.0 * kPi * y);
  const double s = std::sin(kPi * x);
  const double q1 = one_minus_e * one_minus_e + 4.0 * e * s * s;
  return std::log(q1) - std::log(x * x + y * y);
}

double log_q2(double x, double y) {
  const double e = std::exp(-2.0 * kPi * (1.0 - y));
  const double s = std::sin(kPi * x);
  return std::log((1.0 - e) * (1.0 - e) + 4.0 * e * s * s);
}

}  // namespace

double lattice_regular_self() {
  static const double value = [] {
    double s, sx, sy;
    tail(0.0, 0.0, s, sx, sy);
    return 1.0 / 12.0 - std::log(2.0 * kPi) / (2.0 * kPi) -
           std::log(-std::expm1(-2.0 * kPi)) / (2.0 * kPi) + s;
  }();
  return value;
}

double lattice_regular(Vec2 d) {
  const Folded f = fold(d);
  const double r2 = f.x * f.x + f.y * f.y;
  if (r2 < kTiny * kTiny) return lattice_regular_self() + r2 / 4.0;
  double s, sx, sy;
  tail(f.x, f.y, s, sx, sy);
  return 0.5 * (f.y * f.y - f.y + 1.0 / 6.0) -
         log_q1_over_r2(f.x, f.y) / (4.0 * kPi) - log_q2(f.x, f.y) / (4.0 * kPi) + s;
}

double lattice_green(Vec2 d) {
  const Folded f = fold(d);
  const double r = std::hypot(f.x, f.y);
  return lattice_regular(d) - std::log(r) / (2.0 * kPi);
}

Vec2 lattice_green_gradient(Vec2 d) {
  const Folded f = fold(d);
  const double x = f.x, y = f.y;
  const double e1 = std::exp(-2.0 * kPi * y);
  const double e2 = std::exp(-2.0 * kPi * (1.0 - y));
  const double sn = std::sin(kPi * x);
  const double s2 = sn * sn;
  const double om1 = -std::expm1(-2.0 * kPi * y);
  const double q1 = om1 * om1 + 4.0 * e1 * s2;
  const double q2 = (1.0 - e2) * (1.0 - e2) + 4.0 * e2 * s2;
  const double sin2 = std::sin(2.0 * kPi * x);

  const double q1x = 4.0 * kPi * e1 * sin2;
  const double q1y = 4.0 * kPi * e1 * (om1 - 2.0 * s2);
  const double q2x = 4.0 * kPi * e2 * sin2;
  const double q2y = -4.0 * kPi * e2 * (1.0 - e2 - 2.0 * s2);

  double s, sx, sy;
  tail(x, y, s, sx, sy);
  const double gx = -(q1x / q1 + q2x / q2) / (4.0 * kPi) + sx;
  const double gy = (y - 0.5) - (q1y / q1 + q2y / q2) / (4.0 * kPi) + sy;
  return {gx, f.ysign * gy};
}

Vec2 lattice_regular_gradient(Vec2 d) {
  const Folded f = fold(d);
  const double r2 = f.x * f.x + f.y * f.y;
  if (r2 < 1e-10) return {f.x / 2.0, f.ysign * f.y / 2.0};
  const Vec2 g = lattice_green_gradient(d);
  return {g[0] + f.x / (2.0 * kPi * r2), g[1] + f.ysign * f.y / (2.0 * kPi * r2)};
}

double lattice_vanishing_weight(Vec2 d) {
  const Folded f = fold(d);
  const double r2 = f.x * f.x + f.y * f.y;
  return r2 * r2 * std::exp(-8.0 * kPi * lattice_regular(d));
}

}  // namespace mfdeg::torus
