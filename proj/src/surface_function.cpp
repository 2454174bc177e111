#include "mfdeg/surface_function.hpp"

#include <cmath>

namespace mfdeg {

using torus::Mat2;
using torus::Point;
using torus::Vec2;

torus::TorusField SurfaceFunction::sample(const torus::TorusGrid& g) const {
  return torus::TorusField::sample(g, [this](Point p) { return value(p); });
}

namespace {

class ExpressionFunction final : public SurfaceFunction {
 public:
  explicit ExpressionFunction(const Expression& e)
      : f_(e),
        fx_(e.derivative(0)),
        fy_(e.derivative(1)),
        fxx_(fx_.derivative(0)),
        fxy_(fx_.derivative(1)),
        fyy_(fy_.derivative(1)) {}

  double value(Point p) const override { return f_.eval(p); }
  Vec2 gradient(Point p) const override { return {fx_.eval(p), fy_.eval(p)}; }
  Mat2 hessian(Point p) const override {
    const double xy = fxy_.eval(p);
    return {fxx_.eval(p), xy, xy, fyy_.eval(p)};
  }

 private:
  Expression f_, fx_, fy_, fxx_, fxy_, fyy_;
};

class FieldFunction final : public SurfaceFunction {
 public:
  explicit FieldFunction(const torus::TorusField& f) : interp_(f) {}
  double value(Point p) const override { return interp_.value(p); }
  Vec2 gradient(Point p) const override { return interp_.gradient(p); }
  Mat2 hessian(Point p) const override { return interp_.hessian(p); }

 private:
  torus::SpectralInterpolant interp_;
};

class Combination final : public SurfaceFunction {
 public:
  explicit Combination(std::vector<std::pair<double, SurfaceFunctionPtr>> t)
      : terms_(std::move(t)) {}

  double value(Point p) const override {
    double s = 0.0;
    for (const auto& [c, f] : terms_) s += c * f->value(p);
    return s;
  }
  Vec2 gradient(Point p) const override {
    Vec2 s{0.0, 0.0};
    for (const auto& [c, f] : terms_) {
      const Vec2 g = f->gradient(p);
      s[0] += c * g[0];
      s[1] += c * g[1];
    }
    return s;
  }
  Mat2 hessian(Point p) const override {
    Mat2 s{};
    for (const auto& [c, f] : terms_) {
      const Mat2 h = f->hessian(p);
      for (int i = 0; i < 4; ++i) s[i] += c * h[i];
    }
    return s;
  }

 private:
  std::vector<std::pair<double, SurfaceFunctionPtr>> terms_;
};

class LogFunction final : public SurfaceFunction {
 public:
  explicit LogFunction(SurfaceFunctionPtr f) : f_(std::move(f)) {}
  double value(Point p) const override { return std::log(f_->value(p)); }
  Vec2 gradient(Point p) const override {
    const double v = f_->value(p);
    const Vec2 g = f_->gradient(p);
    return {g[0] / v, g[1] / v};
  }
  Mat2 hessian(Point p) const override {
    const double v = f_->value(p);
    const Vec2 g = f_->gradient(p);
    const Mat2 h = f_->hessian(p);
    Mat2 out;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out[2 * i + j] = h[2 * i + j] / v - g[i] * g[j] / (v * v);
    return out;
  }

 private:
  SurfaceFunctionPtr f_;
};

}  // namespace

SurfaceFunctionPtr log_function(SurfaceFunctionPtr f) {
  return std::make_shared<LogFunction>(std::move(f));
}

SurfaceFunctionPtr expression_function(const Expression& e) {
  return std::make_shared<ExpressionFunction>(e);
}

SurfaceFunctionPtr field_function(const torus::TorusField& f) {
  return std::make_shared<FieldFunction>(f);
}

SurfaceFunctionPtr linear_combination(
    std::vector<std::pair<double, SurfaceFunctionPtr>> terms) {
  std::erase_if(terms, [](const auto& t) { return t.first == 0.0 || !t.second; });
  return std::make_shared<Combination>(std::move(terms));
}

}  // namespace mfdeg
