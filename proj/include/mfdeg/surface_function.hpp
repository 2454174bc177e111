#pragma once

// Smooth periodic functions on the torus evaluable with derivatives at
// arbitrary points: closed-form expressions (symbolic derivatives), grid
// fields (trigonometric interpolation) and linear combinations of these.

#include <memory>
#include <vector>

#include "mfdeg/expression.hpp"
#include "mfdeg/torus.hpp"

namespace mfdeg {

class SurfaceFunction {
 public:
  virtual ~SurfaceFunction() = default;
  virtual double value(torus::Point p) const = 0;
  virtual torus::Vec2 gradient(torus::Point p) const = 0;
  virtual torus::Mat2 hessian(torus::Point p) const = 0;

  double laplacian(torus::Point p) const {
    const auto h = hessian(p);
    return h[0] + h[3];
  }
  torus::TorusField sample(const torus::TorusGrid& g) const;
};

using SurfaceFunctionPtr = std::shared_ptr<const SurfaceFunction>;

SurfaceFunctionPtr expression_function(const Expression& e);
SurfaceFunctionPtr field_function(const torus::TorusField& f);
/// log f for a strictly positive f.
SurfaceFunctionPtr log_function(SurfaceFunctionPtr f);
/// sum_i c_i f_i
SurfaceFunctionPtr linear_combination(
    std::vector<std::pair<double, SurfaceFunctionPtr>> terms);

}  // namespace mfdeg
