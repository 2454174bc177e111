#pragma once

// Closed-form expressions in the torus coordinates x, y, e.g.
// "1 + 0.5*cos(2*pi*x)". Grammar: numbers, pi, x, y, + - * / ^, unary
// minus, parentheses and cos sin exp log sqrt. Derivatives are symbolic.

#include <memory>
#include <string>

#include "mfdeg/torus.hpp"

namespace mfdeg {

class Expression {
 public:
  /// Throws InputError on a syntax error or unknown identifier.
  static Expression parse(const std::string& text);
  static Expression constant(double c);

  double eval(torus::Point p) const;
  /// Partial derivative in x (axis 0) or y (axis 1).
  Expression derivative(int axis) const;
  /// log of this expression.
  Expression log() const;
  /// True if no coordinate appears.
  bool is_constant() const;
  std::string to_string() const;

  struct Node;

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

/// Evaluates a coordinate-free expression such as "4*pi"; throws InputError
/// if x or y appears.
double evaluate_constant(const std::string& text);

}  // namespace mfdeg
