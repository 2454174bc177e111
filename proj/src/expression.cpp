#include "mfdeg/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "mfdeg/errors.hpp"

namespace mfdeg {

enum class Op { Num, X, Y, Neg, Add, Sub, Mul, Div, Pow, Cos, Sin, Exp, Log, Sqrt };

struct Expression::Node {
  Op op;
  double value = 0.0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr num(double v) { return std::make_shared<Expression::Node>(Expression::Node{Op::Num, v, nullptr, nullptr}); }
NodePtr var(Op op) { return std::make_shared<Expression::Node>(Expression::Node{op, 0.0, nullptr, nullptr}); }

bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }

double apply(Op op, double a, double b);

// node constructors fold constants and drop trivial terms
NodePtr make(Op op, NodePtr a, NodePtr b = nullptr) {
  const bool const_a = a->op == Op::Num;
  const bool const_b = !b || b->op == Op::Num;
  if (const_a && const_b) return num(apply(op, a->value, b ? b->value : 0.0));
  switch (op) {
    case Op::Add:
      if (is_num(a, 0)) return b;
      if (is_num(b, 0)) return a;
      break;
    case Op::Sub:
      if (is_num(b, 0)) return a;
      if (is_num(a, 0)) return make(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_num(a, 0) || is_num(b, 0)) return num(0);
      if (is_num(a, 1)) return b;
      if (is_num(b, 1)) return a;
      break;
    case Op::Div:
      if (is_num(a, 0)) return num(0);
      if (is_num(b, 1)) return a;
      break;
    case Op::Pow:
      if (is_num(b, 1)) return a;
      if (is_num(b, 0)) return num(1);
      break;
    case Op::Neg:
      if (a->op == Op::Neg) return a->a;
      break;
    default:
      break;
  }
  return std::make_shared<Expression::Node>(Expression::Node{op, 0.0, std::move(a), std::move(b)});
}

double apply(Op op, double a, double b) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return std::pow(a, b);
    case Op::Cos: return std::cos(a);
    case Op::Sin: return std::sin(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Sqrt: return std::sqrt(a);
    default: return a;
  }
}

double eval_node(const Expression::Node& n, double x, double y) {
  switch (n.op) {
    case Op::Num: return n.value;
    case Op::X: return x;
    case Op::Y: return y;
    default: break;
  }
  const double a = eval_node(*n.a, x, y);
  const double b = n.b ? eval_node(*n.b, x, y) : 0.0;
  return apply(n.op, a, b);
}

NodePtr diff(const NodePtr& n, Op wrt) {
  const NodePtr& a = n->a;
  const NodePtr& b = n->b;
  switch (n->op) {
    case Op::Num: return num(0);
    case Op::X:
    case Op::Y: return num(n->op == wrt ? 1.0 : 0.0);
    case Op::Neg: return make(Op::Neg, diff(a, wrt));
    case Op::Add: return make(Op::Add, diff(a, wrt), diff(b, wrt));
    case Op::Sub: return make(Op::Sub, diff(a, wrt), diff(b, wrt));
    case Op::Mul:
      return make(Op::Add, make(Op::Mul, diff(a, wrt), b), make(Op::Mul, a, diff(b, wrt)));
    case Op::Div:
      return make(Op::Div,
                  make(Op::Sub, make(Op::Mul, diff(a, wrt), b), make(Op::Mul, a, diff(b, wrt))),
                  make(Op::Mul, b, b));
    case Op::Pow: {
      if (b->op == Op::Num)
        return make(Op::Mul, make(Op::Mul, num(b->value), make(Op::Pow, a, num(b->value - 1))),
                    diff(a, wrt));
      // a^b (b' log a + b a'/a)
      auto inner = make(Op::Add, make(Op::Mul, diff(b, wrt), make(Op::Log, a)),
                        make(Op::Div, make(Op::Mul, b, diff(a, wrt)), a));
      return make(Op::Mul, n, inner);
    }
    case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, a), diff(a, wrt)));
    case Op::Sin: return make(Op::Mul, make(Op::Cos, a), diff(a, wrt));
    case Op::Exp: return make(Op::Mul, n, diff(a, wrt));
    case Op::Log: return make(Op::Div, diff(a, wrt), a);
    case Op::Sqrt: return make(Op::Div, diff(a, wrt), make(Op::Mul, num(2), n));
  }
  return num(0);
}

bool has_coordinate(const NodePtr& n) {
  if (!n) return false;
  if (n->op == Op::X || n->op == Op::Y) return true;
  return has_coordinate(n->a) || has_coordinate(n->b);
}

std::string render(const NodePtr& n) {
  auto fn = [&](const char* name) { return std::string(name) + "(" + render(n->a) + ")"; };
  auto bin = [&](const char* sym) { return "(" + render(n->a) + sym + render(n->b) + ")"; };
  switch (n->op) {
    case Op::Num: {
      std::ostringstream os;
      os.precision(17);
      os << n->value;
      return os.str();
    }
    case Op::X: return "x";
    case Op::Y: return "y";
    case Op::Neg: return "(-" + render(n->a) + ")";
    case Op::Add: return bin("+");
    case Op::Sub: return bin("-");
    case Op::Mul: return bin("*");
    case Op::Div: return bin("/");
    case Op::Pow: return bin("^");
    case Op::Cos: return fn("cos");
    case Op::Sin: return fn("sin");
    case Op::Exp: return fn("exp");
    case Op::Log: return fn("log");
    case Op::Sqrt: return fn("sqrt");
  }
  return "?";
}

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  NodePtr run() {
    NodePtr n = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& why) {
    throw InputError("expression \"" + s_ + "\": " + why + " at offset " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr sum() {
    NodePtr n = product();
    for (;;) {
      if (eat('+')) n = make(Op::Add, n, product());
      else if (eat('-')) n = make(Op::Sub, n, product());
      else return n;
    }
  }
  NodePtr product() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = make(Op::Mul, n, unary());
      else if (eat('/')) n = make(Op::Div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return make(Op::Pow, base, unary());  // right associative
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = sum();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return num(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "x") return var(Op::X);
      if (id == "y") return var(Op::Y);
      if (id == "pi") return num(std::numbers::pi);
      Op op;
      if (id == "cos") op = Op::Cos;
      else if (id == "sin") op = Op::Sin;
      else if (id == "exp") op = Op::Exp;
      else if (id == "log") op = Op::Log;
      else if (id == "sqrt") op = Op::Sqrt;
      else fail("unknown identifier '" + id + "'");
      if (!eat('(')) fail("expected '(' after " + id);
      NodePtr arg = sum();
      if (!eat(')')) fail("missing ')'");
      return make(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) { return Expression(Parser(text).run()); }

Expression Expression::constant(double c) { return Expression(num(c)); }

double Expression::eval(torus::Point p) const { return eval_node(*root_, p.x, p.y); }

Expression Expression::derivative(int axis) const {
  return Expression(diff(root_, axis == 0 ? Op::X : Op::Y));
}

Expression Expression::log() const { return Expression(make(Op::Log, root_)); }

bool Expression::is_constant() const { return !has_coordinate(root_); }

std::string Expression::to_string() const { return render(root_); }

double evaluate_constant(const std::string& text) {
  const Expression e = Expression::parse(text);
  if (!e.is_constant()) throw InputError("expected a constant expression: " + text);
  const double v = e.eval({});
  if (!std::isfinite(v)) throw InputError("non-finite value: " + text);
  return v;
}

}  // namespace mfdeg
