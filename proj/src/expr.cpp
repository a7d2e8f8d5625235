#include "nlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace nlab {

struct Expression::Node {
  enum Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Ln, Exp, Cos, Sin, Abs, Sqrt } op;
  Real value = 0;
  int var = 0;
  std::shared_ptr<const Node> a, b;

  Real eval(const Vec3& x) const {
    switch (op) {
      case Num: return value;
      case Var: return x[var];
      case Add: return a->eval(x) + b->eval(x);
      case Sub: return a->eval(x) - b->eval(x);
      case Mul: return a->eval(x) * b->eval(x);
      case Div: return a->eval(x) / b->eval(x);
      case Pow: return std::pow(a->eval(x), b->eval(x));
      case Neg: return -a->eval(x);
      case Ln: return std::log(a->eval(x));
      case Exp: return std::exp(a->eval(x));
      case Cos: return std::cos(a->eval(x));
      case Sin: return std::sin(a->eval(x));
      case Abs: return std::abs(a->eval(x));
      case Sqrt: return std::sqrt(a->eval(x));
    }
    return 0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  using N = Expression::Node;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("expression \"" + s_ + "\" at column " + std::to_string(pos_ + 1) + ": " + msg);
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
  static NodePtr make(N::Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<N>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+'))
        n = make(N::Add, n, term());
      else if (eat('-'))
        n = make(N::Sub, n, term());
      else
        return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*'))
        n = make(N::Mul, n, unary());
      else if (eat('/'))
        n = make(N::Div, n, unary());
      else
        return n;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(N::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return make(N::Pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const Real v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<N>();
      n->op = N::Num;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "pi") {
        auto n = std::make_shared<N>();
        n->op = N::Num;
        n->value = kPi;
        return n;
      }
      if (id == "x1" || id == "x2" || id == "x3") {
        auto n = std::make_shared<N>();
        n->op = N::Var;
        n->var = id[1] - '1';
        return n;
      }
      N::Op op;
      if (id == "ln")
        op = N::Ln;
      else if (id == "exp")
        op = N::Exp;
      else if (id == "cos")
        op = N::Cos;
      else if (id == "sin")
        op = N::Sin;
      else if (id == "abs")
        op = N::Abs;
      else if (id == "sqrt")
        op = N::Sqrt;
      else {
        pos_ = start;
        fail("unknown identifier '" + id + "'");
      }
      if (!eat('(')) fail("expected '(' after " + id);
      NodePtr arg = expr();
      if (!eat(')')) fail("expected ')'");
      return make(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& source) : source_(source) {
  root_ = Parser(source_).parse();
}

Real Expression::operator()(const Vec3& x) const { return root_->eval(x); }

}  // namespace nlab
