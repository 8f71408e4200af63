#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gtd/errors.hpp"
#include "gtd/jet.hpp"

namespace gtd {

// Fundamental equations and conformal factors enter as a small text DSL:
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := atom ('^' atom)?
//   atom   := number | ident | '(' expr ')' | ('ln'|'exp') '(' expr ')' | '-' atom
//
// Identifiers must appear in the declared variable or parameter list.
// Expressions are immutable after parsing; evaluation is pure and reentrant.

enum class NodeKind : uint8_t { Constant, Variable, Parameter, Add, Sub, Mul, Div, Pow, Neg, Ln, Exp };

struct ExprNode {
  NodeKind kind;
  double value = 0.0;  // Constant
  int ref = -1;        // Variable / Parameter index
  int lhs = -1, rhs = -1;
  int line = 0, col = 0;
};

// Printed with 17 significant digits so constants survive a round trip.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct DerivativeBundle {
  int nvars = 0;
  int order = 0;
  double val = 0.0;
  std::vector<double> partials;  // slot-aligned with JetSpace::get(nvars, order)

  double value() const { return val; }

  double partial(std::span<const int> alpha) const {
    int s = JetSpace::get(nvars, order).slot(alpha);
    if (s < 0) throw std::invalid_argument("partial order beyond bundle order");
    return partials[s];
  }
  double partial(std::initializer_list<int> alpha) const {
    return partial(std::span<const int>(alpha.begin(), alpha.size()));
  }
};

inline DerivativeBundle bundle_from_jet(const Jet& j) {
  const JetSpace& s = j.space();
  DerivativeBundle b;
  b.nvars = s.nvars();
  b.order = s.order();
  b.val = j.value();
  b.partials.resize(s.size());
  for (int i = 0; i < s.size(); ++i) b.partials[i] = j.coeff(i) * s.factorial(i);
  return b;
}

class Expression {
public:
  Expression() : d_(shared_constant(0.0)) {}

  static Expression constant(double v) { return Expression(shared_constant(v)); }

  static Expression parse(std::string_view source, std::vector<std::string> variables,
                          std::vector<std::string> parameters = {}) {
    auto data = std::make_shared<Data>();
    data->vars = std::move(variables);
    data->params = std::move(parameters);
    Parser p(source, *data);
    data->root = p.parse_all();
    return Expression(std::move(data));
  }

  const std::vector<std::string>& variables() const { return d_->vars; }
  const std::vector<std::string>& parameters() const { return d_->params; }

  bool is_constant() const { return d_->nodes[d_->root].kind == NodeKind::Constant; }

  // Canonical printer; defines expression equality for round-trip tests.
  std::string str() const { return print(d_->root, 0); }
  std::string subterm(int node) const { return print(node, 0); }

  friend bool operator==(const Expression& a, const Expression& b) {
    return a.d_->vars == b.d_->vars && a.d_->params == b.d_->params &&
           a.equal_nodes(a.d_->root, b, b.d_->root);
  }

  template <class T>
  T evaluate_scalar(std::span<const T> vars, std::span<const double> params, const T& proto) const {
    if (static_cast<int>(vars.size()) != static_cast<int>(d_->vars.size()))
      throw std::invalid_argument("expression: variable count mismatch");
    if (static_cast<int>(params.size()) != static_cast<int>(d_->params.size()))
      throw std::invalid_argument("expression: parameter count mismatch");
    return eval_node<T>(d_->root, vars, params, proto);
  }

  double evaluate_value(std::span<const double> point, std::span<const double> params) const {
    return evaluate_scalar<double>(point, params, 0.0);
  }

  // Exact value and partials up to `order` via truncated Taylor arithmetic.
  DerivativeBundle evaluate(std::span<const double> point, std::span<const double> params,
                            int order) const {
    const JetSpace& space = JetSpace::get(static_cast<int>(d_->vars.size()), order);
    std::vector<Jet> vars;
    vars.reserve(point.size());
    for (size_t i = 0; i < point.size(); ++i)
      vars.push_back(Jet::variable(space, static_cast<int>(i), point[i]));
    Jet out = evaluate_scalar<Jet>(vars, params, Jet(space));
    return bundle_from_jet(out);
  }

private:
  struct Data {
    std::vector<ExprNode> nodes;
    int root = 0;
    std::vector<std::string> vars, params;
  };

  explicit Expression(std::shared_ptr<const Data> d) : d_(std::move(d)) {}

  static std::shared_ptr<const Data> shared_constant(double v) {
    auto data = std::make_shared<Data>();
    ExprNode n;
    n.kind = NodeKind::Constant;
    n.value = v;
    data->nodes.push_back(n);
    data->root = 0;
    return data;
  }

  bool equal_nodes(int i, const Expression& other, int j) const {
    const ExprNode& a = d_->nodes[i];
    const ExprNode& b = other.d_->nodes[j];
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case NodeKind::Constant:
        return a.value == b.value;
      case NodeKind::Variable:
      case NodeKind::Parameter:
        return a.ref == b.ref;
      case NodeKind::Neg:
      case NodeKind::Ln:
      case NodeKind::Exp:
        return equal_nodes(a.lhs, other, b.lhs);
      default:
        return equal_nodes(a.lhs, other, b.lhs) && equal_nodes(a.rhs, other, b.rhs);
    }
  }

  // Precedence levels: additive 1, multiplicative 2, unary minus 3, power 4,
  // atoms 5. The grammar only admits atoms as '^' operands and as the operand
  // of unary minus, so the printer parenthesizes anything weaker there.
  int precedence(int i) const {
    switch (d_->nodes[i].kind) {
      case NodeKind::Add:
      case NodeKind::Sub:
        return 1;
      case NodeKind::Mul:
      case NodeKind::Div:
        return 2;
      case NodeKind::Neg:
        return 3;
      case NodeKind::Pow:
        return 4;
      default:
        return 5;
    }
  }

  bool atom_like(int i) const {
    const ExprNode& n = d_->nodes[i];
    if (n.kind == NodeKind::Constant && n.value < 0) return true;  // prints as '-' atom
    return precedence(i) == 5 || n.kind == NodeKind::Neg;
  }

  std::string wrap(int i, bool need) const {
    std::string s = print(i, 0);
    return need ? "(" + s + ")" : s;
  }

  std::string print(int i, int) const {
    const ExprNode& n = d_->nodes[i];
    switch (n.kind) {
      case NodeKind::Constant:
        return format_double(n.value);
      case NodeKind::Variable:
        return d_->vars[n.ref];
      case NodeKind::Parameter:
        return d_->params[n.ref];
      case NodeKind::Add:
        return wrap(n.lhs, precedence(n.lhs) < 1) + " + " + wrap(n.rhs, precedence(n.rhs) < 1);
      case NodeKind::Sub:
        return wrap(n.lhs, precedence(n.lhs) < 1) + " - " + wrap(n.rhs, precedence(n.rhs) <= 1);
      case NodeKind::Mul:
        return wrap(n.lhs, precedence(n.lhs) < 2) + "*" + wrap(n.rhs, precedence(n.rhs) < 2);
      case NodeKind::Div:
        return wrap(n.lhs, precedence(n.lhs) < 2) + "/" + wrap(n.rhs, precedence(n.rhs) <= 2);
      case NodeKind::Pow:
        return wrap(n.lhs, !atom_like(n.lhs)) + "^" + wrap(n.rhs, !atom_like(n.rhs));
      case NodeKind::Neg:
        return "-" + wrap(n.lhs, !atom_like(n.lhs));
      case NodeKind::Ln:
        return "ln(" + print(n.lhs, 0) + ")";
      case NodeKind::Exp:
        return "exp(" + print(n.lhs, 0) + ")";
    }
    return {};
  }

  [[noreturn]] void eval_fail(int node, const std::string& what) const {
    const ExprNode& n = d_->nodes[node];
    std::string msg = what + " in subterm '" + subterm(node) + "'";
    if (n.line > 0) msg += " (source " + std::to_string(n.line) + ":" + std::to_string(n.col) + ")";
    throw EvalError(msg);
  }

  static bool integral_exponent(double v, long long& out) {
    if (!(std::abs(v) <= 1e15) || v != std::floor(v)) return false;
    out = static_cast<long long>(v);
    return true;
  }

  template <class T>
  T eval_node(int i, std::span<const T> vars, std::span<const double> params, const T& proto) const {
    using std::exp;
    using std::log;
    const ExprNode& n = d_->nodes[i];
    switch (n.kind) {
      case NodeKind::Constant:
        return make_constant(proto, n.value);
      case NodeKind::Variable:
        return vars[n.ref];
      case NodeKind::Parameter:
        return make_constant(proto, params[n.ref]);
      case NodeKind::Add:
        return eval_node(n.lhs, vars, params, proto) + eval_node(n.rhs, vars, params, proto);
      case NodeKind::Sub:
        return eval_node(n.lhs, vars, params, proto) - eval_node(n.rhs, vars, params, proto);
      case NodeKind::Mul:
        return eval_node(n.lhs, vars, params, proto) * eval_node(n.rhs, vars, params, proto);
      case NodeKind::Div: {
        T num = eval_node(n.lhs, vars, params, proto);
        T den = eval_node(n.rhs, vars, params, proto);
        try {
          return checked_div(num, den);
        } catch (const DomainError& e) {
          eval_fail(i, e.what());
        }
      }
      case NodeKind::Neg:
        return -eval_node(n.lhs, vars, params, proto);
      case NodeKind::Ln: {
        T arg = eval_node(n.lhs, vars, params, proto);
        try {
          return checked_log(arg);
        } catch (const DomainError& e) {
          eval_fail(i, e.what());
        }
      }
      case NodeKind::Exp:
        return exp(eval_node(n.lhs, vars, params, proto));
      case NodeKind::Pow: {
        T base = eval_node(n.lhs, vars, params, proto);
        const ExprNode& r = d_->nodes[n.rhs];
        long long k = 0;
        if (r.kind == NodeKind::Constant && integral_exponent(r.value, k)) {
          try {
            return pow_int(base, k, make_constant(proto, 1.0));
          } catch (const DomainError& e) {
            eval_fail(i, e.what());
          }
        }
        if (r.kind == NodeKind::Constant) {
          try {
            return checked_pow(base, r.value);
          } catch (const DomainError& e) {
            eval_fail(i, e.what());
          }
        }
        T ex = eval_node(n.rhs, vars, params, proto);
        try {
          return exp(ex * checked_log(base));
        } catch (const DomainError& e) {
          eval_fail(i, e.what());
        }
      }
    }
    throw std::logic_error("unreachable expression node");
  }

  static double checked_div(double a, double b) {
    if (b == 0.0) throw DomainError("division by zero");
    return a / b;
  }
  static Jet checked_div(const Jet& a, const Jet& b) { return a / b; }
  static double checked_log(double x) {
    if (!(x > 0.0)) throw DomainError("ln of non-positive argument");
    return std::log(x);
  }
  static Jet checked_log(const Jet& x) { return log(x); }
  static double checked_pow(double x, double p) {
    if (!(x > 0.0)) throw DomainError("power with non-positive base and non-integer exponent");
    return std::pow(x, p);
  }
  static Jet checked_pow(const Jet& x, double p) { return pow(x, p); }

  class Parser {
  public:
    Parser(std::string_view src, Data& data) : src_(src), data_(data) {}

    int parse_all() {
      next_token();
      int root = parse_expr();
      if (tok_ != Tok::End) fail("unexpected trailing input");
      return root;
    }

  private:
    enum class Tok { End, Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen };

    int parse_expr() {
      int lhs = parse_term();
      while (tok_ == Tok::Plus || tok_ == Tok::Minus) {
        NodeKind op = tok_ == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
        int line = tok_line_, col = tok_col_;
        next_token();
        int rhs = parse_term();
        lhs = binary(op, lhs, rhs, line, col);
      }
      return lhs;
    }

    int parse_term() {
      int lhs = parse_factor();
      while (tok_ == Tok::Star || tok_ == Tok::Slash) {
        NodeKind op = tok_ == Tok::Star ? NodeKind::Mul : NodeKind::Div;
        int line = tok_line_, col = tok_col_;
        next_token();
        int rhs = parse_factor();
        lhs = binary(op, lhs, rhs, line, col);
      }
      return lhs;
    }

    int parse_factor() {
      int base = parse_atom();
      if (tok_ == Tok::Caret) {
        int line = tok_line_, col = tok_col_;
        next_token();
        int expo = parse_atom();
        return binary(NodeKind::Pow, base, expo, line, col);
      }
      return base;
    }

    int parse_atom() {
      int line = tok_line_, col = tok_col_;
      switch (tok_) {
        case Tok::Number: {
          double v = number_;
          next_token();
          return constant(v, line, col);
        }
        case Tok::Minus: {
          next_token();
          int inner = parse_atom();
          if (data_.nodes[inner].kind == NodeKind::Constant)
            return constant(-data_.nodes[inner].value, line, col);
          ExprNode n;
          n.kind = NodeKind::Neg;
          n.lhs = inner;
          n.line = line;
          n.col = col;
          return push(n);
        }
        case Tok::LParen: {
          next_token();
          int inner = parse_expr();
          expect(Tok::RParen, "expected ')'");
          next_token();
          return inner;
        }
        case Tok::Ident: {
          std::string name = ident_;
          next_token();
          if (name == "ln" || name == "exp") {
            expect(Tok::LParen, "expected '(' after function name");
            next_token();
            int arg = parse_expr();
            expect(Tok::RParen, "expected ')'");
            next_token();
            ExprNode n;
            n.kind = name == "ln" ? NodeKind::Ln : NodeKind::Exp;
            n.lhs = arg;
            n.line = line;
            n.col = col;
            return push(n);
          }
          ExprNode n;
          n.line = line;
          n.col = col;
          auto vit = std::find(data_.vars.begin(), data_.vars.end(), name);
          if (vit != data_.vars.end()) {
            n.kind = NodeKind::Variable;
            n.ref = static_cast<int>(vit - data_.vars.begin());
            return push(n);
          }
          auto pit = std::find(data_.params.begin(), data_.params.end(), name);
          if (pit != data_.params.end()) {
            n.kind = NodeKind::Parameter;
            n.ref = static_cast<int>(pit - data_.params.begin());
            return push(n);
          }
          throw ParseError("undeclared identifier '" + name + "'", line, col);
        }
        default:
          fail("expected a number, identifier, '(' or '-'");
      }
    }

    int constant(double v, int line, int col) {
      ExprNode n;
      n.kind = NodeKind::Constant;
      n.value = v;
      n.line = line;
      n.col = col;
      return push(n);
    }

    int binary(NodeKind op, int lhs, int rhs, int line, int col) {
      const ExprNode& l = data_.nodes[lhs];
      const ExprNode& r = data_.nodes[rhs];
      // Constant folding; powers only fold when they evaluate cleanly.
      if (l.kind == NodeKind::Constant && r.kind == NodeKind::Constant) {
        double v = 0.0;
        bool folded = true;
        switch (op) {
          case NodeKind::Add:
            v = l.value + r.value;
            break;
          case NodeKind::Sub:
            v = l.value - r.value;
            break;
          case NodeKind::Mul:
            v = l.value * r.value;
            break;
          case NodeKind::Div:
            folded = r.value != 0.0;
            if (folded) v = l.value / r.value;
            break;
          case NodeKind::Pow: {
            long long k = 0;
            if (integral_exponent(r.value, k))
              v = pow_int(l.value, k, 1.0);
            else if (l.value > 0.0)
              v = std::pow(l.value, r.value);
            else
              folded = false;
            break;
          }
          default:
            folded = false;
        }
        if (folded && std::isfinite(v)) return constant(v, line, col);
      }
      ExprNode n;
      n.kind = op;
      n.lhs = lhs;
      n.rhs = rhs;
      n.line = line;
      n.col = col;
      return push(n);
    }

    int push(const ExprNode& n) {
      data_.nodes.push_back(n);
      return static_cast<int>(data_.nodes.size()) - 1;
    }

    void expect(Tok t, const char* msg) {
      if (tok_ != t) fail(msg);
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, tok_line_, tok_col_); }

    void next_token() {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
      tok_line_ = line_;
      tok_col_ = col_;
      if (pos_ >= src_.size()) {
        tok_ = Tok::End;
        return;
      }
      char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
          advance();
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
          size_t mark = pos_;
          advance();
          if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
          if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
          } else {
            while (pos_ > mark) {
              --pos_;
              --col_;
            }
          }
        }
        number_ = std::strtod(std::string(src_.substr(start, pos_ - start)).c_str(), nullptr);
        tok_ = Tok::Number;
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        ident_ = std::string(src_.substr(start, pos_ - start));
        tok_ = Tok::Ident;
        return;
      }
      advance();
      switch (c) {
        case '+': tok_ = Tok::Plus; return;
        case '-': tok_ = Tok::Minus; return;
        case '*': tok_ = Tok::Star; return;
        case '/': tok_ = Tok::Slash; return;
        case '^': tok_ = Tok::Caret; return;
        case '(': tok_ = Tok::LParen; return;
        case ')': tok_ = Tok::RParen; return;
        default:
          throw ParseError(std::string("unexpected character '") + c + "'", tok_line_, tok_col_);
      }
    }

    void advance() {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }

    std::string_view src_;
    Data& data_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Tok tok_ = Tok::End;
    int tok_line_ = 1, tok_col_ = 1;
    double number_ = 0.0;
    std::string ident_;
  };

  std::shared_ptr<const Data> d_;
};

}  // namespace gtd
