#include "reachkit/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "reachkit/error.hpp"

namespace reachkit {

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make(Expr::Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr make_const(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Expr::Op::Const;
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Expr::Op::Const && n->value == v; }

// Constructors with constant folding and the usual 0/1 identities, which keep
// symbolic derivatives from growing without bound.
NodePtr add(NodePtr a, NodePtr b) {
  if (a->op == Expr::Op::Const && b->op == Expr::Op::Const) return make_const(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make(Expr::Op::Add, std::move(a), std::move(b));
}
NodePtr neg(NodePtr a) {
  if (a->op == Expr::Op::Const) return make_const(-a->value);
  if (a->op == Expr::Op::Neg) return a->lhs;
  return make(Expr::Op::Neg, std::move(a));
}
NodePtr sub(NodePtr a, NodePtr b) {
  if (a->op == Expr::Op::Const && b->op == Expr::Op::Const) return make_const(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return make(Expr::Op::Sub, std::move(a), std::move(b));
}
NodePtr mul(NodePtr a, NodePtr b) {
  if (a->op == Expr::Op::Const && b->op == Expr::Op::Const) return make_const(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make(Expr::Op::Mul, std::move(a), std::move(b));
}
NodePtr div(NodePtr a, NodePtr b) {
  if (a->op == Expr::Op::Const && b->op == Expr::Op::Const) return make_const(a->value / b->value);
  if (is_const(a, 0.0)) return make_const(0.0);
  if (is_const(b, 1.0)) return a;
  return make(Expr::Op::Div, std::move(a), std::move(b));
}
NodePtr unary(Expr::Op op, NodePtr a) {
  if (a->op == Expr::Op::Const) {
    switch (op) {
      case Expr::Op::Sin: return make_const(std::sin(a->value));
      case Expr::Op::Cos: return make_const(std::cos(a->value));
      case Expr::Op::Exp: return make_const(std::exp(a->value));
      default: break;
    }
  }
  return make(op, std::move(a));
}

double eval_node(const Expr::Node& n, const Eigen::VectorXd& x) {
  switch (n.op) {
    case Expr::Op::Const: return n.value;
    case Expr::Op::Var: return x(n.index);
    case Expr::Op::Add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case Expr::Op::Sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case Expr::Op::Mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case Expr::Op::Div: return eval_node(*n.lhs, x) / eval_node(*n.rhs, x);
    case Expr::Op::Neg: return -eval_node(*n.lhs, x);
    case Expr::Op::Sin: return std::sin(eval_node(*n.lhs, x));
    case Expr::Op::Cos: return std::cos(eval_node(*n.lhs, x));
    case Expr::Op::Exp: return std::exp(eval_node(*n.lhs, x));
  }
  return 0.0;
}

NodePtr diff_node(const NodePtr& n, int k) {
  switch (n->op) {
    case Expr::Op::Const: return make_const(0.0);
    case Expr::Op::Var: return make_const(n->index == k ? 1.0 : 0.0);
    case Expr::Op::Add: return add(diff_node(n->lhs, k), diff_node(n->rhs, k));
    case Expr::Op::Sub: return sub(diff_node(n->lhs, k), diff_node(n->rhs, k));
    case Expr::Op::Neg: return neg(diff_node(n->lhs, k));
    case Expr::Op::Mul:
      return add(mul(diff_node(n->lhs, k), n->rhs), mul(n->lhs, diff_node(n->rhs, k)));
    case Expr::Op::Div:
      // (u/v)' = (u' v - u v') / (v v)
      return div(sub(mul(diff_node(n->lhs, k), n->rhs), mul(n->lhs, diff_node(n->rhs, k))),
                 mul(n->rhs, n->rhs));
    case Expr::Op::Sin: return mul(unary(Expr::Op::Cos, n->lhs), diff_node(n->lhs, k));
    case Expr::Op::Cos: return neg(mul(unary(Expr::Op::Sin, n->lhs), diff_node(n->lhs, k)));
    case Expr::Op::Exp: return mul(n, diff_node(n->lhs, k));
  }
  return make_const(0.0);
}

void print_node(const Expr::Node& n, std::ostream& os) {
  switch (n.op) {
    case Expr::Op::Const: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n.value;
      if (n.value < 0) {
        os << '(' << tmp.str() << ')';
      } else {
        os << tmp.str();
      }
      return;
    }
    case Expr::Op::Var: os << 'x' << (n.index + 1); return;
    case Expr::Op::Add:
    case Expr::Op::Sub:
    case Expr::Op::Mul:
    case Expr::Op::Div: {
      const char sym = n.op == Expr::Op::Add ? '+' : n.op == Expr::Op::Sub ? '-' : n.op == Expr::Op::Mul ? '*' : '/';
      os << '(';
      print_node(*n.lhs, os);
      os << ' ' << sym << ' ';
      print_node(*n.rhs, os);
      os << ')';
      return;
    }
    case Expr::Op::Neg: os << "(-"; print_node(*n.lhs, os); os << ')'; return;
    case Expr::Op::Sin: os << "sin("; print_node(*n.lhs, os); os << ')'; return;
    case Expr::Op::Cos: os << "cos("; print_node(*n.lhs, os); os << ')'; return;
    case Expr::Op::Exp: os << "exp("; print_node(*n.lhs, os); os << ')'; return;
  }
}

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::Parse, msg + " at position " + std::to_string(pos_) + " in \"" + std::string(text_) + "\"");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = add(lhs, term());
      } else if (accept('-')) {
        lhs = sub(lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = mul(lhs, factor());
      } else if (accept('/')) {
        lhs = div(lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    if (accept('-')) return neg(factor());
    NodePtr p = primary();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '^') fail("'^' is not supported; write products explicitly");
    return p;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view word = text_.substr(start, pos_ - start);
      if (word == "x") {
        const size_t dstart = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (dstart == pos_) fail("variable needs an index, e.g. x1");
        const int idx = std::stoi(std::string(text_.substr(dstart, pos_ - dstart)));
        if (idx < 1 || idx > dim_) fail("variable x" + std::to_string(idx) + " out of range for dimension " + std::to_string(dim_));
        auto n = std::make_shared<Expr::Node>();
        n->op = Expr::Op::Var;
        n->index = idx - 1;
        return n;
      }
      Expr::Op op;
      if (word == "sin") {
        op = Expr::Op::Sin;
      } else if (word == "cos") {
        op = Expr::Op::Cos;
      } else if (word == "exp") {
        op = Expr::Op::Exp;
      } else {
        fail("unknown identifier '" + std::string(word) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')'");
      return unary(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::string rest(text_.substr(pos_));
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ += used;
    return make_const(v);
  }

  std::string_view text_;
  int dim_;
  size_t pos_ = 0;
};

}  // namespace

Expr::Expr() : node_(make_const(0.0)) {}

Expr Expr::constant(double value) { return Expr(make_const(value)); }

Expr Expr::variable(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  return Expr(n);
}

Expr Expr::parse(std::string_view text, int dim) { return Expr(Parser(text, dim).parse()); }

double Expr::eval(const Eigen::VectorXd& x) const { return eval_node(*node_, x); }

Expr Expr::derivative(int index) const { return Expr(diff_node(node_, index)); }

std::string Expr::to_string() const {
  std::ostringstream os;
  print_node(*node_, os);
  return os.str();
}

Expr::Op Expr::op() const { return node_->op; }

double Expr::constant_value() const { return node_->value; }

Expr operator+(const Expr& a, const Expr& b) { return Expr(add(a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(sub(a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(mul(a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(div(a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(neg(a.node_)); }
Expr sin(const Expr& a) { return Expr(unary(Expr::Op::Sin, a.node_)); }
Expr cos(const Expr& a) { return Expr(unary(Expr::Op::Cos, a.node_)); }
Expr exp(const Expr& a) { return Expr(unary(Expr::Op::Exp, a.node_)); }

std::vector<Expr> gradient(const Expr& e, int dim) {
  std::vector<Expr> g;
  g.reserve(dim);
  for (int i = 0; i < dim; ++i) g.push_back(e.derivative(i));
  return g;
}

}  // namespace reachkit
