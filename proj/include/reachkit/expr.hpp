#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace reachkit {

/// Immutable expression tree over x1..xn with + - * / sin cos exp.
///
/// Grammar (whitespace ignored):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | primary
///   primary := number | 'x' index | func '(' expr ')' | '(' expr ')'
///   func    := 'sin' | 'cos' | 'exp'
/// '^' is rejected; write products explicitly.
class Expr {
 public:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };

  Expr();  // constant 0

  static Expr constant(double value);
  static Expr variable(int index);  // 0-based
  /// Parses text; every variable index must be < dim. Throws Error(Parse).
  static Expr parse(std::string_view text, int dim);

  [[nodiscard]] double eval(const Eigen::VectorXd& x) const;
  /// Symbolic partial derivative with respect to variable `index` (0-based).
  [[nodiscard]] Expr derivative(int index) const;
  [[nodiscard]] std::string to_string() const;

  [[nodiscard]] Op op() const;
  [[nodiscard]] bool is_constant() const { return op() == Op::Const; }
  [[nodiscard]] double constant_value() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Gradient of a scalar expression, one symbolic partial per coordinate.
std::vector<Expr> gradient(const Expr& e, int dim);

}  // namespace reachkit
