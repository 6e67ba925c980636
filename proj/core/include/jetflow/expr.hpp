#pragma once

// Arithmetic expressions over named real variables.
//
// Expressions are immutable trees shared by reference; every operation here
// is pure. The dialect names base coordinates t1..tp, x1..xn and jet
// coordinates x{i}_{a} (e.g. x2_1), but any identifier is accepted.

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace jetflow {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& message);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  enum class Kind { unbound_variable, domain };
  EvalError(Kind kind, const std::string& message);
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

enum class Op { number, variable, negate, add, subtract, multiply, divide, power, call };

enum class Func { sin, cos, tan, exp, log, sqrt, sinh, cosh, asin, acos, atan };

std::string_view func_name(Func f);

class Expr {
 public:
  /// The literal 0.
  Expr();

  // Raw constructors: build exactly the requested node.
  static Expr number(double value);
  static Expr variable(std::string name);
  static Expr unary(Op op, Expr operand);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr power(Expr base, int exponent);
  static Expr call(Func f, Expr arg);

  Op op() const;
  double value() const;
  const std::string& name() const;
  int exponent() const;
  Func func() const;
  const Expr& lhs() const;  // also the operand of negate/power/call
  const Expr& rhs() const;

  bool is_number() const { return op() == Op::number; }
  bool is_number(double v) const { return is_number() && value() == v; }

  /// Structural equality.
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Simplifying constructors (constant folding, 0/1 identities).
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr apply(Func f, const Expr& arg);

Expr parse(std::string_view source);

/// Text that parses back to the same tree.
std::string to_string(const Expr& e);

using Bindings = std::map<std::string, double, std::less<>>;

double eval(const Expr& e, const Bindings& bindings);

/// Exact symbolic partial derivative with light simplification.
Expr diff(const Expr& e, std::string_view variable);

using Substitution = std::map<std::string, Expr, std::less<>>;

/// Replaces variables by expressions; unmapped variables are kept.
Expr substitute(const Expr& e, const Substitution& s);

std::set<std::string> variables_of(const Expr& e);
bool depends_on(const Expr& e, std::string_view variable);
std::size_t node_count(const Expr& e);

/// An expression resolved against a fixed variable ordering and flattened to
/// postfix code for repeated evaluation.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  /// Throws EvalError(unbound_variable) if e references a name not in
  /// `variables`.
  CompiledExpr(const Expr& e, std::span<const std::string> variables);

  double operator()(std::span<const double> values) const;

 private:
  struct Instr {
    Op op;
    Func func;
    int index;
    double value;
  };
  std::vector<Instr> code_;
  std::size_t max_stack_ = 0;
};

// Standard coordinate names.
std::vector<std::string> temporal_names(int p);              // t1..tp
std::vector<std::string> spatial_names(int n);               // x1..xn
std::string jet_name(int i, int alpha);                      // 0-based -> "x{i+1}_{alpha+1}"
std::vector<std::string> jet_names(int p, int n);            // t.., x.., then x{i}_{a} row-major in (i, a)

}  // namespace jetflow
