#include "jetflow/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

namespace jetflow {

ParseError::ParseError(std::size_t offset, const std::string& message)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + message),
      offset_(offset) {}

EvalError::EvalError(Kind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

namespace {

constexpr std::array<std::pair<std::string_view, Func>, 11> kFunctions{{
    {"sin", Func::sin},
    {"cos", Func::cos},
    {"tan", Func::tan},
    {"exp", Func::exp},
    {"log", Func::log},
    {"sqrt", Func::sqrt},
    {"sinh", Func::sinh},
    {"cosh", Func::cosh},
    {"asin", Func::asin},
    {"acos", Func::acos},
    {"atan", Func::atan},
}};

std::optional<Func> lookup_function(std::string_view name) {
  for (const auto& [n, f] : kFunctions)
    if (n == name) return f;
  return std::nullopt;
}

}  // namespace

std::string_view func_name(Func f) {
  for (const auto& [n, g] : kFunctions)
    if (g == f) return n;
  return "?";
}

struct Expr::Node {
  Op op = Op::number;
  double value = 0.0;
  std::string name;
  int exponent = 0;
  Func func = Func::sin;
  Expr a;
  Expr b;
};

Expr::Expr() : node_(nullptr) {}

Expr Expr::number(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::number;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::unary(Op op, Expr operand) {
  if (op != Op::negate) throw std::invalid_argument("Expr::unary: only negate is unary");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(operand);
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  if (op != Op::add && op != Op::subtract && op != Op::multiply && op != Op::divide)
    throw std::invalid_argument("Expr::binary: not a binary operator");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, int exponent) {
  auto n = std::make_shared<Node>();
  n->op = Op::power;
  n->a = std::move(base);
  n->exponent = exponent;
  return Expr(std::move(n));
}

Expr Expr::call(Func f, Expr arg) {
  auto n = std::make_shared<Node>();
  n->op = Op::call;
  n->func = f;
  n->a = std::move(arg);
  return Expr(std::move(n));
}

// A null node stands for the literal 0 so that default construction is cheap.
Op Expr::op() const { return node_ ? node_->op : Op::number; }
double Expr::value() const { return node_ ? node_->value : 0.0; }
const std::string& Expr::name() const {
  static const std::string empty;
  return node_ ? node_->name : empty;
}
int Expr::exponent() const { return node_ ? node_->exponent : 0; }
Func Expr::func() const { return node_ ? node_->func : Func::sin; }
const Expr& Expr::lhs() const {
  static const Expr zero;
  return node_ ? node_->a : zero;
}
const Expr& Expr::rhs() const {
  static const Expr zero;
  return node_ ? node_->b : zero;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::number:
      return a.value() == b.value();
    case Op::variable:
      return a.name() == b.name();
    case Op::negate:
      return a.lhs() == b.lhs();
    case Op::power:
      return a.exponent() == b.exponent() && a.lhs() == b.lhs();
    case Op::call:
      return a.func() == b.func() && a.lhs() == b.lhs();
    default:
      return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

// ---------------------------------------------------------------------------
// Numeric kernels shared by eval and CompiledExpr.

namespace {

double checked(double r, const char* what) {
  if (!std::isfinite(r)) throw EvalError(EvalError::Kind::domain, std::string("non-finite result in ") + what);
  return r;
}

double apply_func(Func f, double x) {
  switch (f) {
    case Func::sin: return std::sin(x);
    case Func::cos: return std::cos(x);
    case Func::tan: return checked(std::tan(x), "tan");
    case Func::exp: return checked(std::exp(x), "exp");
    case Func::log:
      if (!(x > 0.0)) throw EvalError(EvalError::Kind::domain, "log of non-positive value");
      return std::log(x);
    case Func::sqrt:
      if (x < 0.0) throw EvalError(EvalError::Kind::domain, "sqrt of negative value");
      return std::sqrt(x);
    case Func::sinh: return checked(std::sinh(x), "sinh");
    case Func::cosh: return checked(std::cosh(x), "cosh");
    case Func::asin:
      if (x < -1.0 || x > 1.0) throw EvalError(EvalError::Kind::domain, "asin argument outside [-1, 1]");
      return std::asin(x);
    case Func::acos:
      if (x < -1.0 || x > 1.0) throw EvalError(EvalError::Kind::domain, "acos argument outside [-1, 1]");
      return std::acos(x);
    case Func::atan: return std::atan(x);
  }
  return 0.0;
}

double divide(double a, double b) {
  if (b == 0.0) throw EvalError(EvalError::Kind::domain, "division by zero");
  return checked(a / b, "division");
}

double int_power(double base, int n) {
  if (n < 0 && base == 0.0) throw EvalError(EvalError::Kind::domain, "division by zero in negative power");
  double r = 1.0;
  double b = n < 0 ? 1.0 / base : base;
  unsigned k = n < 0 ? static_cast<unsigned>(-static_cast<long>(n)) : static_cast<unsigned>(n);
  while (k) {
    if (k & 1u) r *= b;
    b *= b;
    k >>= 1u;
  }
  return checked(r, "power");
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::add: return checked(a + b, "addition");
    case Op::subtract: return checked(a - b, "subtraction");
    case Op::multiply: return checked(a * b, "multiplication");
    case Op::divide: return divide(a, b);
    default: return 0.0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Simplifying constructors.

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.value() + b.value());
  if (a.is_number(0.0)) return b;
  if (b.is_number(0.0)) return a;
  if (b.op() == Op::negate) return Expr::binary(Op::subtract, a, b.lhs());
  return Expr::binary(Op::add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.value() - b.value());
  if (b.is_number(0.0)) return a;
  if (a.is_number(0.0)) return -b;
  if (b.op() == Op::negate) return Expr::binary(Op::add, a, b.lhs());
  return Expr::binary(Op::subtract, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.value() * b.value());
  if (a.is_number(0.0) || b.is_number(0.0)) return Expr::number(0.0);
  if (a.is_number(1.0)) return b;
  if (b.is_number(1.0)) return a;
  if (a.is_number(-1.0)) return -b;
  if (b.is_number(-1.0)) return -a;
  return Expr::binary(Op::multiply, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_number() && b.is_number() && b.value() != 0.0) return Expr::number(a.value() / b.value());
  if (a.is_number(0.0)) return Expr::number(0.0);
  if (b.is_number(1.0)) return a;
  return Expr::binary(Op::divide, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_number()) return Expr::number(-a.value());
  if (a.op() == Op::negate) return a.lhs();
  return Expr::unary(Op::negate, a);
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr::number(1.0);
  if (exponent == 1) return base;
  if (base.is_number()) {
    if (base.value() != 0.0 || exponent > 0) return Expr::number(int_power(base.value(), exponent));
  }
  if (base.op() == Op::power) {
    long e = static_cast<long>(base.exponent()) * exponent;
    if (e == static_cast<int>(e)) return pow(base.lhs(), static_cast<int>(e));
  }
  return Expr::power(base, exponent);
}

Expr apply(Func f, const Expr& arg) {
  if (arg.is_number()) {
    try {
      return Expr::number(apply_func(f, arg.value()));
    } catch (const EvalError&) {
      // keep unevaluated; the error surfaces at evaluation time
    }
  }
  return Expr::call(f, arg);
}

// ---------------------------------------------------------------------------
// Parser.

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse_all() {
    Expr e = expression();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = Expr::binary(Op::add, lhs, term());
      else if (accept('-'))
        lhs = Expr::binary(Op::subtract, lhs, term());
      else
        return lhs;
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = Expr::binary(Op::multiply, lhs, unary());
      else if (accept('/'))
        lhs = Expr::binary(Op::divide, lhs, unary());
      else
        return lhs;
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::unary(Op::negate, unary());
    return power();
  }

  Expr power() {
    Expr base = primary();
    skip_ws();
    std::size_t at = pos_;
    if (!accept('^')) return base;
    Expr exp = exponent();
    std::optional<double> v = fold(exp);
    if (!v || *v != std::nearbyint(*v) || std::abs(*v) > 1e6)
      throw ParseError(at + 1, "expected integer exponent");
    return Expr::power(base, static_cast<int>(*v));
  }

  Expr exponent() {
    if (accept('-')) return Expr::unary(Op::negate, exponent());
    return power();
  }

  static std::optional<double> fold(const Expr& e) {
    switch (e.op()) {
      case Op::number:
        return e.value();
      case Op::negate: {
        auto a = fold(e.lhs());
        if (!a) return std::nullopt;
        return -*a;
      }
      case Op::power: {
        auto a = fold(e.lhs());
        if (!a) return std::nullopt;
        try {
          return int_power(*a, e.exponent());
        } catch (const EvalError&) {
          return std::nullopt;
        }
      }
      case Op::add:
      case Op::subtract:
      case Op::multiply:
      case Op::divide: {
        auto a = fold(e.lhs());
        auto b = fold(e.rhs());
        if (!a || !b) return std::nullopt;
        try {
          return apply_binary(e.op(), *a, *b);
        } catch (const EvalError&) {
          return std::nullopt;
        }
      }
      default:
        return std::nullopt;
    }
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  Expr primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expected number, variable, function call or '('");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
      std::string_view name = src_.substr(start, pos_ - start);
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') {
        auto f = lookup_function(name);
        if (!f) throw ParseError(start, "unknown function '" + std::string(name) + "'");
        ++pos_;
        Expr arg = expression();
        if (!accept(')')) fail("expected ')' after function argument");
        return Expr::call(*f, arg);
      }
      if (name == "pi") return Expr::number(std::numbers::pi);
      return Expr::variable(std::string(name));
    }
    fail("expected number, variable, function call or '('");
  }

  Expr number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) throw ParseError(start, "malformed number");
    return Expr::number(v);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view source) { return Parser(source).parse_all(); }

// ---------------------------------------------------------------------------
// Printing.

namespace {

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::number: {
      std::array<char, 64> buf{};
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e.value());
      (void)ec;
      std::string s(buf.data(), ptr);
      if (e.value() < 0 || std::signbit(e.value())) {
        out += "(-";
        out += s.substr(1);
        out += ")";
      } else {
        out += s;
      }
      return;
    }
    case Op::variable:
      out += e.name();
      return;
    case Op::negate:
      out += "(-";
      print(e.lhs(), out);
      out += ")";
      return;
    case Op::power:
      // '^' is right-associative, so a power base needs its own parentheses.
      if (e.lhs().op() == Op::power) {
        out += "(";
        print(e.lhs(), out);
        out += ")";
      } else {
        print(e.lhs(), out);
      }
      out += "^";
      if (e.exponent() < 0)
        out += "(" + std::to_string(e.exponent()) + ")";
      else
        out += std::to_string(e.exponent());
      return;
    case Op::call:
      out += func_name(e.func());
      out += "(";
      print(e.lhs(), out);
      out += ")";
      return;
    default: {
      const char* sym = e.op() == Op::add ? " + " : e.op() == Op::subtract ? " - " : e.op() == Op::multiply ? "*" : "/";
      out += "(";
      print(e.lhs(), out);
      out += sym;
      print(e.rhs(), out);
      out += ")";
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation, differentiation, substitution.

double eval(const Expr& e, const Bindings& bindings) {
  switch (e.op()) {
    case Op::number:
      return e.value();
    case Op::variable: {
      auto it = bindings.find(e.name());
      if (it == bindings.end()) throw EvalError(EvalError::Kind::unbound_variable, "unbound variable '" + e.name() + "'");
      return it->second;
    }
    case Op::negate:
      return -eval(e.lhs(), bindings);
    case Op::power:
      return int_power(eval(e.lhs(), bindings), e.exponent());
    case Op::call:
      return apply_func(e.func(), eval(e.lhs(), bindings));
    default:
      return apply_binary(e.op(), eval(e.lhs(), bindings), eval(e.rhs(), bindings));
  }
}

namespace {

Expr diff_call(Func f, const Expr& u) {
  const Expr one = Expr::number(1.0);
  switch (f) {
    case Func::sin: return apply(Func::cos, u);
    case Func::cos: return -apply(Func::sin, u);
    case Func::tan: return one + pow(apply(Func::tan, u), 2);
    case Func::exp: return apply(Func::exp, u);
    case Func::log: return one / u;
    case Func::sqrt: return Expr::number(0.5) / apply(Func::sqrt, u);
    case Func::sinh: return apply(Func::cosh, u);
    case Func::cosh: return apply(Func::sinh, u);
    case Func::asin: return one / apply(Func::sqrt, one - pow(u, 2));
    case Func::acos: return -(one / apply(Func::sqrt, one - pow(u, 2)));
    case Func::atan: return one / (one + pow(u, 2));
  }
  return Expr::number(0.0);
}

}  // namespace

Expr diff(const Expr& e, std::string_view v) {
  switch (e.op()) {
    case Op::number:
      return Expr::number(0.0);
    case Op::variable:
      return Expr::number(e.name() == v ? 1.0 : 0.0);
    case Op::negate:
      return -diff(e.lhs(), v);
    case Op::add:
      return diff(e.lhs(), v) + diff(e.rhs(), v);
    case Op::subtract:
      return diff(e.lhs(), v) - diff(e.rhs(), v);
    case Op::multiply: {
      Expr da = diff(e.lhs(), v);
      Expr db = diff(e.rhs(), v);
      return da * e.rhs() + e.lhs() * db;
    }
    case Op::divide: {
      Expr da = diff(e.lhs(), v);
      Expr db = diff(e.rhs(), v);
      if (db.is_number(0.0)) return da / e.rhs();
      return (da * e.rhs() - e.lhs() * db) / pow(e.rhs(), 2);
    }
    case Op::power: {
      Expr da = diff(e.lhs(), v);
      if (da.is_number(0.0)) return Expr::number(0.0);
      int n = e.exponent();
      return Expr::number(n) * pow(e.lhs(), n - 1) * da;
    }
    case Op::call: {
      Expr da = diff(e.lhs(), v);
      if (da.is_number(0.0)) return Expr::number(0.0);
      return diff_call(e.func(), e.lhs()) * da;
    }
  }
  return Expr::number(0.0);
}

Expr substitute(const Expr& e, const Substitution& s) {
  switch (e.op()) {
    case Op::number:
      return e;
    case Op::variable: {
      auto it = s.find(e.name());
      return it == s.end() ? e : it->second;
    }
    case Op::negate:
      return -substitute(e.lhs(), s);
    case Op::power:
      return pow(substitute(e.lhs(), s), e.exponent());
    case Op::call:
      return apply(e.func(), substitute(e.lhs(), s));
    case Op::add:
      return substitute(e.lhs(), s) + substitute(e.rhs(), s);
    case Op::subtract:
      return substitute(e.lhs(), s) - substitute(e.rhs(), s);
    case Op::multiply:
      return substitute(e.lhs(), s) * substitute(e.rhs(), s);
    case Op::divide:
      return substitute(e.lhs(), s) / substitute(e.rhs(), s);
  }
  return e;
}

namespace {
void collect(const Expr& e, std::set<std::string>& out) {
  switch (e.op()) {
    case Op::number:
      return;
    case Op::variable:
      out.insert(e.name());
      return;
    case Op::negate:
    case Op::power:
    case Op::call:
      collect(e.lhs(), out);
      return;
    default:
      collect(e.lhs(), out);
      collect(e.rhs(), out);
  }
}
}  // namespace

std::set<std::string> variables_of(const Expr& e) {
  std::set<std::string> out;
  collect(e, out);
  return out;
}

bool depends_on(const Expr& e, std::string_view v) {
  switch (e.op()) {
    case Op::number:
      return false;
    case Op::variable:
      return e.name() == v;
    case Op::negate:
    case Op::power:
    case Op::call:
      return depends_on(e.lhs(), v);
    default:
      return depends_on(e.lhs(), v) || depends_on(e.rhs(), v);
  }
}

std::size_t node_count(const Expr& e) {
  switch (e.op()) {
    case Op::number:
    case Op::variable:
      return 1;
    case Op::negate:
    case Op::power:
    case Op::call:
      return 1 + node_count(e.lhs());
    default:
      return 1 + node_count(e.lhs()) + node_count(e.rhs());
  }
}

// ---------------------------------------------------------------------------
// Compiled evaluation.

namespace {

struct Emitter {
  std::span<const std::string> vars;
  std::size_t depth = 0;
  std::size_t max_depth = 0;

  template <class Code>
  void emit(const Expr& e, Code& code) {
    using Instr = typename Code::value_type;
    switch (e.op()) {
      case Op::number:
        code.push_back(Instr{Op::number, Func::sin, 0, e.value()});
        push();
        return;
      case Op::variable: {
        auto it = std::find(vars.begin(), vars.end(), e.name());
        if (it == vars.end())
          throw EvalError(EvalError::Kind::unbound_variable, "unbound variable '" + e.name() + "'");
        code.push_back(Instr{Op::variable, Func::sin, static_cast<int>(it - vars.begin()), 0.0});
        push();
        return;
      }
      case Op::negate:
        emit(e.lhs(), code);
        code.push_back(Instr{Op::negate, Func::sin, 0, 0.0});
        return;
      case Op::power:
        emit(e.lhs(), code);
        code.push_back(Instr{Op::power, Func::sin, e.exponent(), 0.0});
        return;
      case Op::call:
        emit(e.lhs(), code);
        code.push_back(Instr{Op::call, e.func(), 0, 0.0});
        return;
      default:
        emit(e.lhs(), code);
        emit(e.rhs(), code);
        code.push_back(Instr{e.op(), Func::sin, 0, 0.0});
        --depth;
    }
  }

  void push() {
    ++depth;
    max_depth = std::max(max_depth, depth);
  }
};

}  // namespace

CompiledExpr::CompiledExpr(const Expr& e, std::span<const std::string> variables) {
  Emitter em{variables};
  em.emit(e, code_);
  max_stack_ = em.max_depth;
}

double CompiledExpr::operator()(std::span<const double> values) const {
  if (code_.empty()) return 0.0;
  constexpr std::size_t kInline = 64;
  std::array<double, kInline> small{};
  std::vector<double> big;
  double* stack = small.data();
  if (max_stack_ > kInline) {
    big.resize(max_stack_);
    stack = big.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::number:
        stack[sp++] = in.value;
        break;
      case Op::variable:
        stack[sp++] = values[static_cast<std::size_t>(in.index)];
        break;
      case Op::negate:
        stack[sp - 1] = -stack[sp - 1];
        break;
      case Op::power:
        stack[sp - 1] = int_power(stack[sp - 1], in.index);
        break;
      case Op::call:
        stack[sp - 1] = apply_func(in.func, stack[sp - 1]);
        break;
      default:
        stack[sp - 2] = apply_binary(in.op, stack[sp - 2], stack[sp - 1]);
        --sp;
    }
  }
  return stack[0];
}

// ---------------------------------------------------------------------------

std::vector<std::string> temporal_names(int p) {
  std::vector<std::string> out;
  for (int a = 1; a <= p; ++a) out.push_back("t" + std::to_string(a));
  return out;
}

std::vector<std::string> spatial_names(int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

std::string jet_name(int i, int alpha) { return "x" + std::to_string(i + 1) + "_" + std::to_string(alpha + 1); }

std::vector<std::string> jet_names(int p, int n) {
  std::vector<std::string> out = temporal_names(p);
  for (auto& s : spatial_names(n)) out.push_back(std::move(s));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a) out.push_back(jet_name(i, a));
  return out;
}

}  // namespace jetflow
