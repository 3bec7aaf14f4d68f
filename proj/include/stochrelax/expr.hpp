#ifndef STOCHRELAX_EXPR_HPP
#define STOCHRELAX_EXPR_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"
#include "mccormick.hpp"

namespace stochrelax {

enum class OpKind { Constant, Time, Param, Noise, State, Add, Sub, Mul, Div, Neg, Pow, Exp };

//! Which variable families an expression may reference
struct VariableScope {
  bool time = false;
  int np = 0;
  int nw = 0;
  int nx = 0;
};

////////////////////////////////////////////////////////////////////////
//! Expression DAG in topological order (children precede parents).
//!
//! A graph is immutable once built; evaluation writes into a caller-owned
//! scratch buffer so one graph may be evaluated concurrently.
////////////////////////////////////////////////////////////////////////
class ExprGraph {
 public:
  struct Node {
    OpKind kind;
    int lhs = -1;
    int rhs = -1;
    double value = 0.0;  // constant payload
    int index = 0;       // variable index (0-based) or integer exponent

    friend bool operator==(const Node&, const Node&) = default;
  };

  int constant(double v) { return push({OpKind::Constant, -1, -1, v, 0}); }
  int variable(OpKind kind, int index) { return push({kind, -1, -1, 0.0, index}); }
  int unary(OpKind kind, int child, int exponent = 0) {
    check_child(child);
    return push({kind, child, -1, 0.0, exponent});
  }
  int binary(OpKind kind, int lhs, int rhs) {
    check_child(lhs);
    check_child(rhs);
    return push({kind, lhs, rhs, 0.0, 0});
  }

  void add_root(int node, std::string name = {}) {
    check_child(node);
    roots_.push_back(node);
    names_.push_back(std::move(name));
    std::vector<char> used(nodes_.size(), 0);
    mark(node, used);
    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
      if (used[i]) order.push_back(i);
    root_nodes_.push_back(std::move(order));
  }

  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::span<const int> roots() const noexcept { return roots_; }
  std::size_t outputs() const noexcept { return roots_.size(); }
  const std::string& name(std::size_t root) const { return names_.at(root); }
  //! Nodes reachable from one root, in topological order
  std::span<const int> support(std::size_t root) const { return root_nodes_.at(root); }

  //! Number of variables each family needs (highest referenced index + 1)
  VariableScope usage() const {
    VariableScope s{false, 0, 0, 0};
    for (const auto& n : nodes_) {
      switch (n.kind) {
        case OpKind::Time: s.time = true; break;
        case OpKind::Param: s.np = std::max(s.np, n.index + 1); break;
        case OpKind::Noise: s.nw = std::max(s.nw, n.index + 1); break;
        case OpKind::State: s.nx = std::max(s.nx, n.index + 1); break;
        default: break;
      }
    }
    return s;
  }

  friend bool operator==(const ExprGraph& a, const ExprGraph& b) {
    return a.nodes_ == b.nodes_ && a.roots_ == b.roots_;
  }

 private:
  int push(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }
  void check_child(int i) const {
    if (i < 0 || i >= static_cast<int>(nodes_.size()))
      throw Error(ErrorKind::InvalidArgument, "expression child index out of range");
  }
  void mark(int i, std::vector<char>& used) const {
    if (used[i]) return;
    used[i] = 1;
    if (nodes_[i].lhs >= 0) mark(nodes_[i].lhs, used);
    if (nodes_[i].rhs >= 0) mark(nodes_[i].rhs, used);
  }

  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<std::string> names_;
  std::vector<std::vector<int>> root_nodes_;
};

//! Variable assignment for one evaluation
template <class T>
struct Env {
  T t{};
  std::span<const T> p;
  std::span<const T> w;
  std::span<const T> x;
};

namespace detail {

template <class T>
T eval_node(const ExprGraph::Node& n, std::span<const T> vals, const Env<T>& env) {
  auto var = [](std::span<const T> v, int i) -> T {
    if (i >= static_cast<int>(v.size()))
      throw Error(ErrorKind::DimensionError, "environment is missing a referenced variable");
    return v[i];
  };
  switch (n.kind) {
    case OpKind::Constant: return T(n.value);
    case OpKind::Time: return env.t;
    case OpKind::Param: return var(env.p, n.index);
    case OpKind::Noise: return var(env.w, n.index);
    case OpKind::State: return var(env.x, n.index);
    case OpKind::Add: return vals[n.lhs] + vals[n.rhs];
    case OpKind::Sub: return vals[n.lhs] - vals[n.rhs];
    case OpKind::Mul: return vals[n.lhs] * vals[n.rhs];
    case OpKind::Div:
      if constexpr (std::is_same_v<T, double>) {
        if (vals[n.rhs] == 0.0) throw Error(ErrorKind::EvalDomainError, "division by zero");
      }
      return vals[n.lhs] / vals[n.rhs];
    case OpKind::Neg: return -vals[n.lhs];
    case OpKind::Pow:
      if constexpr (std::is_same_v<T, double>) {
        if (n.index < 0 && vals[n.lhs] == 0.0)
          throw Error(ErrorKind::EvalDomainError, "negative power of zero");
        return std::pow(vals[n.lhs], n.index);
      } else if constexpr (std::is_same_v<T, Interval>) {
        return n.index >= 0 ? pow(vals[n.lhs], n.index) : inv(pow(vals[n.lhs], -n.index));
      } else {
        return pow(vals[n.lhs], n.index);
      }
    case OpKind::Exp:
      if constexpr (std::is_same_v<T, double>) {
        return std::exp(vals[n.lhs]);
      } else {
        return exp(vals[n.lhs]);
      }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown expression node");
}

}  // namespace detail

//! Evaluates every output of `g`; `scratch` is resized as needed.
//! Works for double (real semantics), Interval and McCormick.
template <class T>
void evaluate(const ExprGraph& g, const Env<T>& env, std::vector<T>& scratch, std::vector<T>& out) {
  const auto nodes = g.nodes();
  scratch.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    scratch[i] = detail::eval_node<T>(nodes[i], scratch, env);
  out.resize(g.outputs());
  for (std::size_t r = 0; r < g.outputs(); ++r) out[r] = scratch[g.roots()[r]];
}

template <class T>
std::vector<T> evaluate(const ExprGraph& g, const Env<T>& env) {
  std::vector<T> scratch, out;
  evaluate(g, env, scratch, out);
  return out;
}

//! Evaluates a single output, touching only the nodes it depends on
template <class T>
T evaluate_output(const ExprGraph& g, std::size_t root, const Env<T>& env, std::vector<T>& scratch) {
  const auto nodes = g.nodes();
  scratch.resize(nodes.size());
  for (int i : g.support(root)) scratch[i] = detail::eval_node<T>(nodes[i], scratch, env);
  return scratch[g.roots()[root]];
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

//! Fully parenthesized text form; parse_expression() reads it back to an equal graph
inline std::string to_string(const ExprGraph& g, std::size_t root) {
  const auto nodes = g.nodes();
  auto rec = [&](auto&& self, int i) -> std::string {
    const auto& n = nodes[i];
    switch (n.kind) {
      case OpKind::Constant: return format_number(n.value);
      case OpKind::Time: return "t";
      case OpKind::Param: return "p" + std::to_string(n.index + 1);
      case OpKind::Noise: return "w" + std::to_string(n.index + 1);
      case OpKind::State: return "x" + std::to_string(n.index + 1);
      case OpKind::Add: return "(" + self(self, n.lhs) + " + " + self(self, n.rhs) + ")";
      case OpKind::Sub: return "(" + self(self, n.lhs) + " - " + self(self, n.rhs) + ")";
      case OpKind::Mul: return "(" + self(self, n.lhs) + " * " + self(self, n.rhs) + ")";
      case OpKind::Div: return "(" + self(self, n.lhs) + " / " + self(self, n.rhs) + ")";
      case OpKind::Neg: return "(-(" + self(self, n.lhs) + "))";
      case OpKind::Pow: return "(" + self(self, n.lhs) + ")^" + std::to_string(n.index);
      case OpKind::Exp: return "exp(" + self(self, n.lhs) + ")";
    }
    return {};
  };
  return rec(rec, g.roots()[root]);
}

////////////////////////////////////////////////////////////////////////
// Recursive-descent parser for the expression sub-language:
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := primary ('^' ['-'] integer)?
//   primary := number | t | pN | wN | xN | exp '(' expr ')' | '(' expr ')'
// Unary minus applied directly to a literal (not raised to a power) folds
// into a negative constant.
////////////////////////////////////////////////////////////////////////
class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const VariableScope& scope, ExprGraph& graph, int line = 1,
                   int column0 = 1)
      : text_(text), scope_(scope), g_(graph), line_(line), column0_(column0) {}

  int parse() {
    const int node = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, column0_ + static_cast<int>(pos_));
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

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+')) lhs = g_.binary(OpKind::Add, lhs, term());
      else if (accept('-')) lhs = g_.binary(OpKind::Sub, lhs, term());
      else return lhs;
    }
  }
  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) lhs = g_.binary(OpKind::Mul, lhs, unary());
      else if (accept('/')) lhs = g_.binary(OpKind::Div, lhs, unary());
      else return lhs;
    }
  }
  int unary() {
    if (accept('-')) {
      double literal = 0.0;
      if (negatable_literal(literal)) return g_.constant(-literal);
      return g_.unary(OpKind::Neg, unary());
    }
    return power();
  }
  // A bare literal after unary minus, not raised to a power, becomes a negative constant.
  bool negatable_literal(double& v) {
    skip_ws();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') return false;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc() || !std::isfinite(v)) return false;
    std::size_t end = static_cast<std::size_t>(ptr - text_.data());
    std::size_t look = end;
    while (look < text_.size() && std::isspace(static_cast<unsigned char>(text_[look]))) ++look;
    if (look < text_.size() && text_[look] == '^') return false;
    pos_ = end;
    return true;
  }
  int power() {
    const int base = primary();
    if (!accept('^')) return base;
    skip_ws();
    bool negative = false;
    if (pos_ < text_.size() && text_[pos_] == '-') {
      negative = true;
      ++pos_;
    }
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer exponent after '^'");
    int k = 0;
    std::from_chars(text_.data() + start, text_.data() + pos_, k);
    return g_.unary(OpKind::Pow, base, negative ? -k : k);
  }
  int primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      const int node = expr();
      if (!accept(')')) fail("expected ')'");
      return node;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }
  int number() {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc() || !std::isfinite(v)) fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return g_.constant(v);
  }
  int identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view id = text_.substr(start, pos_ - start);
    if (id == "exp") {
      if (!accept('(')) fail("expected '(' after exp");
      const int arg = expr();
      if (!accept(')')) fail("expected ')'");
      return g_.unary(OpKind::Exp, arg);
    }
    if (id == "t") {
      if (!scope_.time) dimension_error(id, start);
      return g_.variable(OpKind::Time, 0);
    }
    const char family = id[0];
    const std::string_view digits = id.substr(1);
    int index = 0;
    const bool numeric = !digits.empty() &&
        std::from_chars(digits.data(), digits.data() + digits.size(), index).ptr ==
            digits.data() + digits.size();
    if (!numeric || (family != 'p' && family != 'w' && family != 'x')) {
      pos_ = start;
      fail("unknown identifier '" + std::string(id) + "'");
    }
    const int limit = family == 'p' ? scope_.np : family == 'w' ? scope_.nw : scope_.nx;
    if (index < 1 || index > limit) dimension_error(id, start);
    const OpKind kind = family == 'p' ? OpKind::Param : family == 'w' ? OpKind::Noise : OpKind::State;
    return g_.variable(kind, index - 1);
  }
  [[noreturn]] void dimension_error(std::string_view id, std::size_t at) const {
    throw Error(ErrorKind::DimensionError,
                "line " + std::to_string(line_) + ", column " +
                    std::to_string(column0_ + static_cast<int>(at)) + ": variable '" +
                    std::string(id) + "' is not declared in this context");
  }
  std::string_view text_;
  VariableScope scope_;
  ExprGraph& g_;
  int line_;
  int column0_;
  std::size_t pos_ = 0;
};

//! Parses `text` and appends it to `graph` as a new output named `name`
inline int parse_expression(std::string_view text, const VariableScope& scope, ExprGraph& graph,
                            std::string name = {}, int line = 1, int column0 = 1) {
  const int node = ExpressionParser(text, scope, graph, line, column0).parse();
  graph.add_root(node, std::move(name));
  return node;
}

}  // namespace stochrelax

#endif  // STOCHRELAX_EXPR_HPP
