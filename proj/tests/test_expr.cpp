#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "stochrelax/expr.hpp"
#include "stochrelax/mccormick.hpp"
#include "stochrelax/model.hpp"
#include "test_support.hpp"

using namespace stochrelax;
using stochrelax::testing::Gen;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no stochrelax::Error thrown";
  return ErrorKind::InvalidArgument;
}

ExprGraph parse_one(const std::string& text, VariableScope scope = {true, 2, 2, 2}) {
  ExprGraph g;
  parse_expression(text, scope, g);
  return g;
}

double eval_x(const ExprGraph& g, std::vector<double> x) { return evaluate<double>(g, {0.0, {}, {}, x})[0]; }

// The circuit model with the [f] section swapped for `f_lines`
std::string circuit_with_f(const std::string& f_lines) {
  std::string text = circuit_model_text();
  const auto begin = text.find("[f]\n"), end = text.find("[x0]");
  return text.substr(0, begin) + "[f]\n" + f_lines + "\n" + text.substr(end);
}

}  // namespace

TEST(Model, CircuitParses) {
  const Model m = circuit_model();
  EXPECT_EQ(m.np, 2);
  EXPECT_EQ(m.nw, 2);
  EXPECT_EQ(m.nx, 2);
  EXPECT_EQ(m.t0, 0.0);
  EXPECT_EQ(m.tf, 5.0);
  EXPECT_EQ(to_string(m.f, 0), "(p1 * x2)");
  EXPECT_EQ(m.f.name(0), "f1");
  EXPECT_EQ(to_string(m.x0, 0), "w1");
  EXPECT_EQ(to_string(m.x0, 1), "w2");
  EXPECT_EQ(to_string(m.g, 0), "x1");
  EXPECT_EQ(m.pbox[1], Interval(0.1, 0.3));
  EXPECT_EQ(m.wbox[0], Interval(0.7, 1.3));
  const auto& tn = std::get<TruncatedNormal>(m.dist[0]);
  EXPECT_EQ(tn.mu, 1.0);
  EXPECT_EQ(tn.sigma, 0.1);
}

TEST(Model, CircuitFileMatchesBuiltin) {
  const Model file = load_model(std::string(STOCHRELAX_MODELS) + "/circuit.model");
  const Model builtin = circuit_model();
  EXPECT_EQ(file.f, builtin.f);
  EXPECT_EQ(file.x0, builtin.x0);
  EXPECT_EQ(file.g, builtin.g);
  EXPECT_EQ(file.pbox, builtin.pbox);
}

TEST(Model, InitialConditionIsNoiseVariable) {
  const Model m = circuit_model();
  const std::vector<double> p = {0.2, 0.2}, w = {0.93, 1.21};
  const auto x0 = evaluate<double>(m.x0, {0.0, p, w, {}});
  EXPECT_EQ(x0[0], 0.93);
  EXPECT_EQ(x0[1], 1.21);
}

TEST(Model, UndeclaredVariable) {
  EXPECT_EQ(kind_of([] { parse_model(circuit_with_f("f1 = p3*x1\nf2 = x2")); }), ErrorKind::DimensionError);
  EXPECT_EQ(kind_of([] { parse_model(circuit_with_f("f1 = x3\nf2 = x2")); }), ErrorKind::DimensionError);
  EXPECT_EQ(kind_of([] { parse_one("x1", {true, 0, 0, 0}); }), ErrorKind::DimensionError);
  EXPECT_EQ(kind_of([] { parse_one("t", {false, 1, 1, 1}); }), ErrorKind::DimensionError);
}

TEST(Model, ParseErrorsCarryPosition) {
  try {
    parse_model(circuit_with_f("f1 = p1*x2\nf2 = p2 * $"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    // [f] is line 25 of the built-in text, so f2 lands on line 27
    EXPECT_EQ(e.line(), 27);
    EXPECT_EQ(e.column(), 11);
  }
  EXPECT_EQ(kind_of([] { parse_one("p1 +"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_one("(p1"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_one("sin(p1)"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_one("x1^y"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_model("[dims]\nnp = 1\n[bogus]\n"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse_model("[dims]\nnp = 1\nnw = 1\nnx = 1\n"); }), ErrorKind::ParseError);
}

TEST(Model, ValidationErrors) {
  std::string text = circuit_model_text();
  const std::string bad_support = [&] {
    std::string s = text;
    s.replace(s.find("[wbox]\n0.7, 1.3"), 15, "[wbox]\n0.6, 1.3");
    return s;
  }();
  EXPECT_EQ(kind_of([&] { parse_model(bad_support); }), ErrorKind::InvalidArgument);
  const std::string bad_horizon = [&] {
    std::string s = text;
    s.replace(s.find("tf = 5"), 6, "tf = 0");
    return s;
  }();
  EXPECT_EQ(kind_of([&] { parse_model(bad_horizon); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { parse_model(circuit_with_f("f1 = p1*x2")); }), ErrorKind::DimensionError);
}

TEST(Model, TextRoundTrip) {
  const Model m = circuit_model();
  const Model back = parse_model(to_text(m));
  EXPECT_EQ(back.f, m.f);
  EXPECT_EQ(back.x0, m.x0);
  EXPECT_EQ(back.g, m.g);
  EXPECT_EQ(back.pbox, m.pbox);
  EXPECT_EQ(back.wbox, m.wbox);
  EXPECT_EQ(to_text(back), to_text(m));
}

TEST(EvalReal, Examples) {
  const Model m = circuit_model();
  const std::vector<double> p = {0.2, 0.2}, w = {1.0, 1.0}, x = {1.0, 1.0};
  const auto f = evaluate<double>(m.f, {0.0, p, w, x});
  EXPECT_DOUBLE_EQ(f[0], 0.2);
  EXPECT_NEAR(f[1], -0.2 * (1.0 - 1.0 + 1.0 / 3.0), 1e-15);
  EXPECT_NEAR(f[1], -0.0666666666666667, 1e-15);
  EXPECT_EQ(eval_x(parse_one("3"), {}), 3.0);
  EXPECT_EQ(kind_of([] { eval_x(parse_one("x1/0"), {1.0, 1.0}); }), ErrorKind::EvalDomainError);
  EXPECT_EQ(eval_x(parse_one("-3^2"), {}), -9.0);
  EXPECT_EQ(eval_x(parse_one("2^-1"), {}), 0.5);
  EXPECT_EQ(eval_x(parse_one("x1 - -x2"), {1.0, 2.0}), 3.0);
  EXPECT_NEAR(eval_x(parse_one("exp(x1)*x2^3/3"), {0.5, 2.0}), std::exp(0.5) * 8.0 / 3.0, 1e-15);
  EXPECT_EQ(evaluate<double>(parse_one("t*p1"), {2.0, std::vector<double>{3.0}, {}, {}})[0], 6.0);
}

TEST(EvalInterval, Examples) {
  const Model m = circuit_model();
  const IntervalBox P = {{0.1, 0.3}, {0.1, 0.3}}, W = {{0.7, 1.3}, {0.7, 1.3}}, X = {{0.7, 1.3}, {0.7, 1.3}};
  const Interval f1 = evaluate<Interval>(m.f, {Interval(0.0), P, W, X})[0];
  EXPECT_NEAR(f1.lo(), 0.07, 1e-15);
  EXPECT_NEAR(f1.hi(), 0.39, 1e-15);
  const Interval x01 = evaluate<Interval>(m.x0, {Interval(0.0), P, W, {}})[0];
  EXPECT_EQ(x01, Interval(0.7, 1.3));
  EXPECT_EQ(evaluate<Interval>(parse_one("3"), {Interval(0.0), {}, {}, {}})[0], Interval(3.0));
}

TEST(EvalMcCormick, Examples) {
  const ExprGraph lin = parse_one("p1 + w1");
  const std::vector<McCormick> p = {McCormick::variable(0.2, {0.1, 0.3})};
  const std::vector<McCormick> w = {McCormick::variable(0.9, {0.7, 1.3})};
  const McCormick s = evaluate<McCormick>(lin, {McCormick(0.0), p, w, {}})[0];
  EXPECT_EQ(s.cv(), 0.2 + 0.9);
  EXPECT_EQ(s.cc(), 0.2 + 0.9);

  const ExprGraph bil = parse_one("p1*x2");
  const std::vector<McCormick> x = {McCormick::variable(1.0, {0.7, 1.3}), McCormick::variable(1.0, {0.7, 1.3})};
  const McCormick b = evaluate<McCormick>(bil, {McCormick(0.0), p, {}, x})[0];
  const auto env = stochrelax::testing::bilinear_envelope({0.1, 0.3}, {0.7, 1.3}, 0.2, 1.0);
  EXPECT_NEAR(b.cv(), env.convex, 1e-14);
  EXPECT_NEAR(b.cc(), env.concave, 1e-14);
  EXPECT_LT(b.cv(), 0.2);
  EXPECT_GT(b.cc(), 0.2);

  const std::vector<McCormick> pd = {McCormick(0.2)}, xd = {McCormick(1.1), McCormick(0.9)};
  const McCormick d = evaluate<McCormick>(parse_one("p1*x2 - x1^3/3 + exp(x2)"), {McCormick(0.0), pd, {}, xd})[0];
  const double real = 0.2 * 0.9 - std::pow(1.1, 3) / 3 + std::exp(0.9);
  EXPECT_NEAR(d.cv(), real, 1e-14);
  EXPECT_NEAR(d.cc(), real, 1e-14);
}

TEST(ExprProperty, ThreeSemanticsCoherence) {
  Gen gen(31);
  for (int c = 0; c < 100; ++c) {
    ExprGraph g;
    g.add_root(stochrelax::testing::random_expression(gen, g, 3, 4));
    IntervalBox box;
    for (int i = 0; i < 3; ++i) box.push_back(gen.interval(-2.0, 2.0));
    const Interval iv = evaluate<Interval>(g, {Interval(0.0), {}, {}, box})[0];
    for (int i = 0; i < 100; ++i) {
      std::vector<double> z;
      std::vector<McCormick> zm;
      for (const auto& b : box) {
        z.push_back(gen.point(b));
        zm.push_back(McCormick::variable(z.back(), b));
      }
      const double v = eval_x(g, z);
      const McCormick m = evaluate<McCormick>(g, {McCormick(0.0), {}, {}, zm})[0];
      const double slack = 1e-10 * (1.0 + std::fabs(v));
      ASSERT_TRUE(inflate(iv, 1e-12).contains(v) || (v >= iv.lo() - slack && v <= iv.hi() + slack))
          << to_string(g, 0);
      ASSERT_LE(m.cv(), v + slack) << to_string(g, 0);
      ASSERT_GE(m.cc(), v - slack) << to_string(g, 0);
    }
  }
}

TEST(ExprProperty, ParserRoundTrip) {
  Gen gen(32);
  const VariableScope scope{true, 2, 2, 3};
  for (int c = 0; c < 500; ++c) {
    ExprGraph g;
    g.add_root(stochrelax::testing::random_expression(gen, g, 3, 5));
    const std::string text = to_string(g, 0);
    const ExprGraph once = parse_one(text, scope);
    EXPECT_EQ(to_string(once, 0), text);
    const ExprGraph twice = parse_one(to_string(once, 0), scope);
    EXPECT_EQ(twice, once) << text;
    std::vector<double> z = {gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1)};
    EXPECT_EQ(eval_x(once, z), eval_x(g, z)) << text;
  }
  for (const char* text : {"-3^2", "-(3)", "2^-1", "x1 - -x2", "-x1^2", "1e-3*x2", "-0.1*(x1 - 2.5e+2)",
                           "t*p1 + w2/(1 + x3^2)"}) {
    const ExprGraph once = parse_one(text, scope);
    const ExprGraph twice = parse_one(to_string(once, 0), scope);
    EXPECT_EQ(twice, once) << text;
  }
}
