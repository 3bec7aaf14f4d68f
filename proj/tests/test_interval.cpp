#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "stochrelax/interval.hpp"
#include "test_support.hpp"

using stochrelax::Error;
using stochrelax::ErrorKind;
using stochrelax::Interval;

namespace {

void expect_interval(const Interval& got, double lo, double hi, double tol = 0.0) {
  EXPECT_NEAR(got.lo(), lo, tol);
  EXPECT_NEAR(got.hi(), hi, tol);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no stochrelax::Error thrown";
  return ErrorKind::InvalidArgument;
}

struct BinaryCase {
  const char* name;
  std::function<Interval(const Interval&, const Interval&)> iv;
  std::function<double(double, double)> real;
};

std::vector<BinaryCase> binary_ops() {
  return {
      {"add", [](auto& a, auto& b) { return a + b; }, [](double x, double y) { return x + y; }},
      {"sub", [](auto& a, auto& b) { return a - b; }, [](double x, double y) { return x - y; }},
      {"mul", [](auto& a, auto& b) { return a * b; }, [](double x, double y) { return x * y; }},
  };
}

}  // namespace

TEST(Interval, Construction) {
  const Interval a(1.0, 2.0);
  EXPECT_EQ(a.lo(), 1.0);
  EXPECT_EQ(a.hi(), 2.0);
  EXPECT_EQ(a.width(), 1.0);
  EXPECT_EQ(a.mid(), 1.5);
  EXPECT_TRUE(Interval(3.0).is_point());
  EXPECT_EQ(kind_of([] { Interval(2.0, 1.0); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { Interval(0.0, INFINITY); }), ErrorKind::NonFiniteState);
  EXPECT_EQ(kind_of([] { Interval(NAN, 1.0); }), ErrorKind::NonFiniteState);
}

TEST(Interval, AddExamples) {
  expect_interval(Interval(1, 2) + Interval(3, 4), 4, 6);
  expect_interval(Interval(0, 0) + Interval(-1, 1), -1, 1);
  expect_interval(Interval(-2, -1) + Interval(1, 2), -1, 1);
}

TEST(Interval, MulExamples) {
  expect_interval(Interval(-1, 2) * Interval(3, 4), -4, 8);
  expect_interval(Interval(0, 1) * Interval(0, 1), 0, 1);
  expect_interval(Interval(-1, 1) * Interval(-1, 1), -1, 1);
}

TEST(Interval, DivExamples) {
  expect_interval(Interval(1, 2) / Interval(2, 4), 0.25, 1);
  expect_interval(Interval(1, 1) / Interval(1, 1), 1, 1);
  EXPECT_EQ(kind_of([] { Interval(1, 2) / Interval(-1, 1); }), ErrorKind::DivisionByZeroInterval);
  EXPECT_EQ(kind_of([] { Interval(1, 2) / Interval(0, 1); }), ErrorKind::DivisionByZeroInterval);
}

TEST(Interval, PowExamples) {
  expect_interval(pow(Interval(-1, 2), 3), -1, 8);
  expect_interval(pow(Interval(-2, 1), 2), 0, 4);
  expect_interval(pow(Interval(0.7, 1.3), 1), 0.7, 1.3);
  expect_interval(pow(Interval(-3, -2), 2), 4, 9);
  expect_interval(pow(Interval(-3, 2), 0), 1, 1);
}

TEST(Interval, ElementaryExamples) {
  expect_interval(exp(Interval(0, 0)), 1, 1);
  expect_interval(-Interval(1, 2), -2, -1);
  expect_interval(Interval(1, 3) - Interval(0, 1), 0, 3);
  expect_interval(exp(Interval(-1, 1)), std::exp(-1.0), std::exp(1.0));
}

TEST(Interval, HullAndInflate) {
  expect_interval(hull(Interval(0, 1), Interval(3, 4)), 0, 4);
  expect_interval(inflate(Interval(1, 3), 0.0), 1, 3);
  const Interval w = inflate(Interval(1, 3), 0.1);
  EXPECT_LT(w.lo(), 1.0);
  EXPECT_GT(w.hi(), 3.0);
  EXPECT_TRUE(w.contains(Interval(1, 3)));
}

TEST(IntervalProperty, InclusionMonotonicity) {
  stochrelax::testing::Gen gen(11);
  for (const auto& op : binary_ops()) {
    for (int i = 0; i < 1000; ++i) {
      const Interval A = gen.interval(), B = gen.interval();
      const Interval a = gen.inside(A), b = gen.inside(B);
      const Interval inner = op.iv(a, b), outer = op.iv(A, B);
      const double slack = 1e-12 * (1.0 + outer.mag());
      EXPECT_GE(inner.lo(), outer.lo() - slack) << op.name;
      EXPECT_LE(inner.hi(), outer.hi() + slack) << op.name;
    }
  }
  for (int i = 0; i < 1000; ++i) {
    const Interval A = gen.interval(), a = gen.inside(A);
    const int k = gen.integer(0, 5);
    EXPECT_TRUE(pow(A, k).contains(pow(a, k)));
    EXPECT_TRUE(exp(A).contains(exp(a)));
    const Interval D = gen.interval(0.5, 3.0), d = gen.inside(D);
    EXPECT_TRUE(inflate(A / D, 1e-12).contains(a / d));
  }
}

TEST(IntervalProperty, Containment) {
  stochrelax::testing::Gen gen(12);
  for (const auto& op : binary_ops()) {
    const Interval a = gen.interval(), b = gen.interval();
    const Interval r = op.iv(a, b);
    const double slack = 1e-12 * (1.0 + r.mag());
    for (int i = 0; i < 1000; ++i) {
      const double v = op.real(gen.point(a), gen.point(b));
      EXPECT_GE(v, r.lo() - slack) << op.name;
      EXPECT_LE(v, r.hi() + slack) << op.name;
    }
  }
  const Interval a = gen.interval(-2.0, 2.0), d(0.25, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = gen.point(a), y = gen.point(d);
    const int k = gen.integer(0, 5);
    const Interval pk = pow(a, k), q = a / d, e = exp(a);
    EXPECT_TRUE(inflate(pk, 1e-12).contains(std::pow(x, k)));
    EXPECT_TRUE(inflate(q, 1e-12).contains(x / y));
    EXPECT_TRUE(inflate(e, 1e-12).contains(std::exp(x)));
  }
}

TEST(IntervalProperty, DegenerateExactness) {
  stochrelax::testing::Gen gen(13);
  for (int i = 0; i < 1000; ++i) {
    const double x = gen.uniform(-3, 3), y = gen.uniform(0.1, 3);
    for (const auto& op : binary_ops()) {
      const Interval r = op.iv(Interval(x), Interval(y));
      EXPECT_DOUBLE_EQ(r.lo(), op.real(x, y));
      EXPECT_DOUBLE_EQ(r.hi(), op.real(x, y));
    }
    EXPECT_DOUBLE_EQ((Interval(x) / Interval(y)).lo(), x / y);
    EXPECT_DOUBLE_EQ(pow(Interval(x), 3).hi(), x * x * x);
    EXPECT_DOUBLE_EQ(exp(Interval(x)).lo(), std::exp(x));
  }
}
