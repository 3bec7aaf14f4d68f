#ifndef STOCHRELAX_INTERVAL_HPP
#define STOCHRELAX_INTERVAL_HPP

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "errors.hpp"

namespace stochrelax {

////////////////////////////////////////////////////////////////////////
//! Closed real interval [lo,hi] with finite endpoints.
//!
//! Arithmetic uses plain round-to-nearest floating point: enclosures are
//! exact up to rounding in the last bit, which is adequate for bounding at
//! the scales this library targets. Callers wanting slack can widen results
//! with inflate().
////////////////////////////////////////////////////////////////////////
class Interval {
 public:
  constexpr Interval() noexcept = default;
  Interval(double point) : Interval(point, point) {}  // NOLINT: implicit point conversion
  Interval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw Error(ErrorKind::NonFiniteState, "interval endpoints must be finite");
    if (!(lo <= hi)) throw Error(ErrorKind::InvalidArgument, "interval with lo > hi");
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return hi_ - lo_; }
  double mid() const noexcept { return 0.5 * (lo_ + hi_); }
  double mag() const noexcept { return std::max(std::fabs(lo_), std::fabs(hi_)); }
  bool is_point() const noexcept { return lo_ == hi_; }

  bool contains(double x) const noexcept { return lo_ <= x && x <= hi_; }
  bool contains(const Interval& other) const noexcept {
    return lo_ <= other.lo_ && other.hi_ <= hi_;
  }

  //! Nearest point of the interval to x
  double clamp(double x) const noexcept { return std::min(std::max(x, lo_), hi_); }

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

using IntervalBox = std::vector<Interval>;

inline std::ostream& operator<<(std::ostream& os, const Interval& a) {
  return os << '[' << a.lo() << ',' << a.hi() << ']';
}

inline Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi())};
}

//! Relative outward widening; rel = 0 returns the input
inline Interval inflate(const Interval& a, double rel) {
  if (rel <= 0.0) return a;
  return {a.lo() - rel * std::fabs(a.lo()), a.hi() + rel * std::fabs(a.hi())};
}

inline Interval operator+(const Interval& a, const Interval& b) {
  return {a.lo() + b.lo(), a.hi() + b.hi()};
}

inline Interval operator-(const Interval& a) { return {-a.hi(), -a.lo()}; }

inline Interval operator-(const Interval& a, const Interval& b) {
  return {a.lo() - b.hi(), a.hi() - b.lo()};
}

inline Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = a.lo() * b.lo(), p2 = a.lo() * b.hi();
  const double p3 = a.hi() * b.lo(), p4 = a.hi() * b.hi();
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains(0.0)) throw Error(ErrorKind::DivisionByZeroInterval, "denominator contains zero");
  const double q1 = a.lo() / b.lo(), q2 = a.lo() / b.hi();
  const double q3 = a.hi() / b.lo(), q4 = a.hi() / b.hi();
  return {std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4})};
}

inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator-=(Interval& a, const Interval& b) { return a = a - b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }

//! Tight image of x -> x^k for k >= 0
inline Interval pow(const Interval& a, int k) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "negative integer exponent");
  if (k == 0) return {1.0, 1.0};
  const double l = std::pow(a.lo(), k), h = std::pow(a.hi(), k);
  if (k % 2 == 1) return {l, h};
  if (a.lo() >= 0.0) return {l, h};
  if (a.hi() <= 0.0) return {h, l};
  return {0.0, std::pow(a.mag(), k)};
}

inline Interval exp(const Interval& a) { return {std::exp(a.lo()), std::exp(a.hi())}; }

//! Reciprocal of a sign-definite interval
inline Interval inv(const Interval& a) { return Interval(1.0) / a; }

}  // namespace stochrelax

#endif  // STOCHRELAX_INTERVAL_HPP
