#ifndef STOCHRELAX_MCCORMICK_HPP
#define STOCHRELAX_MCCORMICK_HPP

#include <algorithm>
#include <cmath>
#include <ostream>

#include "errors.hpp"
#include "interval.hpp"

namespace stochrelax {

////////////////////////////////////////////////////////////////////////
//! Generalized McCormick relaxation value.
//!
//! Holds the values at the current evaluation point of a convex
//! underestimator (cv) and a concave overestimator (cc) of some factorable
//! quantity, together with an interval enclosure of that quantity over the
//! current subdomain. Every operation ends with a cut against the box, so
//! box.lo <= cv <= cc <= box.hi holds for every value produced here.
//!
//! Univariate compositions use the mid rule
//!   cv = u_cv(mid(a.cv, a.cc, argmin u_cv)),  cc = u_cc(mid(a.cv, a.cc, argmax u_cc))
//! which stays valid when a.cv/a.cc are themselves relaxations rather than
//! identity values. No subgradients are propagated.
////////////////////////////////////////////////////////////////////////
class McCormick {
 public:
  //! Tolerance on crossed cv > cc pairs before they are rejected
  static constexpr double kPairTolerance = 1e-9;

  McCormick() = default;
  McCormick(double constant) : cv_(constant), cc_(constant), box_(constant) {}  // NOLINT

  //! Identity relaxation of a coordinate ranging over `range`
  static McCormick variable(double value, const Interval& range) {
    if (!range.contains(value))
      throw Error(ErrorKind::OutOfRange, "variable value outside its range");
    return McCormick(value, value, range, Unchecked{});
  }

  //! Wraps externally supplied relaxation values (e.g. ODE state relaxations),
  //! cutting them against `bounds`
  static McCormick state(double cv, double cc, const Interval& bounds) {
    if (!std::isfinite(cv) || !std::isfinite(cc))
      throw Error(ErrorKind::NonFiniteState, "non-finite relaxation value");
    double lo = bounds.clamp(cv);
    double hi = bounds.clamp(cc);
    if (lo > hi) {
      if (lo - hi > kPairTolerance)
        throw Error(ErrorKind::InvalidRelaxationPair, "convex relaxation exceeds concave relaxation");
      lo = hi = 0.5 * (lo + hi);
    }
    return McCormick(lo, hi, bounds, Unchecked{});
  }

  double cv() const noexcept { return cv_; }
  double cc() const noexcept { return cc_; }
  const Interval& box() const noexcept { return box_; }

  friend McCormick operator+(const McCormick& a, const McCormick& b) {
    return cut(a.cv_ + b.cv_, a.cc_ + b.cc_, a.box_ + b.box_);
  }
  friend McCormick operator-(const McCormick& a) {
    return McCormick(-a.cc_, -a.cv_, -a.box_, Unchecked{});
  }
  friend McCormick operator-(const McCormick& a, const McCormick& b) {
    return cut(a.cv_ - b.cc_, a.cc_ - b.cv_, a.box_ - b.box_);
  }
  friend McCormick operator*(const McCormick& a, double c) {
    if (c >= 0.0) return cut(c * a.cv_, c * a.cc_, a.box_ * Interval(c));
    return cut(c * a.cc_, c * a.cv_, a.box_ * Interval(c));
  }
  friend McCormick operator*(double c, const McCormick& a) { return a * c; }

  //! Bilinear envelope composed with the factor relaxations
  friend McCormick operator*(const McCormick& a, const McCormick& b) {
    const double xL = a.box_.lo(), xU = a.box_.hi();
    const double yL = b.box_.lo(), yU = b.box_.hi();
    const auto lower = [](double coef, double cv, double cc) { return std::min(coef * cv, coef * cc); };
    const auto upper = [](double coef, double cv, double cc) { return std::max(coef * cv, coef * cc); };

    const double under1 = lower(yL, a.cv_, a.cc_) + lower(xL, b.cv_, b.cc_) - xL * yL;
    const double under2 = lower(yU, a.cv_, a.cc_) + lower(xU, b.cv_, b.cc_) - xU * yU;
    const double over1 = upper(yL, a.cv_, a.cc_) + upper(xU, b.cv_, b.cc_) - xU * yL;
    const double over2 = upper(yU, a.cv_, a.cc_) + upper(xL, b.cv_, b.cc_) - xL * yU;
    return cut(std::max(under1, under2), std::min(over1, over2), a.box_ * b.box_);
  }

  friend McCormick operator/(const McCormick& a, const McCormick& b) {
    const McCormick q = a * inv(b);
    return cut(q.cv_, q.cc_, a.box_ / b.box_);
  }

  McCormick& operator+=(const McCormick& b) { return *this = *this + b; }
  McCormick& operator-=(const McCormick& b) { return *this = *this - b; }
  McCormick& operator*=(const McCormick& b) { return *this = *this * b; }

  friend McCormick inv(const McCormick& a);
  friend McCormick pow(const McCormick& a, int k);
  friend McCormick exp(const McCormick& a);

 private:
  struct Unchecked {};
  McCormick(double cv, double cc, const Interval& box, Unchecked) : cv_(cv), cc_(cc), box_(box) {}

  // Final cut: intersect the relaxation values with the enclosure.
  static McCormick cut(double cv, double cc, const Interval& box) {
    if (!std::isfinite(cv) || !std::isfinite(cc))
      throw Error(ErrorKind::NonFiniteState, "non-finite relaxation value");
    cv = box.clamp(cv);
    cc = box.clamp(cc);
    if (cv > cc) {
      const double scale = 1.0 + box.mag();
      if (cv - cc > kPairTolerance * scale)
        throw Error(ErrorKind::InvalidRelaxationPair, "crossed relaxation values after composition");
      cv = cc = 0.5 * (cv + cc);
    }
    return McCormick(cv, cc, box, Unchecked{});
  }

  template <class Convex, class Concave>
  static McCormick compose(const McCormick& a, Convex&& convex, double argmin, Concave&& concave,
                           double argmax, const Interval& box) {
    const auto mid = [&](double z) { return std::clamp(z, a.cv_, a.cc_); };
    return cut(convex(mid(argmin)), concave(mid(argmax)), box);
  }

  double cv_ = 0.0;
  double cc_ = 0.0;
  Interval box_{};
};

inline std::ostream& operator<<(std::ostream& os, const McCormick& a) {
  return os << "{cv=" << a.cv() << ", cc=" << a.cc() << ", box=" << a.box() << '}';
}

namespace envelope {

//! Secant of f through (lo, f(lo)) and (hi, f(hi)), evaluated at x
template <class F>
double secant(F&& f, double lo, double hi, double x) {
  const double flo = f(lo);
  if (hi == lo) return flo;
  return flo + (f(hi) - flo) / (hi - lo) * (x - lo);
}

//! Tangency point z > 0 of the line through (lo, lo^k) touching x^k, odd k >= 3, lo < 0.
//! Root of (k-1) z^k - k lo z^(k-1) + lo^k on the bracket (0, -lo].
inline double odd_power_tangent(double lo, int k) {
  const auto h = [&](double z) {
    return (k - 1) * std::pow(z, k) - k * lo * std::pow(z, k - 1) + std::pow(lo, k);
  };
  const auto dh = [&](double z) {
    return k * (k - 1) * (std::pow(z, k - 1) - lo * std::pow(z, k - 2));
  };
  double a = 0.0, b = -lo;
  double z = 0.5 * (a + b);
  for (int it = 0; it < 50; ++it) {
    const double hz = h(z);
    if (hz == 0.0) return z;
    if (hz < 0.0) a = z; else b = z;
    const double d = dh(z);
    double next = d != 0.0 ? z - hz / d : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::fabs(next - z) <= 1e-12 * std::max(1.0, std::fabs(z))) return next;
    z = next;
  }
  return z;
}

//! Convex envelope of x^k (odd k) on [lo,hi], lo < 0 < hi
inline double odd_power_convex(double x, double lo, double hi, int k) {
  const auto f = [k](double v) { return std::pow(v, k); };
  const double z = odd_power_tangent(lo, k);
  if (z >= hi) return secant(f, lo, hi, x);
  if (x >= z) return f(x);
  return secant(f, lo, z, x);
}

//! Concave envelope of x^k (odd k) on [lo,hi], by odd symmetry of the convex one
inline double odd_power_concave(double x, double lo, double hi, int k) {
  return -odd_power_convex(-x, -hi, -lo, k);
}

}  // namespace envelope

inline McCormick inv(const McCormick& a) {
  const Interval box = inv(a.box_);  // throws on sign-spanning denominators
  const double lo = a.box_.lo(), hi = a.box_.hi();
  const auto f = [](double v) { return 1.0 / v; };
  const auto chord = [&](double v) { return envelope::secant(f, lo, hi, v); };
  if (lo > 0.0) return McCormick::compose(a, f, hi, chord, lo, box);
  return McCormick::compose(a, chord, hi, f, lo, box);
}

inline McCormick pow(const McCormick& a, int k) {
  if (k < 0) return pow(inv(a), -k);
  if (k == 0) return McCormick(1.0);
  if (k == 1) return a;
  const Interval box = pow(a.box_, k);
  const double lo = a.box_.lo(), hi = a.box_.hi();
  const auto f = [k](double v) { return std::pow(v, k); };
  const auto chord = [&](double v) { return envelope::secant(f, lo, hi, v); };
  if (k % 2 == 0) {
    const double argmin = a.box_.clamp(0.0);
    const double argmax = f(hi) >= f(lo) ? hi : lo;
    return McCormick::compose(a, f, argmin, chord, argmax, box);
  }
  if (lo >= 0.0) return McCormick::compose(a, f, lo, chord, hi, box);
  if (hi <= 0.0) return McCormick::compose(a, chord, lo, f, hi, box);
  const auto convex = [&](double v) { return envelope::odd_power_convex(v, lo, hi, k); };
  const auto concave = [&](double v) { return envelope::odd_power_concave(v, lo, hi, k); };
  return McCormick::compose(a, convex, lo, concave, hi, box);
}

inline McCormick exp(const McCormick& a) {
  const Interval box = exp(a.box_);
  const double lo = a.box_.lo(), hi = a.box_.hi();
  const auto f = [](double v) { return std::exp(v); };
  const auto chord = [&](double v) { return envelope::secant(f, lo, hi, v); };
  return McCormick::compose(a, f, lo, chord, hi, box);
}

}  // namespace stochrelax

#endif  // STOCHRELAX_MCCORMICK_HPP
