#ifndef STOCHRELAX_ODEINT_HPP
#define STOCHRELAX_ODEINT_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"

namespace stochrelax {

struct IntegratorConfig {
  enum class Method { Rk4Fixed, Rk45Adaptive };

  Method method = Method::Rk45Adaptive;
  int steps = 1000;         // Rk4Fixed
  double rtol = 1e-8;       // Rk45Adaptive
  double atol = 1e-10;
  double min_step = 1e-12;  // relative to the span length
  double max_step = 0.0;    // absolute; 0 means unlimited
  int dense_mesh = 0;       // if > 0, at least this many steps across the span
  bool record = true;       // keep every mesh point, otherwise only the endpoints

  void validate() const {
    if (method == Method::Rk4Fixed && steps < 1)
      throw Error(ErrorKind::InvalidArgument, "fixed-step integration needs steps >= 1");
    if (!(rtol > 0.0) || !(atol > 0.0))
      throw Error(ErrorKind::InvalidArgument, "integrator tolerances must be positive");
    if (dense_mesh < 0 || max_step < 0.0)
      throw Error(ErrorKind::InvalidArgument, "invalid mesh settings");
  }
};

//! Solution mesh; states stored row-major, one row per mesh time
class Trajectory {
 public:
  explicit Trajectory(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return t_.size(); }
  std::span<const double> times() const noexcept { return t_; }
  double time(std::size_t i) const { return t_.at(i); }
  std::span<const double> state(std::size_t i) const { return {y_.data() + i * dim_, dim_}; }
  std::span<const double> back() const { return state(size() - 1); }

  void push(double t, std::span<const double> y) {
    t_.push_back(t);
    y_.insert(y_.end(), y.begin(), y.end());
  }
  void replace_back(double t, std::span<const double> y) {
    t_.back() = t;
    std::copy(y.begin(), y.end(), y_.end() - static_cast<std::ptrdiff_t>(dim_));
  }

 private:
  std::size_t dim_;
  std::vector<double> t_;
  std::vector<double> y_;
};

namespace detail {

inline void check_finite(std::span<const double> y, double t) {
  for (double v : y)
    if (!std::isfinite(v))
      throw Error(ErrorKind::NonFiniteState, "non-finite state at t = " + std::to_string(t));
}

}  // namespace detail

////////////////////////////////////////////////////////////////////////
//! Integrates dy/dt = rhs(t, y) over [t0, tf].
//!
//! `rhs` is called as rhs(double t, std::span<const double> y, std::span<double> dy).
//! The returned mesh starts at t0 and ends at tf exactly. The adaptive
//! method is Dormand-Prince 5(4) with local error control on the fifth
//! order solution.
////////////////////////////////////////////////////////////////////////
template <class Rhs>
Trajectory integrate(Rhs&& rhs, std::span<const double> y0, double t0, double tf,
                     const IntegratorConfig& cfg = {}) {
  cfg.validate();
  if (!(t0 < tf)) throw Error(ErrorKind::InvalidArgument, "integration span needs t0 < tf");
  detail::check_finite(y0, t0);

  const std::size_t n = y0.size();
  const double span = tf - t0;
  Trajectory traj(n);
  traj.push(t0, y0);
  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);

  const auto emit = [&](double t, std::span<const double> state) {
    if (cfg.record || traj.size() == 1) traj.push(t, state);
    else traj.replace_back(t, state);
  };

  if (cfg.method == IntegratorConfig::Method::Rk4Fixed) {
    const int steps = std::max(cfg.steps, cfg.dense_mesh);
    const double h = span / steps;
    for (int i = 0; i < steps; ++i) {
      const double t = t0 + i * h;
      const double tn = i + 1 == steps ? tf : t0 + (i + 1) * h;
      const double hs = tn - t;
      rhs(t, std::span<const double>(y), std::span<double>(k1));
      for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * hs * k1[j];
      rhs(t + 0.5 * hs, std::span<const double>(tmp), std::span<double>(k2));
      for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * hs * k2[j];
      rhs(t + 0.5 * hs, std::span<const double>(tmp), std::span<double>(k3));
      for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + hs * k3[j];
      rhs(tn, std::span<const double>(tmp), std::span<double>(k4));
      for (std::size_t j = 0; j < n; ++j) y[j] += hs / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      detail::check_finite(y, tn);
      emit(tn, y);
    }
    return traj;
  }

  // Dormand-Prince 5(4) tableau
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  double hmax = cfg.max_step > 0.0 ? cfg.max_step : span;
  if (cfg.dense_mesh > 0) hmax = std::min(hmax, span / cfg.dense_mesh);
  const double hmin = cfg.min_step * span;

  double t = t0;
  rhs(t, std::span<const double>(y), std::span<double>(k1));
  // starting step from the scale of y and y'
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double sc = cfg.atol + cfg.rtol * std::fabs(y[j]);
    d0 = std::max(d0, std::fabs(y[j]) / sc);
    d1 = std::max(d1, std::fabs(k1[j]) / sc);
  }
  double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
  h = std::clamp(h, std::max(hmin, 1e-6 * span), hmax);

  while (t < tf) {
    bool last = false;
    if (t + h >= tf || tf - (t + h) < 1e-12 * span) {
      h = tf - t;
      last = true;
    }
    for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + h * a21 * k1[j];
    rhs(t + c2 * h, std::span<const double>(tmp), std::span<double>(k2));
    for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + h * (a31 * k1[j] + a32 * k2[j]);
    rhs(t + c3 * h, std::span<const double>(tmp), std::span<double>(k3));
    for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + h * (a41 * k1[j] + a42 * k2[j] + a43 * k3[j]);
    rhs(t + c4 * h, std::span<const double>(tmp), std::span<double>(k4));
    for (std::size_t j = 0; j < n; ++j)
      tmp[j] = y[j] + h * (a51 * k1[j] + a52 * k2[j] + a53 * k3[j] + a54 * k4[j]);
    rhs(t + c5 * h, std::span<const double>(tmp), std::span<double>(k5));
    for (std::size_t j = 0; j < n; ++j)
      tmp[j] = y[j] + h * (a61 * k1[j] + a62 * k2[j] + a63 * k3[j] + a64 * k4[j] + a65 * k5[j]);
    const double tn = last ? tf : t + h;
    rhs(tn, std::span<const double>(tmp), std::span<double>(k6));
    for (std::size_t j = 0; j < n; ++j)
      ynew[j] = y[j] + h * (b1 * k1[j] + b3 * k3[j] + b4 * k4[j] + b5 * k5[j] + b6 * k6[j]);
    rhs(tn, std::span<const double>(ynew), std::span<double>(k7));

    double err = 0.0;
    bool finite = true;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = h * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j] + e6 * k6[j] + e7 * k7[j]);
      const double sc = cfg.atol + cfg.rtol * std::max(std::fabs(y[j]), std::fabs(ynew[j]));
      err += (e / sc) * (e / sc);
      finite = finite && std::isfinite(ynew[j]);
    }
    err = n > 0 ? std::sqrt(err / n) : 0.0;
    if (!finite || !std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      t = tn;
      y.swap(ynew);
      k1.swap(k7);  // first-same-as-last
      detail::check_finite(y, t);
      emit(t, y);
      const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h = std::min(h * std::clamp(grow, 0.2, 5.0), hmax);
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (h < hmin)
        throw Error(ErrorKind::StepFailure, "step size underflow at t = " + std::to_string(t));
    }
  }
  return traj;
}

}  // namespace stochrelax

#endif  // STOCHRELAX_ODEINT_HPP
