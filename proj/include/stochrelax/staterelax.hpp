#ifndef STOCHRELAX_STATERELAX_HPP
#define STOCHRELAX_STATERELAX_HPP

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "expr.hpp"
#include "interval.hpp"
#include "mccormick.hpp"
#include "model.hpp"
#include "odeint.hpp"

namespace stochrelax {

struct RelaxConfig {
  //! Integrator for the bound ODEs; the dense mesh is what the relaxation
  //! right-hand side interpolates between
  IntegratorConfig bounds = [] {
    IntegratorConfig c;
    c.dense_mesh = 2000;
    return c;
  }();
  //! Integrator for the relaxation ODEs
  IntegratorConfig relax{};
  //! Any bound wider than this aborts with BoundBlowup
  double width_cap = 1e6;
  //! Relative outward widening applied to bound right-hand sides
  double inflation = 0.0;
};

////////////////////////////////////////////////////////////////////////
//! Interval enclosure X(t) of every solution over a subdomain P x W,
//! stored on a dense mesh and linearly interpolated in between.
////////////////////////////////////////////////////////////////////////
class StateBoundTrajectory {
 public:
  StateBoundTrajectory() = default;
  explicit StateBoundTrajectory(Trajectory mesh) : mesh_(std::move(mesh)) {}

  std::size_t nx() const noexcept { return mesh_.dim() / 2; }
  const Trajectory& mesh() const noexcept { return mesh_; }

  IntervalBox at_index(std::size_t i) const {
    IntervalBox out(nx());
    const auto y = mesh_.state(i);
    for (std::size_t k = 0; k < nx(); ++k) out[k] = ordered(y[k], y[nx() + k]);
    return out;
  }

  //! Bounds at time t, written into `out` (size nx)
  void at(double t, std::span<Interval> out) const {
    const auto times = mesh_.times();
    const std::size_t n = nx();
    if (t <= times.front()) return fill(0, out);
    if (t >= times.back()) return fill(times.size() - 1, out);
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double s = (t - times[lo]) / (times[hi] - times[lo]);
    const auto a = mesh_.state(lo), b = mesh_.state(hi);
    for (std::size_t k = 0; k < n; ++k)
      out[k] = ordered(a[k] + s * (b[k] - a[k]), a[n + k] + s * (b[n + k] - a[n + k]));
  }

  IntervalBox at(double t) const {
    IntervalBox out(nx());
    at(t, out);
    return out;
  }

  IntervalBox final() const { return at_index(mesh_.size() - 1); }

 private:
  static Interval ordered(double lo, double hi) { return lo <= hi ? Interval(lo, hi) : Interval(hi, lo); }
  void fill(std::size_t i, std::span<Interval> out) const {
    const auto y = mesh_.state(i);
    for (std::size_t k = 0; k < nx(); ++k) out[k] = ordered(y[k], y[nx() + k]);
  }

  Trajectory mesh_;
};

namespace detail {

inline void check_subbox(const IntervalBox& inner, const IntervalBox& outer, const char* what) {
  if (inner.size() != outer.size())
    throw Error(ErrorKind::DimensionError, std::string(what) + " has the wrong dimension");
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const double slack = 1e-12 * (1.0 + outer[i].mag());
    if (inner[i].lo() < outer[i].lo() - slack || inner[i].hi() > outer[i].hi() + slack)
      throw Error(ErrorKind::OutOfRange, std::string(what) + " is not contained in its host box");
  }
}

inline void check_point(std::span<const double> point, const IntervalBox& box, const char* what) {
  if (point.size() != box.size())
    throw Error(ErrorKind::DimensionError, std::string(what) + " has the wrong dimension");
  for (std::size_t i = 0; i < box.size(); ++i)
    if (!box[i].contains(point[i]))
      throw Error(ErrorKind::OutOfRange, std::string(what) + " lies outside its box");
}

}  // namespace detail

//! Naive differential-inequality bounds on P x W: the k-th bound equation
//! evaluates f_k in interval arithmetic with x_k flattened to its own bound
inline StateBoundTrajectory compute_state_bounds(const Model& model, const IntervalBox& P,
                                                 const IntervalBox& W, const RelaxConfig& cfg = {}) {
  detail::check_subbox(P, model.pbox, "P");
  detail::check_subbox(W, model.wbox, "W");
  const std::size_t nx = static_cast<std::size_t>(model.nx);

  const auto x0 = evaluate<Interval>(model.x0, {Interval(model.t0), P, W, {}});
  std::vector<double> y0(2 * nx);
  for (std::size_t k = 0; k < nx; ++k) {
    y0[k] = x0[k].lo();
    y0[nx + k] = x0[k].hi();
  }

  std::vector<Interval> xs(nx), scratch;
  const auto blowup = [&](double t) {
    return Error(ErrorKind::BoundBlowup,
                 "state bounds exceed the width cap at t = " + std::to_string(t) +
                     "; shrink the horizon or the subdomain");
  };
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    try {
      for (std::size_t m = 0; m < nx; ++m) {
        const double lo = y[m], hi = y[nx + m];
        xs[m] = lo <= hi ? Interval(lo, hi) : Interval(hi, lo);
        if (xs[m].width() > cfg.width_cap) throw blowup(t);
      }
      const Env<Interval> env{Interval(t), P, W, xs};
      for (std::size_t k = 0; k < nx; ++k) {
        const Interval full = xs[k];
        xs[k] = Interval(y[k]);
        dy[k] = inflate(evaluate_output(model.f, k, env, scratch), cfg.inflation).lo();
        xs[k] = Interval(y[nx + k]);
        dy[nx + k] = inflate(evaluate_output(model.f, k, env, scratch), cfg.inflation).hi();
        xs[k] = full;
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFiniteState) throw blowup(t);
      throw;
    }
  };
  Trajectory mesh = [&] {
    try {
      return integrate(rhs, y0, model.t0, model.tf, cfg.bounds);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFiniteState || e.kind() == ErrorKind::StepFailure) throw blowup(model.tf);
      throw;
    }
  }();
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const auto y = mesh.state(i);
    for (std::size_t k = 0; k < nx; ++k)
      if (std::fabs(y[nx + k] - y[k]) > cfg.width_cap) throw blowup(mesh.time(i));
  }
  return StateBoundTrajectory(std::move(mesh));
}

////////////////////////////////////////////////////////////////////////
//! Solution of the auxiliary relaxation system at one point (p, w) of a
//! subdomain P x W. Mesh rows hold [xcv_1..xcv_n, xcc_1..xcc_n], already
//! cut against the state bounds.
////////////////////////////////////////////////////////////////////////
struct RelaxationTrajectory {
  Trajectory mesh;
  std::vector<double> p;
  std::vector<double> w;
  IntervalBox P;
  IntervalBox W;
  IntervalBox terminal_bounds;

  std::size_t nx() const noexcept { return mesh.dim() / 2; }
  std::span<const double> cv(std::size_t i) const { return mesh.state(i).first(nx()); }
  std::span<const double> cc(std::size_t i) const { return mesh.state(i).last(nx()); }
};

//! Integrates the relaxation ODEs. Inside the k-th right-hand side the k-th
//! state is flattened to xcv_k (convex equation) or xcc_k (concave equation)
//! before McCormick evaluation of f_k; other states enter with their current
//! (cv, cc) pair, and all of them are cut against X(t).
inline RelaxationTrajectory solve_relaxation_ode(const Model& model, const IntervalBox& P, const IntervalBox& W,
                                                 std::span<const double> p, std::span<const double> w,
                                                 const StateBoundTrajectory& bounds,
                                                 const RelaxConfig& cfg = {}) {
  detail::check_point(p, P, "p");
  detail::check_point(w, W, "w");
  const std::size_t nx = static_cast<std::size_t>(model.nx);
  if (bounds.nx() != nx) throw Error(ErrorKind::DimensionError, "state bounds do not match the model");

  std::vector<McCormick> pv, wv;
  for (std::size_t j = 0; j < p.size(); ++j) pv.push_back(McCormick::variable(p[j], P[j]));
  for (std::size_t j = 0; j < w.size(); ++j) wv.push_back(McCormick::variable(w[j], W[j]));

  const auto x0 = evaluate<McCormick>(model.x0, {McCormick(model.t0), pv, wv, {}});
  std::vector<double> y0(2 * nx);
  for (std::size_t k = 0; k < nx; ++k) {
    y0[k] = x0[k].cv();
    y0[nx + k] = x0[k].cc();
  }

  std::vector<Interval> X(nx);
  std::vector<McCormick> xs(nx), scratch;
  std::vector<double> cut_cv(nx), cut_cc(nx);
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    bounds.at(t, X);
    for (std::size_t m = 0; m < nx; ++m) {
      cut_cv[m] = X[m].clamp(y[m]);
      cut_cc[m] = X[m].clamp(y[nx + m]);
      xs[m] = McCormick::state(cut_cv[m], cut_cc[m], X[m]);
    }
    const Env<McCormick> env{McCormick(t), pv, wv, xs};
    for (std::size_t k = 0; k < nx; ++k) {
      const McCormick pair = xs[k];
      xs[k] = McCormick::state(cut_cv[k], cut_cv[k], X[k]);
      dy[k] = evaluate_output(model.f, k, env, scratch).cv();
      xs[k] = McCormick::state(cut_cc[k], cut_cc[k], X[k]);
      dy[nx + k] = evaluate_output(model.f, k, env, scratch).cc();
      xs[k] = pair;
    }
  };

  RelaxationTrajectory out;
  out.mesh = integrate(rhs, y0, model.t0, model.tf, cfg.relax);
  // report the cut relaxations max(xcv, X.lo), min(xcc, X.hi)
  Trajectory cut(2 * nx);
  std::vector<double> row(2 * nx);
  for (std::size_t i = 0; i < out.mesh.size(); ++i) {
    bounds.at(out.mesh.time(i), X);
    const auto y = out.mesh.state(i);
    for (std::size_t k = 0; k < nx; ++k) {
      row[k] = std::max(y[k], X[k].lo());
      row[nx + k] = std::min(y[nx + k], X[k].hi());
    }
    cut.push(out.mesh.time(i), row);
  }
  out.mesh = std::move(cut);
  out.p.assign(p.begin(), p.end());
  out.w.assign(w.begin(), w.end());
  out.P = P;
  out.W = W;
  out.terminal_bounds = bounds.final();
  return out;
}

//! (G^cv, G^cc) at the trajectory's evaluation point: McCormick evaluation of g
//! with the terminal state relaxations wrapped against X(tf)
inline std::pair<double, double> eval_terminal_relaxation(const Model& model, const RelaxationTrajectory& traj) {
  const std::size_t nx = traj.nx();
  const std::size_t last = traj.mesh.size() - 1;
  if (traj.mesh.time(last) != model.tf)
    throw Error(ErrorKind::InvalidArgument, "relaxation trajectory does not reach tf");
  std::vector<McCormick> pv, wv, xs;
  for (std::size_t j = 0; j < traj.p.size(); ++j) pv.push_back(McCormick::variable(traj.p[j], traj.P[j]));
  for (std::size_t j = 0; j < traj.w.size(); ++j) wv.push_back(McCormick::variable(traj.w[j], traj.W[j]));
  const auto cv = traj.cv(last), cc = traj.cc(last);
  for (std::size_t k = 0; k < nx; ++k) xs.push_back(McCormick::state(cv[k], cc[k], traj.terminal_bounds[k]));
  const auto g = evaluate<McCormick>(model.g, {McCormick(model.tf), pv, wv, xs});
  return {g[0].cv(), g[0].cc()};
}

//! Convenience: bounds, relaxation ODE and terminal evaluation for one point
inline std::pair<double, double> terminal_relaxation(const Model& model, const IntervalBox& P, const IntervalBox& W,
                                                     std::span<const double> p, std::span<const double> w,
                                                     const StateBoundTrajectory& bounds,
                                                     const RelaxConfig& cfg = {}) {
  RelaxConfig local = cfg;
  local.relax.record = false;
  return eval_terminal_relaxation(model, solve_relaxation_ode(model, P, W, p, w, bounds, local));
}

//! Real-semantics simulation of the original ODE; returns x(tf)
inline std::vector<double> simulate(const Model& model, std::span<const double> p, std::span<const double> w,
                                    const IntegratorConfig& cfg = {}) {
  const auto x0 = evaluate<double>(model.x0, {model.t0, p, w, {}});
  std::vector<double> scratch, out;
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    evaluate<double>(model.f, {t, p, w, y}, scratch, out);
    std::copy(out.begin(), out.end(), dy.begin());
  };
  IntegratorConfig local = cfg;
  local.record = false;
  const Trajectory traj = integrate(rhs, x0, model.t0, model.tf, local);
  const auto back = traj.back();
  return {back.begin(), back.end()};
}

//! g(p, w, x(tf)) along the simulated solution
inline double simulate_cost(const Model& model, std::span<const double> p, std::span<const double> w,
                            const IntegratorConfig& cfg = {}) {
  const auto x = simulate(model, p, w, cfg);
  return evaluate<double>(model.g, {model.tf, p, w, x})[0];
}

}  // namespace stochrelax

#endif  // STOCHRELAX_STATERELAX_HPP
