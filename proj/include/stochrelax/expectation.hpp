#ifndef STOCHRELAX_EXPECTATION_HPP
#define STOCHRELAX_EXPECTATION_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "staterelax.hpp"
#include "stochastics.hpp"

namespace stochrelax {

////////////////////////////////////////////////////////////////////////
//! Partition-based relaxations of the expected cost over a parameter box P.
//!
//! For p in P,
//!   cv(p) = sum_i Prob(W_i) * G^cv_{P x W_i}(p, E[w | W_i])
//!   cc(p) = sum_i Prob(W_i) * G^cc_{P x W_i}(p, E[w | W_i])
//! By Jensen's inequality applied cellwise, cv is a convex underestimator
//! and cc a concave overestimator of E[g(p, w, x(tf, p, w))] on P.
//!
//! State bounds depend on (P, W_i) only, so they are computed once per cell
//! at construction and shared by every later evaluation. The object is
//! immutable after construction and may be evaluated from several threads.
////////////////////////////////////////////////////////////////////////
class ExpectedValueRelaxation {
 public:
  ExpectedValueRelaxation(const Model& model, IntervalBox P, Partition partition, RelaxConfig cfg = {},
                          int jobs = 1)
      : model_(&model), P_(std::move(P)), partition_(std::move(partition)), cfg_(std::move(cfg)), jobs_(jobs) {
    detail::check_subbox(P_, model.pbox, "P");
    if (partition_.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty partition");
    cfg_.relax.record = false;
    bounds_.resize(partition_.size());
    parallel_for(partition_.size(), jobs_, [&](std::size_t i) {
      bounds_[i] = compute_state_bounds(model, P_, partition_.cells[i], cfg_);
    });
  }

  const IntervalBox& P() const noexcept { return P_; }
  const Partition& partition() const noexcept { return partition_; }
  const StateBoundTrajectory& cell_bounds(std::size_t i) const { return bounds_.at(i); }
  const Model& model() const noexcept { return *model_; }
  const RelaxConfig& config() const noexcept { return cfg_; }

  //! (G^cv_{P x W_i}, G^cc_{P x W_i}) at (p, E[w | W_i])
  std::pair<double, double> cell(std::size_t i, std::span<const double> p) const {
    return terminal_relaxation(*model_, P_, partition_.cells[i], p, partition_.mean[i], bounds_[i], cfg_);
  }

  //! (cv(p), cc(p)); cells are summed in index order for reproducibility
  std::pair<double, double> operator()(std::span<const double> p) const {
    detail::check_point(p, P_, "p");
    std::vector<std::pair<double, double>> terms(partition_.size());
    parallel_for(terms.size(), jobs_, [&](std::size_t i) { terms[i] = cell(i, p); });
    double cv = 0.0, cc = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      cv += partition_.probability[i] * terms[i].first;
      cc += partition_.probability[i] * terms[i].second;
    }
    return {cv, cc};
  }

 private:
  const Model* model_;
  IntervalBox P_;
  Partition partition_;
  RelaxConfig cfg_;
  int jobs_;
  std::vector<StateBoundTrajectory> bounds_;
};

inline std::pair<double, double> relax_expected_value(const Model& model, const IntervalBox& P,
                                                      const Partition& partition, std::span<const double> p,
                                                      const RelaxConfig& cfg = {}, int jobs = 1) {
  return ExpectedValueRelaxation(model, P, partition, cfg, jobs)(p);
}

struct SearchConfig {
  double initial_fraction = 0.25;  // initial step as a fraction of each box width
  double contraction = 0.5;
  double tolerance = 1e-4;         // stop once every step < tolerance * width
  int budget = 500;                // maximum objective evaluations
};

struct LowerBoundResult {
  double bound = 0.0;
  std::vector<double> argmin;
  int evaluations = 0;
  double final_step_fraction = 0.0;  // largest remaining step / width
};

//! Minimizes the convex relaxation cv(p) over P by compass search from the
//! box midpoint. The value returned is the relaxation at the incumbent: a
//! search-accuracy estimate of the convex program's minimum.
inline LowerBoundResult lower_bound(const ExpectedValueRelaxation& relax, const SearchConfig& search = {}) {
  const IntervalBox& P = relax.P();
  const std::size_t n = P.size();
  LowerBoundResult out;
  std::vector<double> x(n), step(n), width(n);
  for (std::size_t d = 0; d < n; ++d) {
    x[d] = P[d].mid();
    width[d] = P[d].width();
    step[d] = search.initial_fraction * width[d];
  }
  double fx = relax(x).first;
  out.evaluations = 1;

  const auto converged = [&] {
    for (std::size_t d = 0; d < n; ++d)
      if (width[d] > 0.0 && step[d] >= search.tolerance * width[d]) return false;
    return true;
  };
  std::vector<double> y(n);
  while (!converged() && out.evaluations < search.budget) {
    bool improved = false;
    for (std::size_t d = 0; d < n && !improved && out.evaluations < search.budget; ++d) {
      if (width[d] == 0.0) continue;
      for (double sign : {-1.0, 1.0}) {
        y = x;
        y[d] = P[d].clamp(x[d] + sign * step[d]);
        if (y[d] == x[d]) continue;
        const double fy = relax(y).first;
        ++out.evaluations;
        if (fy < fx) {
          x = y;
          fx = fy;
          improved = true;
          break;
        }
        if (out.evaluations >= search.budget) break;
      }
    }
    if (!improved)
      for (auto& s : step) s *= search.contraction;
  }
  out.bound = fx;
  out.argmin = x;
  for (std::size_t d = 0; d < n; ++d)
    if (width[d] > 0.0) out.final_step_fraction = std::max(out.final_step_fraction, step[d] / width[d]);
  return out;
}

inline LowerBoundResult lower_bound(const Model& model, const IntervalBox& P, const Partition& partition,
                                    const SearchConfig& search = {}, const RelaxConfig& cfg = {}, int jobs = 1) {
  return lower_bound(ExpectedValueRelaxation(model, P, partition, cfg, jobs), search);
}

//! Upper bound on E[g] at a fixed p: the concave relaxation on the degenerate box [p,p]
inline double upper_bound(const Model& model, std::span<const double> p, const Partition& partition,
                          const RelaxConfig& cfg = {}, int jobs = 1) {
  IntervalBox point;
  for (double v : p) point.emplace_back(v);
  return ExpectedValueRelaxation(model, point, partition, cfg, jobs)(p).second;
}

struct SaaEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

//! Sample-average estimate of E[g] at p (a validation oracle, not a bound).
//! Draws are made sequentially from one generator, so the result does not
//! depend on `jobs`.
inline SaaEstimate saa_estimate(const Model& model, std::span<const double> p, std::size_t n, std::uint64_t seed,
                                const IntegratorConfig& integ = {}, int jobs = 1) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "SAA needs at least 2 samples");
  detail::check_point(p, model.pbox, "p");
  Rng rng(seed);
  const auto ws = sample(model.dist, rng, n);
  std::vector<double> values(n);
  parallel_for(n, jobs, [&](std::size_t i) { values[i] = simulate_cost(model, p, ws[i], integ); });
  // shifted by the first value so a constant sample has exactly zero spread
  double shift = 0.0;
  for (double v : values) shift += v - values[0];
  const double mean = values[0] + shift / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n, seed};
}

struct SurfaceRow {
  std::vector<double> p;
  double cv;
  double cc;
};

//! Tensor grid of counts[d] >= 2 points per dimension (endpoints included), last dimension fastest
inline std::vector<std::vector<double>> grid_points(const IntervalBox& P, std::span<const int> counts) {
  if (counts.size() != P.size()) throw Error(ErrorKind::DimensionError, "grid counts do not match P");
  std::size_t total = 1;
  for (int c : counts) {
    if (c < 2) throw Error(ErrorKind::InvalidArgument, "grid counts must be at least 2");
    total *= static_cast<std::size_t>(c);
  }
  std::vector<std::vector<double>> out;
  std::vector<int> idx(P.size(), 0);
  for (std::size_t r = 0; r < total; ++r) {
    std::vector<double> p(P.size());
    for (std::size_t d = 0; d < P.size(); ++d)
      p[d] = idx[d] + 1 == counts[d] ? P[d].hi() : P[d].lo() + P[d].width() * idx[d] / (counts[d] - 1);
    out.push_back(std::move(p));
    for (std::size_t d = P.size(); d-- > 0;) {
      if (++idx[d] < counts[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

inline std::vector<SurfaceRow> relaxation_surface(const ExpectedValueRelaxation& relax, std::span<const int> counts,
                                                  int jobs = 1) {
  const auto points = grid_points(relax.P(), counts);
  std::vector<SurfaceRow> rows(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    const auto [cv, cc] = relax(points[i]);
    rows[i] = {points[i], cv, cc};
  });
  return rows;
}

struct BoundReport {
  IntervalBox P;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> minimizer_estimate;
  std::vector<double> upper_point;
  std::size_t partition_size = 0;
  std::vector<int> partition_counts;
  int search_evaluations = 0;
  double search_final_step_fraction = 0.0;
  double lower_seconds = 0.0;
  double upper_seconds = 0.0;
};

//! Lower bound over P and upper bound at the search incumbent
inline BoundReport bound_report(const Model& model, const IntervalBox& P, const Partition& partition,
                                const SearchConfig& search = {}, const RelaxConfig& cfg = {}, int jobs = 1) {
  using clock = std::chrono::steady_clock;
  BoundReport r;
  r.P = P;
  r.partition_size = partition.size();
  r.partition_counts = partition.counts;
  const auto t0 = clock::now();
  const auto lb = lower_bound(model, P, partition, search, cfg, jobs);
  const auto t1 = clock::now();
  r.lower = lb.bound;
  r.minimizer_estimate = lb.argmin;
  r.search_evaluations = lb.evaluations;
  r.search_final_step_fraction = lb.final_step_fraction;
  r.upper_point = lb.argmin;
  r.upper = upper_bound(model, r.upper_point, partition, cfg, jobs);
  const auto t2 = clock::now();
  r.lower_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.upper_seconds = std::chrono::duration<double>(t2 - t1).count();
  return r;
}

}  // namespace stochrelax

#endif  // STOCHRELAX_EXPECTATION_HPP
