#ifndef STOCHRELAX_STOCHASTICS_HPP
#define STOCHRELAX_STOCHASTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "interval.hpp"

namespace stochrelax {

inline double erf(double x) { return std::erf(x); }

//! Standard normal density
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

//! Standard normal CDF, via erfc so that the lower tail keeps full relative accuracy
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

//! P[alpha <= Z <= beta] for standard normal Z, evaluated on the side avoiding cancellation
inline double normal_mass(double alpha, double beta) {
  if (alpha >= 0.0)
    return 0.5 * (std::erfc(alpha / std::numbers::sqrt2) - std::erfc(beta / std::numbers::sqrt2));
  if (beta <= 0.0)
    return 0.5 * (std::erfc(-beta / std::numbers::sqrt2) - std::erfc(-alpha / std::numbers::sqrt2));
  return 0.5 * (erf(beta / std::numbers::sqrt2) - erf(alpha / std::numbers::sqrt2));
}

struct Uniform {
  double a, b;
};

//! Normal(mu, sigma^2) conditioned on [a,b]
struct TruncatedNormal {
  double mu, sigma, a, b;
};

using Marginal = std::variant<Uniform, TruncatedNormal>;

inline Interval support(const Marginal& m) {
  return std::visit([](const auto& d) { return Interval(d.a, d.b); }, m);
}

inline void validate(const Marginal& m) {
  std::visit(
      [](const auto& d) {
        if (!(d.a < d.b) || !std::isfinite(d.a) || !std::isfinite(d.b))
          throw Error(ErrorKind::InvalidArgument, "distribution support needs finite a < b");
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, TruncatedNormal>) {
          if (!(d.sigma > 0.0) || !std::isfinite(d.mu))
            throw Error(ErrorKind::InvalidArgument, "truncated normal needs sigma > 0");
        }
      },
      m);
}

//! Probability that one marginal falls in [l,u] (a subset of its support)
inline double marginal_probability(const Marginal& m, double l, double u) {
  if (const auto* d = std::get_if<Uniform>(&m)) return (u - l) / (d->b - d->a);
  const auto& d = std::get<TruncatedNormal>(m);
  const double za = (d.a - d.mu) / d.sigma, zb = (d.b - d.mu) / d.sigma;
  const double zl = (l - d.mu) / d.sigma, zu = (u - d.mu) / d.sigma;
  return normal_mass(zl, zu) / normal_mass(za, zb);
}

//! E[w | l <= w <= u] for one marginal
inline double marginal_conditional_mean(const Marginal& m, double l, double u) {
  if (std::holds_alternative<Uniform>(m)) return 0.5 * (l + u);
  const auto& d = std::get<TruncatedNormal>(m);
  const double alpha = (l - d.mu) / d.sigma, beta = (u - d.mu) / d.sigma;
  const double mass = normal_mass(alpha, beta);
  const double v = d.mu + d.sigma * (normal_pdf(alpha) - normal_pdf(beta)) / mass;
  return std::clamp(v, l, u);
}

////////////////////////////////////////////////////////////////////////
//! Product distribution of independent marginals with compact support.
////////////////////////////////////////////////////////////////////////
class DistributionSpec {
 public:
  DistributionSpec() = default;
  explicit DistributionSpec(std::vector<Marginal> marginals) : marginals_(std::move(marginals)) {
    if (marginals_.empty()) throw Error(ErrorKind::InvalidArgument, "distribution needs components");
    for (const auto& m : marginals_) validate(m);
  }

  std::size_t dim() const noexcept { return marginals_.size(); }
  const Marginal& operator[](std::size_t i) const { return marginals_.at(i); }
  std::span<const Marginal> marginals() const noexcept { return marginals_; }

  IntervalBox support() const {
    IntervalBox box;
    for (const auto& m : marginals_) box.push_back(stochrelax::support(m));
    return box;
  }

  std::vector<double> mean() const {
    std::vector<double> out;
    for (const auto& m : marginals_) {
      const Interval s = stochrelax::support(m);
      out.push_back(marginal_conditional_mean(m, s.lo(), s.hi()));
    }
    return out;
  }

 private:
  std::vector<Marginal> marginals_;
};

namespace detail {

inline void check_cell(const DistributionSpec& dist, const IntervalBox& cell) {
  if (cell.size() != dist.dim())
    throw Error(ErrorKind::DimensionError, "cell dimension does not match distribution");
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const Interval s = support(dist[i]);
    const double slack = 1e-12 * (1.0 + s.mag());
    if (cell[i].lo() < s.lo() - slack || cell[i].hi() > s.hi() + slack)
      throw Error(ErrorKind::CellOutsideSupport, "cell leaves the distribution support");
  }
}

}  // namespace detail

inline double cell_probability(const DistributionSpec& dist, const IntervalBox& cell) {
  detail::check_cell(dist, cell);
  double prob = 1.0;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const Interval s = support(dist[i]);
    prob *= marginal_probability(dist[i], s.clamp(cell[i].lo()), s.clamp(cell[i].hi()));
  }
  return prob;
}

//! Componentwise E[w | w in cell]; independence makes each component depend on its own marginal only
inline std::vector<double> cell_conditional_mean(const DistributionSpec& dist, const IntervalBox& cell) {
  constexpr double kZeroProbability = 1e-300;
  detail::check_cell(dist, cell);
  std::vector<double> out;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const Interval s = support(dist[i]);
    const double l = s.clamp(cell[i].lo()), u = s.clamp(cell[i].hi());
    if (marginal_probability(dist[i], l, u) < kZeroProbability)
      throw Error(ErrorKind::ZeroProbabilityCell, "conditional mean of a null cell");
    out.push_back(marginal_conditional_mean(dist[i], l, u));
  }
  return out;
}

////////////////////////////////////////////////////////////////////////
//! Tensor-grid interval partition of the support with per-cell
//! probability and conditional mean.
////////////////////////////////////////////////////////////////////////
struct Partition {
  std::vector<int> counts;
  std::vector<IntervalBox> cells;
  std::vector<double> probability;
  std::vector<std::vector<double>> mean;

  std::size_t size() const noexcept { return cells.size(); }
};

//! Equal-width grid with counts[i] cells along dimension i; the last dimension varies fastest
inline Partition uniform_partition(const DistributionSpec& dist, std::span<const int> counts) {
  if (counts.size() != dist.dim())
    throw Error(ErrorKind::DimensionError, "partition counts do not match distribution dimension");
  const IntervalBox box = dist.support();
  std::vector<std::vector<Interval>> axes(box.size());
  std::size_t total = 1;
  for (std::size_t d = 0; d < box.size(); ++d) {
    if (counts[d] < 1) throw Error(ErrorKind::InvalidArgument, "partition counts must be positive");
    const double lo = box[d].lo(), hi = box[d].hi();
    for (int k = 0; k < counts[d]; ++k) {
      const double a = k == 0 ? lo : lo + (hi - lo) * k / counts[d];
      const double b = k + 1 == counts[d] ? hi : lo + (hi - lo) * (k + 1) / counts[d];
      axes[d].emplace_back(a, b);
    }
    total *= static_cast<std::size_t>(counts[d]);
  }

  Partition part;
  part.counts.assign(counts.begin(), counts.end());
  std::vector<int> idx(box.size(), 0);
  for (std::size_t c = 0; c < total; ++c) {
    IntervalBox cell;
    for (std::size_t d = 0; d < box.size(); ++d) cell.push_back(axes[d][idx[d]]);
    part.probability.push_back(cell_probability(dist, cell));
    part.mean.push_back(cell_conditional_mean(dist, cell));
    part.cells.push_back(std::move(cell));
    for (std::size_t d = box.size(); d-- > 0;) {
      if (++idx[d] < counts[d]) break;
      idx[d] = 0;
    }
  }
  return part;
}

////////////////////////////////////////////////////////////////////////
//! Seeded generator with a platform-independent mapping to [0,1).
////////////////////////////////////////////////////////////////////////
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  //! Uniform on the open interval (0,1)
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

//! Inverse CDF of one marginal at probability level u in (0,1)
inline double marginal_quantile(const Marginal& m, double u) {
  if (const auto* d = std::get_if<Uniform>(&m)) return d->a + (d->b - d->a) * u;
  const auto& d = std::get<TruncatedNormal>(m);
  const double za = (d.a - d.mu) / d.sigma, zb = (d.b - d.mu) / d.sigma;
  const double total = normal_mass(za, zb);
  // bracketed Newton on F(x) - u over [a,b]
  double lo = d.a, hi = d.b;
  double x = d.a + (d.b - d.a) * u;
  for (int it = 0; it < 100; ++it) {
    const double z = (x - d.mu) / d.sigma;
    const double resid = normal_mass(za, z) / total - u;
    if (resid < 0.0) lo = x; else hi = x;
    const double slope = normal_pdf(z) / (d.sigma * total);
    double next = slope > 0.0 ? x - resid / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-12 * (d.b - d.a)) return next;
    x = next;
  }
  return x;
}

//! n i.i.d. draws; each vector has one entry per component
inline std::vector<std::vector<double>> sample(const DistributionSpec& dist, Rng& rng, std::size_t n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample count must be positive");
  std::vector<std::vector<double>> out(n, std::vector<double>(dist.dim()));
  for (auto& w : out)
    for (std::size_t i = 0; i < dist.dim(); ++i) w[i] = marginal_quantile(dist[i], rng.uniform());
  return out;
}

}  // namespace stochrelax

#endif  // STOCHRELAX_STOCHASTICS_HPP
